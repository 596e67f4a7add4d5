"""Scenario descriptions, presets and JSON config parsing."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass

from .diagnostics import DEFAULT_BALL, DEFAULT_R

SCHEMA_VERSION = 1
SOLVERS = ("vlasov", "tf-hydro")
PROFILES = {
    "vlasov": ("tf-equilibrium", "fermi-ball", "shifted-blob"),
    "tf-hydro": ("tf-equilibrium", "dilation"),
}
RESOLUTION_KEYS = {"vlasov": ("n_r", "n_w", "n_l"), "tf-hydro": ("m",)}


class ConfigError(ValueError):
    """Invalid scenario; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    solver: str
    Z: float
    profile: dict
    resolution: dict
    dt: float
    T_final: float
    cadence: float
    q: int = 2
    R_values: tuple = DEFAULT_R
    ball_radius: float = DEFAULT_BALL
    seed: int = 0

    def __post_init__(self):
        validate(self)

    def to_json(self):
        d = asdict(self)
        d["R_values"] = list(self.R_values)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def refined(self, level):
        """Same scenario with r and w (or m) and 1/dt scaled by 2**level;
        the l grid is left alone."""
        res = dict(self.resolution)
        for k in RESOLUTION_KEYS[self.solver]:
            if k != "n_l":
                res[k] = int(round(res[k] * 2.0**level))
        return ScenarioSpec(**{**self._fields(), "resolution": res, "dt": self.dt / 2.0**level,
                               "name": f"{self.name}@{level:+d}"})

    def with_overrides(self, **kw):
        return ScenarioSpec(**{**self._fields(), **kw})

    def _fields(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _positive(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise ConfigError(name, f"must be a positive number, got {value!r}")


def validate(spec: ScenarioSpec):
    if spec.solver not in SOLVERS:
        raise ConfigError("solver", f"must be one of {SOLVERS}, got {spec.solver!r}")
    if spec.solver == "vlasov" or spec.profile.get("kind") != "dilation":
        _positive("Z", spec.Z)
    for name in ("dt", "cadence"):
        _positive(name, getattr(spec, name))
    if not isinstance(spec.T_final, (int, float)) or spec.T_final < 0:
        raise ConfigError("T_final", "must be a non-negative number")
    if spec.cadence < spec.dt:
        raise ConfigError("cadence", "must not be shorter than dt")
    if not isinstance(spec.q, int) or spec.q < 1:
        raise ConfigError("q", "must be a positive integer")
    kind = spec.profile.get("kind") if isinstance(spec.profile, dict) else None
    if kind not in PROFILES[spec.solver]:
        raise ConfigError("profile.kind", f"must be one of {PROFILES[spec.solver]}, got {kind!r}")
    for k in RESOLUTION_KEYS[spec.solver]:
        v = spec.resolution.get(k)
        if not isinstance(v, int) or v < 8:
            raise ConfigError(f"resolution.{k}", f"must be an integer >= 8, got {v!r}")
    extra = set(spec.resolution) - set(RESOLUTION_KEYS[spec.solver])
    if extra:
        raise ConfigError("resolution", f"unknown keys {sorted(extra)}")
    if not spec.R_values:
        raise ConfigError("R_values", "need at least one R")
    for R in spec.R_values:
        _positive("R_values", R)
    _positive("ball_radius", spec.ball_radius)


PRESETS = {
    "tf-static": dict(
        solver="tf-hydro", Z=1.0,
        profile={"kind": "tf-equilibrium", "r_in": 0.2, "r_max": 50.0, "perturbation": 0.0},
        resolution={"m": 512}, dt=0.05, T_final=20.0, cadence=0.5,
    ),
    "tf-breather": dict(
        solver="tf-hydro", Z=1.0,
        profile={"kind": "tf-equilibrium", "r_in": 0.2, "r_max": 50.0, "perturbation": 0.05,
                 "perturbation_scale": 1.0},
        resolution={"m": 512}, dt=0.05, T_final=20.0, cadence=0.5,
    ),
    "vlasov-bound": dict(
        solver="vlasov", Z=1.0,
        profile={"kind": "tf-equilibrium", "r_in": 1.0, "r_max": 60.0, "drift": 0.05,
                 "drift_scale": 1.0},
        resolution={"n_r": 128, "n_w": 128, "n_l": 8}, dt=0.02, T_final=80.0, cadence=0.5,
    ),
    "vlasov-overfilled": dict(
        solver="vlasov", Z=1.0,
        profile={"kind": "fermi-ball", "N": 6.0, "radius": 3.0, "r_in": 0.2, "r_max": 60.0},
        resolution={"n_r": 128, "n_w": 64, "n_l": 16}, dt=0.02, T_final=40.0, cadence=0.5,
    ),
}


def preset(name) -> ScenarioSpec:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ScenarioSpec(name=name, **copy.deepcopy(PRESETS[name]))


def from_dict(d) -> ScenarioSpec:
    """Build a scenario from a config document.

    ``{"preset": name, ...}`` starts from a preset and overrides the listed
    fields; otherwise every field is given explicitly.
    """
    if not isinstance(d, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    d = dict(d)
    version = d.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    base = {}
    if "preset" in d:
        name = d.pop("preset")
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}")
        base = {"name": name, **copy.deepcopy(PRESETS[name])}
    known = set(ScenarioSpec.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    merged = {**base, **d}
    for key in ("profile", "resolution"):
        if key in d and key in base:
            merged[key] = {**base[key], **d[key]}
    missing = [k for k in ("name", "solver", "Z", "profile", "resolution", "dt", "T_final", "cadence")
               if k not in merged]
    if missing:
        raise ConfigError(missing[0], "missing")
    if "R_values" in merged:
        merged["R_values"] = tuple(merged["R_values"])
    try:
        return ScenarioSpec(**merged)
    except TypeError as exc:
        raise ConfigError("<root>", str(exc)) from None


def load(path) -> ScenarioSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc)) from None
    return from_dict(doc)
