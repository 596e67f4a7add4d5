"""Run a scenario: build the initial state, step, record diagnostics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import hydro, vlasov
from .constants import PhysicalConstants
from .diagnostics import Certificate, certificate, hydro_record, vlasov_record
from .groundstate import stability_constant, uniform_norm_bound
from .scenario import ScenarioSpec

log = logging.getLogger(__name__)


class RunAborted(RuntimeError):
    """Non-finite state; ``records`` holds everything recorded before it."""

    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


@dataclass
class RunResult:
    spec: ScenarioSpec
    records: list
    certificate: Certificate
    norm_bound: float
    final_state: object = None
    aborted: str | None = None
    extras: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([r.t for r in self.records])


def initial_state(spec: ScenarioSpec):
    c = PhysicalConstants(spec.q)
    p = {k: v for k, v in spec.profile.items() if k != "kind"}
    kind = spec.profile["kind"]
    res = spec.resolution
    if spec.solver == "vlasov":
        if kind == "tf-equilibrium":
            return vlasov.tf_equilibrium_state(spec.Z, constants=c, **res, **p)
        if kind == "fermi-ball":
            N = p.pop("N", spec.Z)
            return vlasov.fermi_ball_state(spec.Z, N, constants=c, **res, **p)
        return vlasov.shifted_blob_state(spec.Z, constants=c, **res, **p)
    if kind == "tf-equilibrium":
        return hydro.tf_static_state(spec.Z, m=res["m"], constants=c, **p)
    return hydro.dilation_state(m=res["m"], **p)


def _record(spec, state, dt_bound=math.nan):
    if spec.solver == "vlasov":
        return vlasov_record(state, spec.R_values, spec.ball_radius, dt_bound)
    return hydro_record(state, spec.R_values, spec.ball_radius)


def _finite(state):
    if isinstance(state, vlasov.PhaseShellState):
        return bool(np.all(np.isfinite(state.f)))
    return bool(np.all(np.isfinite(state.rho)) and np.all(np.isfinite(state.phi)))


def run(spec: ScenarioSpec, progress=None) -> RunResult:
    """Deterministic run of ``spec``.

    Kinetic runs take fixed steps of ``spec.dt`` and check the admissible
    step at every record; fluid runs take the largest CFL step up to
    ``spec.dt``.  A non-finite state stops the run and keeps the records so far.
    """
    state = initial_state(spec)
    records = []
    aborted = None
    n_rec = int(round(spec.T_final / spec.cadence))
    per = max(1, int(round(spec.cadence / spec.dt)))
    for k in range(n_rec + 1):
        bound = math.nan
        if spec.solver == "vlasov":
            bound = vlasov.admissible_dt(state, vlasov.state_field(state))
            if k < n_rec and spec.dt > bound:
                raise vlasov.StepSizeError(spec.dt, bound)
        records.append(_record(spec, state, bound))
        if progress:
            progress(records[-1])
        if k == n_rec:
            break
        try:
            if spec.solver == "vlasov":
                nxt = vlasov.advance(state, spec.dt, per)
            else:
                nxt = hydro.advance(state, (k + 1) * spec.cadence, dt_max=spec.dt)
        except FloatingPointError as exc:
            aborted = str(exc)
            break
        if not _finite(nxt):
            aborted = f"non-finite state after t={state.t:g}"
            break
        state = nxt
    if aborted:
        log.error("run %s aborted: %s", spec.name, aborted)
    E0 = records[0].energy.total
    alpha = stability_constant(spec.q)
    try:
        bound = uniform_norm_bound(E0, spec.Z, alpha)
    except ValueError:
        bound = math.nan
    cert = certificate(records, spec.Z, radial=True, D=spec.ball_radius)
    return RunResult(spec=spec, records=records, certificate=cert, norm_bound=bound,
                     final_state=state, aborted=aborted)


def energy_drift(result: RunResult, T=None):
    """max_t |E(t) - E(0)| / |E(0)| over t <= T."""
    E = np.array([r.energy.total for r in result.records])
    t = result.times
    sel = t <= (T if T is not None else t[-1]) + 1e-12
    return float(np.max(np.abs(E[sel] - E[0])) / abs(E[0]))


def mass_drift(result: RunResult):
    """max_t |N(t) + escaped(t) - N(0)| / N(0)."""
    N = np.array([r.N + r.escaped for r in result.records])
    return float(np.max(np.abs(N - N[0])) / N[0])


def converge(spec: ScenarioSpec, levels=(-1, 0), T=None):
    """Energy drift at each refinement level and the observed orders
    log2(drift_k / drift_{k+1}) between consecutive levels."""
    if T is not None:
        spec = spec.with_overrides(T_final=float(T))
    drifts = []
    for lv in levels:
        res = run(spec.refined(lv))
        drifts.append(energy_drift(res))
    orders = [math.log2(a / b) if a > 0 and b > 0 else math.nan
              for a, b in zip(drifts[:-1], drifts[1:])]
    return {"levels": list(levels), "energy_drift": drifts, "orders": orders}


def summary(result: RunResult):
    """JSON-ready digest of a run: drifts, bound checks, sign ledger, certificate."""
    recs = result.records
    signs = {}
    for rec in recs:
        for v in rec.virial:
            for k, ok in v.signs().items():
                signs[k] = signs.get(k, True) and ok
    rearr = [r.rearrangement_margin / max(abs(r.energy.kinetic), 1e-300) for r in recs]
    norm = [r.norm_lhs for r in recs]
    doc = {
        "scenario": result.spec.to_json(),
        "solver": result.spec.solver,
        "T": recs[-1].t - recs[0].t,
        "records": len(recs),
        "aborted": result.aborted,
        "energy_initial": recs[0].energy.total,
        "energy_drift": energy_drift(result),
        "mass_drift": mass_drift(result),
        "escaped_final": recs[-1].escaped,
        "max_f": max(r.max_f for r in recs) if result.spec.solver == "vlasov" else None,
        "min_rearrangement_margin_rel": min(rearr),
        "norm_bound": result.norm_bound,
        "max_norm_lhs": max(norm),
        "norm_bound_holds": bool(max(norm) <= result.norm_bound),
        "sign_ledger": signs,
        "certificate": result.certificate.to_json(),
    }
    if result.spec.solver == "tf-hydro":
        doc["phi_gauge"] = "phi(r_max) = 0 at every output (only grad phi is physical)"
    return doc
