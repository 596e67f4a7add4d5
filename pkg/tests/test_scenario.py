from __future__ import annotations

import json

import pytest

from ionbound.scenario import PRESETS, ConfigError, ScenarioSpec, from_dict, load, preset


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate_and_round_trip(name):
    spec = preset(name)
    doc = spec.to_json()
    doc.pop("name")
    again = from_dict({**doc, "name": name})
    assert again == spec


def test_preset_overrides_merge_nested_fields():
    spec = from_dict({"schema_version": 1, "preset": "tf-breather",
                      "profile": {"perturbation": 0.1}, "T_final": 3.0})
    assert spec.profile["perturbation"] == 0.1
    assert spec.profile["r_in"] == PRESETS["tf-breather"]["profile"]["r_in"]
    assert spec.T_final == 3.0 and spec.name == "tf-breather"


@pytest.mark.parametrize("doc, field", [
    ({"preset": "tf-static"}, "schema_version"),
    ({"schema_version": 1, "preset": "nope"}, "preset"),
    ({"schema_version": 1, "preset": "tf-static", "colour": 1}, "colour"),
    ({"schema_version": 1, "preset": "tf-static", "dt": -1.0}, "dt"),
    ({"schema_version": 1, "preset": "tf-static", "cadence": 0.01}, "cadence"),
    ({"schema_version": 1, "preset": "tf-static", "resolution": {"m": 4}}, "resolution.m"),
    ({"schema_version": 1, "preset": "vlasov-bound", "resolution": {"n_x": 8}}, "resolution"),
    ({"schema_version": 1, "preset": "tf-static", "profile": {"kind": "fermi-ball"}}, "profile.kind"),
    ({"schema_version": 1, "preset": "tf-static", "solver": "pic"}, "solver"),
    ({"schema_version": 1, "name": "x"}, "solver"),
    ([], "<root>"),
])
def test_invalid_configs_name_the_field(doc, field):
    with pytest.raises(ConfigError) as exc:
        from_dict(doc)
    assert exc.value.field == field


def test_refinement_scales_space_and_time_but_not_l():
    spec = preset("vlasov-bound")
    fine = spec.refined(1)
    assert fine.resolution == {"n_r": 256, "n_w": 256, "n_l": 8}
    assert fine.dt == spec.dt / 2 and fine.name.endswith("@+1")
    assert preset("tf-static").refined(-1).resolution == {"m": 256}


def test_load_reports_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load(p)
    p.write_text(json.dumps({"schema_version": 1, "preset": "tf-static"}))
    assert load(p) == preset("tf-static")


def test_direct_construction_validates():
    with pytest.raises(ConfigError):
        ScenarioSpec(name="x", solver="vlasov", Z=0.0, profile={"kind": "fermi-ball"},
                     resolution={"n_r": 16, "n_w": 16, "n_l": 8}, dt=0.1, T_final=1.0, cadence=0.1)
