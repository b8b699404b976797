import json

import pytest
from hypothesis import given, settings, strategies as st

from qme.config import parse_config, schema
from qme.errors import ParseError, ValidationError

MINIMAL = '{"system": {"n_sites": 1, "epsilon": [0.5], "beta": 1.0}, "detectors": [{"site": 1, "kappa": 0.4}]}'


def doc(**overrides):
    base = {"system": {"n_sites": 2, "epsilon": [0.5, 0.5], "coupling": {"1,2": -0.2}},
            "detectors": [{"site": 1, "kappa": 0.2}]}
    base.update(overrides)
    return json.dumps(base)


def field_of(text):
    with pytest.raises(ValidationError) as err:
        parse_config(text)
    return err.value.field


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.system.n_sites == 1 and cfg.system.beta == 1.0
    assert cfg.detectors[0].kappa == 0.4
    assert cfg.search.grid_spacing == 0.1 and cfg.search.k_max == 200
    assert cfg.method == "hybrid" and cfg.branch_policy == "all" and cfg.sweep is None


def test_beta_default():
    cfg = parse_config('{"system": {"n_sites": 1, "epsilon": [0.5]}}')
    assert cfg.system.beta == 1.0


@pytest.mark.parametrize("text, field", [
    ('{"system": {"n_sites": 1, "epsilon": [0.5]}, "detectors": [{"site": 1, "kappa": 1.5}]}', "detectors[0].kappa"),
    (doc(system={"n_sites": 2, "epsilon": [0.5, 0.5], "coupling": {"2,1": 0.1}}), "system.coupling.2,1"),
    (doc(system={"n_sites": 2, "epsilon": [0.5, 0.5], "coupling": {"1,3": 0.1}}), "system.coupling.1,3"),
    (doc(system={"n_sites": 2, "epsilon": [0.5]}), "system.epsilon"),
    (doc(system={"n_sites": 2}), "system.epsilon"),
    (doc(system={"n_sites": 1, "epsilon": [0.5], "beta": -1}), "system.beta"),
    (doc(detectors=[{"site": 3, "kappa": 0.2}]), "detectors[0].site"),
    (doc(colour="blue"), "colour"),
    (doc(search={"grid_spacing": 0}), "search.grid_spacing"),
    (doc(search={"grid_range": [1.0, -1.0]}), "search.grid_range"),
    (doc(sweep={"kind": "spiral"}), "sweep.kind"),
    (doc(sweep={"values": [0.1], "range": {"start": 0, "stop": 1, "num": 3}}), "sweep.values"),
    (doc(feedback={"mode": "local", "theta": [0.1]}), "feedback.theta"),
    (doc(branch_policy="best"), "branch_policy"),
])
def test_validation_errors_name_the_field(text, field):
    assert field_of(text) == field


def test_global_mode_needs_two_sites():
    text = '{"system": {"n_sites": 1, "epsilon": [0.5]}, "feedback": {"mode": "global"}}'
    assert field_of(text) == "feedback.mode"


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        parse_config('{"system": {\n  "n_sites": 1,\n  "epsilon": [0.5,]\n}}')
    assert (err.value.line, err.value.column) == (3, 19)


def test_round_trip_full_config():
    text = doc(
        system={"n_sites": 2, "epsilon": [0.05, 0.1], "coupling": {"1,2": -0.2}, "beta": 2.0},
        feedback={"mode": "local", "theta": [0.1, -0.2]},
        search={"method": "both", "grid_points": 181, "cluster_tol": 1e-4},
        sweep={"kind": "beta", "values": [1, 2], "target": {"work": 0.02, "efficiency": 0.7}},
        output={"path": "out.csv", "format": "csv"},
        branch_policy="expected",
    )
    cfg = parse_config(text)
    again = parse_config(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 4),
    st.floats(0.01, 10, allow_nan=False),
    st.lists(st.floats(0, 1), min_size=0, max_size=3),
    st.sampled_from(["all", "plus_only", "expected"]),
)
def test_round_trip_property(n, beta, kappas, policy):
    data = {
        "system": {"n_sites": n, "epsilon": [0.1 * (j + 1) for j in range(n)], "beta": beta,
                   "coupling": {f"{j},{j + 1}": -0.1 for j in range(1, n)}},
        "detectors": [{"site": 1 + i % n, "kappa": k} for i, k in enumerate(kappas)],
        "branch_policy": policy,
    }
    cfg = parse_config(json.dumps(data))
    assert parse_config(cfg.to_json()) == cfg


def test_schema_rejects_unknown_keys_everywhere():
    s = schema()
    assert s["additionalProperties"] is False
    for name in ("system", "feedback", "search", "sweep", "output"):
        assert s["properties"][name]["additionalProperties"] is False
