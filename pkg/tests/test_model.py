import copy
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdpu.mdp import MdpSpec
from mdpu.model import (
    EXPLORE,
    DmKnowledge,
    MdpuSpec,
    ScenarioError,
    is_compatible,
    load_scenario,
    parse_scenario,
    scenario_to_dict,
    validate_mdpu,
)

from conftest import SCENARIOS


def raw(name):
    return json.loads((SCENARIOS / f"{name}.json").read_text())


def test_every_shipped_scenario_loads_and_is_compatible():
    files = sorted(SCENARIOS.glob("*.json"))
    assert len(files) >= 6
    for path in files:
        spec, knowledge = load_scenario(path)
        assert validate_mdpu(spec, knowledge).ok
        assert is_compatible(spec.mdp, knowledge), path.name


def test_example1_awareness():
    spec, knowledge = load_scenario(SCENARIOS / "example1.json")
    assert spec.mdp.states == ["s1"]
    assert spec.mdp.actions["s1"] == ["a1", "a2"]
    assert spec.initial_actions("s1") == ["a1"]
    assert spec.discovery.kind == "power" and spec.discovery.params["alpha"] == 2.0
    assert spec.r_plus("s1") == 0.0 and spec.r_minus("s1") == 0.0
    assert knowledge.known_k == 2


def test_unknown_field_is_named():
    data = raw("example1")
    data["foo"] = 1
    with pytest.raises(ScenarioError, match="foo"):
        parse_scenario(data)


def test_bad_probability_mass_cites_pair():
    data = raw("hidden2")
    for edge in data["transitions"]:
        if edge["from"] == "s1" and edge["action"] == "go" and edge["to"] == "s2":
            edge["prob"] = 0.89
    with pytest.raises(ScenarioError, match=r"\(s1, go\)"):
        parse_scenario(data)


def test_schema_violation_reports_field_path():
    data = raw("example1")
    data["transitions"][0]["prob"] = "high"
    with pytest.raises(ScenarioError, match="transitions/0/prob"):
        parse_scenario(data)


def test_family_parameters_checked():
    data = raw("example1")
    data["discovery"] = {"family": "power", "c": 0.2}
    with pytest.raises(ScenarioError, match="discovery"):
        parse_scenario(data)


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "x",\n  "states": [,]\n}\n')
    with pytest.raises(ScenarioError, match="line 3 column"):
        load_scenario(path)


def test_reserved_explore_id_rejected():
    data = raw("example1")
    data["actions"]["s1"].append(EXPLORE)
    data["transitions"].append({"from": "s1", "action": EXPLORE, "to": "s1", "prob": 1.0, "reward": 0.0})
    with pytest.raises(ScenarioError, match="reserved"):
        parse_scenario(data)


def test_awareness_must_be_subset():
    data = raw("example1")
    data["aware_actions"]["s1"] = ["a1", "a9"]
    with pytest.raises(ScenarioError, match="a9"):
        parse_scenario(data)
    data = raw("example1")
    data["aware_states"] = ["s1", "s7"]
    with pytest.raises(ScenarioError, match="s7"):
        parse_scenario(data)


def test_explore_rewards_checked():
    data = raw("hidden2")
    data["explore_not_found"]["s1"] = 0.5  # above R+ = 0.1
    with pytest.raises(ScenarioError, match="explore_not_found"):
        parse_scenario(data)
    data = raw("hidden2")
    data["explore_found"]["s2"] = 1.0  # not below the declared rmax of 1
    with pytest.raises(ScenarioError, match="rmax"):
        parse_scenario(data)


def test_compatibility_rules():
    spec, knowledge = load_scenario(SCENARIOS / "hidden2.json")
    mdp = spec.mdp
    assert is_compatible(mdp, knowledge)
    bigger = copy.deepcopy(mdp)
    bigger.rewards[("s2", "jackpot", "s2")] = 1.5
    assert not is_compatible(bigger, knowledge)
    fewer = MdpSpec(["s1"], {"s1": ["stay", "go"]},
                    {("s1", "stay"): {"s1": 1.0}, ("s1", "go"): {"s1": 1.0}}, {})
    assert not is_compatible(fewer, knowledge)
    loose = DmKnowledge(knowledge.aware_states, knowledge.aware_actions)
    assert is_compatible(mdp, loose)


def test_fully_aware_wrapper():
    spec, _ = load_scenario(SCENARIOS / "hidden2.json")
    full = MdpuSpec.fully_aware(spec.mdp)
    assert full.initial_actions("s2") == ["stay", "back", "jackpot"]
    assert validate_mdpu(full).ok


@given(st.sampled_from(sorted(p.stem for p in SCENARIOS.glob("*.json"))))
def test_serialisation_round_trip(name):
    spec, knowledge = load_scenario(SCENARIOS / f"{name}.json")
    again, knowledge2 = parse_scenario(scenario_to_dict(spec, knowledge))
    assert again == spec
    assert knowledge2 == knowledge
