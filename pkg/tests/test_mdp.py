import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdpu.mdp import (
    InvalidSpec,
    MdpSpec,
    OracleTooLarge,
    StationaryPolicy,
    evaluate_policy,
    opt_oracle,
    plan_finite_horizon,
    policy_totals,
    validate_spec,
)

from oracles import exact_tables, expectimax, q_value


def chain():
    return MdpSpec(
        states=["s1", "s2"],
        actions={"s1": ["a", "b"], "s2": ["a"]},
        transitions={("s1", "a"): {"s1": 1.0}, ("s1", "b"): {"s2": 1.0}, ("s2", "a"): {"s2": 1.0}},
        rewards={("s1", "a", "s1"): 1.0, ("s2", "a", "s2"): 2.0},
    )


@st.composite
def small_mdps(draw, max_states=3, max_actions=3):
    n = draw(st.integers(1, max_states))
    states = [f"s{i}" for i in range(n)]
    actions, transitions, rewards = {}, {}, {}
    for s in states:
        acts = [f"a{i}" for i in range(draw(st.integers(1, max_actions)))]
        actions[s] = acts
        for a in acts:
            weights = draw(st.lists(st.integers(0, 4), min_size=n, max_size=n).filter(any))
            total = sum(weights)
            row = {s2: w / total for s2, w in zip(states, weights) if w}
            transitions[(s, a)] = row
            for s2 in row:
                rewards[(s, a, s2)] = draw(st.sampled_from([0.0, 0.25, 0.5, 1.0, 2.0]))
    return MdpSpec(states, actions, transitions, rewards)


def test_validate_reports_bad_mass_with_pair():
    spec = chain()
    spec.transitions[("s1", "b")] = {"s2": 0.99}
    report = validate_spec(spec)
    assert not report.ok
    assert "(s1, b)" in str(report)


def test_validate_catches_negative_reward_and_unknown_target():
    spec = chain()
    spec.rewards[("s1", "a", "s1")] = -1.0
    spec.transitions[("s2", "a")] = {"s3": 1.0}
    text = str(validate_spec(spec))
    assert "negative reward" in text
    assert "unknown state 's3'" in text


def test_plan_rejects_invalid_spec():
    spec = chain()
    spec.transitions[("s1", "a")] = {"s1": 0.5}
    with pytest.raises(InvalidSpec):
        plan_finite_horizon(spec, 2)


def test_chain_plans_by_horizon():
    spec = chain()
    # one step: a collects 1; two steps: a-a and b-a tie at 2, first listed wins
    assert plan_finite_horizon(spec, 1).action(0, "s1") == "a"
    p2 = plan_finite_horizon(spec, 2)
    assert p2.value(0, "s1") == 2.0 and p2.action(0, "s1") == "a"
    p3 = plan_finite_horizon(spec, 3)
    assert p3.value(0, "s1") == 4.0 and p3.action(0, "s1") == "b"


def test_tie_break_follows_listing_order():
    spec = MdpSpec(
        ["s"], {"s": ["y", "x"]},
        {("s", "x"): {"s": 1.0}, ("s", "y"): {"s": 1.0}},
        {("s", "x", "s"): 1.0, ("s", "y", "s"): 1.0},
    )
    assert plan_finite_horizon(spec, 3).action(0, "s") == "y"
    spec.actions["s"] = ["x", "y"]
    assert plan_finite_horizon(spec, 3).action(0, "s") == "x"


def test_evaluate_policy_matches_totals():
    spec = chain()
    pi = StationaryPolicy({"s1": "b", "s2": "a"})
    assert evaluate_policy(spec, pi, "s1", 10) == pytest.approx(18 / 10)
    totals = policy_totals(spec, pi, 10)
    assert totals.tolist() == [18.0, 20.0]


def test_opt_oracle_chain():
    value, pi = opt_oracle(chain(), 1000)
    assert value == pytest.approx(1.998)
    assert pi.choice == {"s1": "b", "s2": "a"}


def test_opt_oracle_cap():
    with pytest.raises(OracleTooLarge):
        opt_oracle(chain(), 10, cap=1)


def test_evaluate_rejects_unavailable_action():
    with pytest.raises(ValueError):
        evaluate_policy(chain(), StationaryPolicy({"s1": "c", "s2": "a"}), "s1", 3)


@settings(max_examples=60)
@given(small_mdps(), st.integers(1, 3))
def test_plan_matches_exhaustive_tree(spec, T):
    plan = plan_finite_horizon(spec, T)
    P, R = exact_tables(spec.states, spec.actions, spec.transitions, spec.rewards)
    for s in spec.states:
        exact, best = expectimax(P, R, spec.actions, s, T)
        assert abs(plan.value(0, s) - float(exact)) <= 1e-12 * max(1.0, float(exact))
        # the chosen action is an exact maximiser, or loses only to float rounding
        chosen = plan.action(0, s)
        if chosen not in best:
            gap = exact - q_value(P, R, spec.actions, s, chosen, T)
            assert float(gap) <= 1e-12 * max(1.0, float(exact))


@settings(max_examples=60)
@given(small_mdps(), st.integers(1, 6))
def test_plan_dominates_every_stationary_policy(spec, T):
    plan = plan_finite_horizon(spec, T)
    for combo in itertools.product(*(spec.actions[s] for s in spec.states)):
        pi = StationaryPolicy(dict(zip(spec.states, combo)))
        totals = policy_totals(spec, pi, T)
        assert np.all(plan.values[0] >= totals - 1e-9)


@settings(max_examples=40)
@given(small_mdps(), st.integers(1, 6))
def test_values_nondecreasing_in_horizon(spec, T):
    # rewards are nonnegative, so one more step never hurts
    a = plan_finite_horizon(spec, T).values[0]
    b = plan_finite_horizon(spec, T + 1).values[0]
    assert np.all(b >= a - 1e-12)
