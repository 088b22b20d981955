"""Finite tabular MDPs: validation, finite-horizon planning, exact policy
evaluation and a brute-force optimality oracle for small instances."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

PROB_TOL = 1e-9
ORACLE_CAP = 10**6

State = str
Action = str


class InvalidSpec(ValueError):
    """Raised when an operation receives an MDP that fails validation."""


class OracleTooLarge(RuntimeError):
    """Raised when exhaustive policy enumeration would exceed the cap."""


@dataclass
class ValidationReport:
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self):
        return "valid" if self.ok else "; ".join(self.issues)


@dataclass
class MdpSpec:
    """A finite MDP with state-dependent action sets.

    ``transitions[(s, a)]`` maps next states to probabilities (absent means
    zero) and ``rewards[(s, a, s_next)]`` is the reward realised on that
    edge.  Action lists are ordered; the order is the tie-break order used
    by every planner in the package.
    """

    states: list[State]
    actions: dict[State, list[Action]]
    transitions: dict[tuple[State, Action], dict[State, float]]
    rewards: dict[tuple[State, Action, State], float]

    def reward(self, s: State, a: Action, s_next: State) -> float:
        return self.rewards.get((s, a, s_next), 0.0)

    def expected_reward(self, s: State, a: Action) -> float:
        return sum(p * self.reward(s, a, s2) for s2, p in self.transitions[(s, a)].items())

    @property
    def action_ids(self) -> list[Action]:
        """Distinct action ids across all states, in first-seen order."""
        return list(dict.fromkeys(a for s in self.states for a in self.actions.get(s, [])))

    @property
    def max_reward(self) -> float:
        return max(self.rewards.values(), default=0.0)

    def index(self) -> dict[State, int]:
        return {s: i for i, s in enumerate(self.states)}


@dataclass(frozen=True)
class StationaryPolicy:
    choice: dict[State, Action]

    def __getitem__(self, s: State) -> Action:
        return self.choice[s]


@dataclass
class HorizonPlan:
    """Backward-induction output.

    ``values[h, i]`` is the optimal expected total reward collected in steps
    ``h .. T-1`` starting from ``states[i]``; ``actions[h][s]`` is the action
    that achieves it.  Row ``T`` is all zeros.
    """

    horizon: int
    states: list[State]
    values: np.ndarray
    actions: list[dict[State, Action]]

    def value(self, step: int, s: State) -> float:
        return float(self.values[step, self.states.index(s)])

    def action(self, step: int, s: State) -> Action:
        return self.actions[step][s]

    def first_step_policy(self) -> StationaryPolicy:
        return StationaryPolicy(dict(self.actions[0]))


def validate_spec(spec: MdpSpec) -> ValidationReport:
    issues = []
    states = set(spec.states)
    if len(states) != len(spec.states):
        issues.append("duplicate state ids")
    for s in spec.states:
        acts = spec.actions.get(s)
        if not acts:
            issues.append(f"state {s!r} has no actions")
            continue
        if len(set(acts)) != len(acts):
            issues.append(f"duplicate actions at {s!r}")
        for a in acts:
            probs = spec.transitions.get((s, a))
            if probs is None:
                issues.append(f"missing transitions at ({s}, {a})")
                continue
            for s2, p in probs.items():
                if s2 not in states:
                    issues.append(f"transition ({s}, {a}) -> unknown state {s2!r}")
                if p < 0:
                    issues.append(f"negative probability {p} at ({s}, {a}, {s2})")
            mass = math.fsum(probs.values())
            if abs(mass - 1.0) > PROB_TOL:
                issues.append(f"probability mass {mass:g} != 1 at ({s}, {a})")
    for s in spec.actions:
        if s not in states:
            issues.append(f"actions listed for unknown state {s!r}")
    for (s, a) in spec.transitions:
        if s not in spec.actions or a not in spec.actions[s]:
            issues.append(f"transitions for undeclared pair ({s}, {a})")
    for (s, a, s2), r in spec.rewards.items():
        if (s, a) not in spec.transitions:
            issues.append(f"reward for pair ({s}, {a}) without transitions")
        if r < 0:
            issues.append(f"negative reward {r} at ({s}, {a}, {s2})")
        if not math.isfinite(r):
            issues.append(f"non-finite reward at ({s}, {a}, {s2})")
    return ValidationReport(issues)


def _require_valid(spec: MdpSpec):
    report = validate_spec(spec)
    if not report.ok:
        raise InvalidSpec(str(report))


def _arrays(spec: MdpSpec):
    """Per-state lists of (transition row, expected reward) aligned with action order."""
    idx = spec.index()
    n = len(spec.states)
    rows = {}
    for s in spec.states:
        per_action = []
        for a in spec.actions[s]:
            p = np.zeros(n)
            for s2, prob in spec.transitions[(s, a)].items():
                p[idx[s2]] += prob
            per_action.append((p, spec.expected_reward(s, a)))
        rows[s] = per_action
    return rows


def plan_finite_horizon(spec: MdpSpec, T: int, *, check: bool = True) -> HorizonPlan:
    """Optimal T-step plan by backward induction.

    Ties go to the action listed first at the state.
    """
    if T < 1:
        raise ValueError("horizon must be >= 1")
    if check:
        _require_valid(spec)
    rows = _arrays(spec)
    n = len(spec.states)
    values = np.zeros((T + 1, n))
    actions: list[dict[State, Action]] = [dict() for _ in range(T)]
    for h in range(T - 1, -1, -1):
        nxt = values[h + 1]
        for i, s in enumerate(spec.states):
            best_a, best_q = None, -math.inf
            for a, (p, r) in zip(spec.actions[s], rows[s]):
                q = r + float(p @ nxt)
                if q > best_q:
                    best_a, best_q = a, q
            values[h, i] = best_q
            actions[h][s] = best_a
    return HorizonPlan(T, list(spec.states), values, actions)


def _policy_matrix(spec: MdpSpec, pi: StationaryPolicy):
    idx = spec.index()
    n = len(spec.states)
    P = np.zeros((n, n))
    r = np.zeros(n)
    for s in spec.states:
        a = pi.choice.get(s)
        if a not in spec.actions[s]:
            raise ValueError(f"policy picks unavailable action {a!r} at {s!r}")
        for s2, prob in spec.transitions[(s, a)].items():
            P[idx[s], idx[s2]] += prob
        r[idx[s]] = spec.expected_reward(s, a)
    return P, r


def policy_totals(spec: MdpSpec, pi: StationaryPolicy, T: int) -> np.ndarray:
    """Expected T-step total reward of ``pi`` from every state (state order)."""
    P, r = _policy_matrix(spec, pi)
    total = np.zeros(len(spec.states))
    for _ in range(T):
        total = r + P @ total
    return total


def evaluate_policy(spec: MdpSpec, pi: StationaryPolicy, s: State, T: int) -> float:
    """U_M(s, pi, T): expected average reward over T steps from ``s``.

    Propagates the state distribution forward through the induced chain.
    """
    if T < 1:
        raise ValueError("horizon must be >= 1")
    _require_valid(spec)
    P, r = _policy_matrix(spec, pi)
    dist = np.zeros(len(spec.states))
    dist[spec.index()[s]] = 1.0
    total = 0.0
    for _ in range(T):
        total += float(dist @ r)
        dist = dist @ P
    return total / T


def opt_oracle(spec: MdpSpec, T_eval: int, cap: int = ORACLE_CAP) -> tuple[float, StationaryPolicy]:
    """Best ``min_s U(s, pi, T_eval)`` over all stationary deterministic policies.

    Stands in for Opt(M, eps, T) at desk scale.  The first maximiser in
    enumeration order (states in order, actions in listed order) is returned.
    """
    _require_valid(spec)
    count = math.prod(len(spec.actions[s]) for s in spec.states)
    if count > cap:
        raise OracleTooLarge(f"instance too large for oracle: {count} policies > cap {cap}")
    best_value, best_pi = -math.inf, None
    for combo in itertools.product(*(spec.actions[s] for s in spec.states)):
        pi = StationaryPolicy(dict(zip(spec.states, combo)))
        value = float(np.min(policy_totals(spec, pi, T_eval))) / T_eval
        if value > best_value:
            best_value, best_pi = value, pi
    return best_value, best_pi
