"""The optimistic approximate model shared by R-MAX and URMAX, and the
R-MAX baseline for fully-aware MDPs."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .env import MdpuEnv, Observation, Recorder
from .mdp import HorizonPlan, MdpSpec, StationaryPolicy, plan_finite_horizon
from .model import EXPLORE
from .theory import k1_rmax

DUMMY = "__dummy__"
_DUMMY_ACTION = "__stay__"


class ApproxModel:
    """The learner's model M' of the world.

    Pairs visited fewer than ``k1`` times lead to the dummy state with reward
    ``rmax``.  Once a pair reaches ``k1`` visits its empirical transition
    frequencies and mean edge rewards are frozen into the model.  With
    ``explore=True`` each state also carries the explore action, modelled
    optimistically until it has been played ``k0`` times since the last
    discovery there, after which it is dropped from the state's action set.
    ``k0=None`` means explore never retires.
    """

    def __init__(self, states, actions, *, rmax: float, k1: int, k0: int | None = None, explore: bool = False):
        self.states: list[str] = list(states)
        self.actions: dict[str, list[str]] = {s: list(actions.get(s, [])) for s in self.states}
        self.rmax = rmax
        self.k1 = k1
        self.k0 = k0
        self.explore = explore
        self.counts: Counter = Counter()
        self.next_counts: dict[tuple[str, str], Counter] = defaultdict(Counter)
        self.reward_sums: dict[tuple[str, str, str], float] = defaultdict(float)
        self.frozen: dict[tuple[str, str], dict[str, float]] = {}
        self.explore_counts: Counter = Counter()
        self.retired: set[str] = set()
        self.version = 0
        self._refreeze()

    # -- bookkeeping ---------------------------------------------------------

    @property
    def action_ids(self) -> list[str]:
        return list(dict.fromkeys(a for s in self.states for a in self.actions[s]))

    def pairs(self):
        for s in self.states:
            for a in self.actions[s]:
                yield s, a

    def is_known(self, s: str, a: str) -> bool:
        if a == EXPLORE:
            return s in self.retired
        return (s, a) in self.frozen

    def all_known(self) -> bool:
        if any((s, a) not in self.frozen for s, a in self.pairs()):
            return False
        return not self.explore or all(s in self.retired for s in self.states)

    def add_state(self, s: str, actions=()) -> None:
        self.states.append(s)
        self.actions[s] = list(actions)
        self.version += 1

    def configure(self, *, rmax: float, k1: int, k0: int | None) -> None:
        """Swap in new thresholds and rebuild known flags from retained counts."""
        self.rmax, self.k1, self.k0 = rmax, k1, k0
        self._refreeze()

    def clear_statistics(self) -> None:
        """Forget visit data but keep awareness."""
        self.counts.clear()
        self.next_counts.clear()
        self.reward_sums.clear()
        self.explore_counts.clear()
        self._refreeze()

    def _refreeze(self) -> None:
        self.frozen = {}
        for s, a in self.pairs():
            if self.counts[(s, a)] >= self.k1:
                self._freeze(s, a)
        self.retired = {s for s in self.states if self.k0 is not None and self.explore_counts[s] >= self.k0}
        self.version += 1

    def _freeze(self, s: str, a: str) -> None:
        n = self.counts[(s, a)]
        self.frozen[(s, a)] = {s2: c / n for s2, c in self.next_counts[(s, a)].items()} if n else {}

    def record(self, s: str, a: str, obs: Observation) -> list[tuple[str, dict]]:
        """Fold one observation in; returns bookkeeping events as (name, fields)."""
        events: list[tuple[str, dict]] = []
        if a == EXPLORE:
            if obs.discovered is not None:
                if obs.discovered not in self.actions[s]:
                    self.actions[s].append(obs.discovered)
                    if self.counts[(s, obs.discovered)] >= self.k1:
                        self._freeze(s, obs.discovered)
                self.explore_counts[s] = 0
                self.retired.discard(s)
                self.version += 1
            else:
                self.explore_counts[s] += 1
                if self.k0 is not None and s not in self.retired and self.explore_counts[s] >= self.k0:
                    self.retired.add(s)
                    self.version += 1
                    events.append(("discovery_known", {"state": s, "plays": self.explore_counts[s]}))
            return events
        s2 = obs.next_state
        self.counts[(s, a)] += 1
        self.next_counts[(s, a)][s2] += 1
        self.reward_sums[(s, a, s2)] += obs.reward
        if s2 not in self.actions:
            events.append(("new_state", {"state": s2}))
        if (s, a) not in self.frozen and self.counts[(s, a)] >= self.k1:
            self._freeze(s, a)
            self.version += 1
            events.append(("known_pair", {"state": s, "action": a, "visits": self.counts[(s, a)]}))
        return events

    def max_observed_reward(self) -> tuple[float, tuple | None]:
        best, where = -math.inf, None
        for key, total in self.reward_sums.items():
            s, a, s2 = key
            n = self.next_counts[(s, a)][s2]
            if n and total / n > best:
                best, where = total / n, key
        return best, where

    # -- planning ------------------------------------------------------------

    def to_mdp(self) -> MdpSpec:
        states = self.states + [DUMMY]
        actions: dict[str, list[str]] = {}
        transitions: dict[tuple[str, str], dict[str, float]] = {}
        rewards: dict[tuple[str, str, str], float] = {}
        for s in self.states:
            # Unknown pairs go first so that value ties resolve toward exploration.
            acts = [a for a in self.actions[s] if (s, a) not in self.frozen]
            if self.explore and s not in self.retired:
                acts.append(EXPLORE)
            acts += [a for a in self.actions[s] if (s, a) in self.frozen]
            if not acts:
                # Nothing left to try here: model the explore action as an inert self-loop.
                acts = [EXPLORE]
                transitions[(s, EXPLORE)] = {s: 1.0}
            actions[s] = acts
            for a in acts:
                if (s, a) in transitions:
                    continue
                probs = self.frozen.get((s, a)) if a != EXPLORE else None
                if probs is None:
                    transitions[(s, a)] = {DUMMY: 1.0}
                    rewards[(s, a, DUMMY)] = self.rmax
                elif not probs:
                    transitions[(s, a)] = {s: 1.0}
                else:
                    transitions[(s, a)] = dict(probs)
                    for s2 in probs:
                        rewards[(s, a, s2)] = self.reward_sums[(s, a, s2)] / self.next_counts[(s, a)][s2]
        actions[DUMMY] = [_DUMMY_ACTION]
        transitions[(DUMMY, _DUMMY_ACTION)] = {DUMMY: 1.0}
        rewards[(DUMMY, _DUMMY_ACTION, DUMMY)] = self.rmax
        return MdpSpec(states, actions, transitions, rewards)

    def plan(self, T: int) -> HorizonPlan:
        return plan_finite_horizon(self.to_mdp(), T, check=False)


def policy_from_plan(plan: HorizonPlan) -> StationaryPolicy:
    """Receding-horizon policy: the plan's first-step action at every real state."""
    return StationaryPolicy({s: a for s, a in plan.actions[0].items() if s != DUMMY})


def complete_policy(policy: StationaryPolicy, mdp: MdpSpec) -> StationaryPolicy:
    """Extend a learned policy to every state of the true MDP.

    States the learner never saw, or where it would explore, fall back to
    the first listed action so the result can be evaluated exactly.
    """
    choice = {}
    for s in mdp.states:
        a = policy.choice.get(s)
        choice[s] = a if a in mdp.actions[s] else mdp.actions[s][0]
    return StationaryPolicy(choice)


@dataclass
class RunReport:
    status: str
    policy: StationaryPolicy
    plan: HorizonPlan
    model: ApproxModel
    steps: int
    k1: int
    events: list[dict] = field(default_factory=list)


class _EventLog:
    """Collects bookkeeping events and forwards them to an optional recorder."""

    def __init__(self, env: MdpuEnv, recorder: Recorder | None):
        self.env = env
        self.recorder = recorder
        self.events: list[dict] = []

    def emit(self, name: str, **fields) -> None:
        rec = {"step": self.env.step_count, "event": name, **fields}
        self.events.append(rec)
        if self.recorder is not None:
            self.recorder(rec)


def rmax_run(
    env: MdpuEnv,
    n_states: int,
    n_actions: int,
    rmax: float,
    T: int,
    eps: float,
    delta: float,
    step_budget: int,
    *,
    k1: int | None = None,
    recorder: Recorder | None = None,
) -> RunReport:
    """R-MAX on an environment that exposes every action at every state.

    Starts wherever ``env`` currently is.  Plays the current T-step optimal
    plan for T steps or until a pair becomes known, then replans.
    """
    K1 = k1 if k1 is not None else k1_rmax(n_states, n_actions, T, rmax, eps, delta)
    log = _EventLog(env, recorder)
    s0 = env.state
    model = ApproxModel([s0], {s0: env.aware_actions(s0)}, rmax=rmax, k1=K1)
    steps = 0
    plan, planned_version = None, None
    status = "converged"
    while not model.all_known():
        if steps >= step_budget:
            status = "budget-exhausted"
            break
        if planned_version != model.version:
            plan, planned_version = model.plan(T), model.version
            log.emit("replan")
        for i in range(T):
            s = env.state
            a = plan.actions[i][s]
            obs = env.step(a)
            steps += 1
            for name, fields in model.record(s, a, obs):
                if name == "new_state":
                    model.add_state(obs.next_state, env.aware_actions(obs.next_state))
                else:
                    log.emit(name, **fields)
            if planned_version != model.version or steps >= step_budget:
                break
    plan = model.plan(T)
    return RunReport(status, policy_from_plan(plan), plan, model, steps, K1, log.events)
