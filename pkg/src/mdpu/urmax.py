"""URMAX: R-MAX extended with the explore action and with parameter guesses
that grow until no observation contradicts them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

from .discovery import DiscoveryFamily
from .env import MdpuEnv, Recorder
from .learner import ApproxModel, _EventLog, policy_from_plan
from .mdp import HorizonPlan, StationaryPolicy
from .model import EXPLORE, DmKnowledge
from .theory import k0 as k0_formula
from .theory import k1_urmax, k2_k3

REWARD_EXCEEDS_RMAX = "reward-exceeds-Rmax"
TOO_MANY_ACTIONS = "too-many-actions"
TOO_MANY_STATES = "too-many-states"


@dataclass
class UrmaxConfig:
    N: int
    k: int
    rmax: float
    T: int
    epsilon: float
    delta: float
    discovery: DiscoveryFamily
    k0_override: int | None = None
    k1_override: int | None = None
    step_budget: int = 10**6

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.T < 1 or self.N < 1 or self.k < 0:
            raise ValueError("N and T must be >= 1, k >= 0")

    @property
    def params(self) -> dict:
        return {"N": self.N, "k": self.k, "rmax": self.rmax, "T": self.T}

    def k0(self) -> int | None:
        if self.k0_override is not None:
            return self.k0_override
        value = k0_formula(self.discovery, self.N, self.delta)
        return None if value == math.inf else value

    def k1(self) -> int:
        if self.k1_override is not None:
            return self.k1_override
        return k1_urmax(self.N, self.k, self.T, self.rmax, self.epsilon, self.delta)


@dataclass
class UrmaxOutcome:
    status: str  # converged | inconsistency | budget-exhausted
    policy: StationaryPolicy
    plan: HorizonPlan | None
    model: ApproxModel
    steps: int
    k0: int | None
    k1: int
    inconsistency: str | None = None
    offending: dict | None = None
    events: list[dict] = field(default_factory=list)


def _retained_inconsistency(model: ApproxModel, cfg: UrmaxConfig) -> tuple[str, dict] | None:
    """Contradictions already present in data carried over from earlier rounds."""
    best, where = model.max_observed_reward()
    if where is not None and best > cfg.rmax:
        s, a, s2 = where
        return REWARD_EXCEEDS_RMAX, {"state": s, "action": a, "next": s2, "reward": best, "retained": True}
    if len(model.action_ids) > cfg.k:
        return TOO_MANY_ACTIONS, {"actions": len(model.action_ids), "retained": True}
    if len(model.states) > cfg.N:
        return TOO_MANY_STATES, {"states": len(model.states), "retained": True}
    return None


def new_model(knowledge: DmKnowledge, cfg: UrmaxConfig) -> ApproxModel:
    return ApproxModel(
        knowledge.aware_states,
        knowledge.aware_actions,
        rmax=cfg.rmax,
        k1=cfg.k1(),
        k0=cfg.k0(),
        explore=True,
    )


def urmax_inner(
    env: MdpuEnv,
    knowledge: DmKnowledge,
    cfg: UrmaxConfig,
    *,
    model: ApproxModel | None = None,
    recorder: Recorder | None = None,
    round_index: int = 0,
) -> UrmaxOutcome:
    """URMAX with fixed guesses for N, k, Rmax and T.

    Stops at the first observation that contradicts a guess: a reward above
    ``rmax``, a (k+1)-th distinct action, or an (N+1)-th state.  Pass
    ``model`` to continue from statistics gathered in earlier rounds.
    """
    K0, K1 = cfg.k0(), cfg.k1()
    if model is None:
        model = new_model(knowledge, cfg)
    model.configure(rmax=cfg.rmax, k1=K1, k0=K0)
    log = _EventLog(env, recorder)
    tag = {"round": round_index, "params": cfg.params}

    def finish(status, steps, kind=None, offending=None):
        plan = model.plan(cfg.T)
        return UrmaxOutcome(status, policy_from_plan(plan), plan, model, steps, K0, K1, kind, offending, log.events)

    retained = _retained_inconsistency(model, cfg)
    if retained is not None:
        log.emit("inconsistency", kind=retained[0], observation=retained[1], **tag)
        return finish("inconsistency", 0, *retained)

    steps = 0
    planned_version, plan = None, None
    while not model.all_known():
        if steps >= cfg.step_budget:
            return finish("budget-exhausted", steps)
        if planned_version != model.version:
            plan, planned_version = model.plan(cfg.T), model.version
            log.emit("replan")
        for i in range(cfg.T):
            s = env.state
            a = plan.actions[i][s]
            obs = env.step(a)
            steps += 1
            observation = {"state": s, "action": a, "next": obs.next_state, "reward": obs.reward}
            kind = None
            for name, fields in model.record(s, a, obs):
                if name == "new_state":
                    model.add_state(obs.next_state)
                elif name == "discovery_known":
                    log.emit(name, **fields, **tag)
                else:
                    log.emit(name, **fields)
            if a != EXPLORE and obs.reward > cfg.rmax:
                kind = REWARD_EXCEEDS_RMAX
            elif obs.discovered is not None and len(model.action_ids) > cfg.k:
                kind = TOO_MANY_ACTIONS
                observation["revealed"] = obs.discovered
            elif len(model.states) > cfg.N:
                kind = TOO_MANY_STATES
            if kind is not None:
                log.emit("inconsistency", kind=kind, observation=observation, **tag)
                return finish("inconsistency", steps, kind, observation)
            if planned_version != model.version or steps >= cfg.step_budget:
                break
    return finish("converged", steps)


@dataclass
class ExploitStats:
    steps: int
    reward: float
    explore_reward: float
    include_explore: bool = False

    @property
    def average(self) -> float:
        if not self.steps:
            return 0.0
        total = self.reward + (self.explore_reward if self.include_explore else 0.0)
        return total / self.steps


def exploit(
    env: MdpuEnv,
    policy: StationaryPolicy,
    steps: int,
    model: ApproxModel | None = None,
    include_explore: bool = False,
) -> ExploitStats:
    """Run ``policy`` for ``steps`` steps, splitting ordinary and explore rewards.

    Observations still feed ``model`` when one is given; the policy itself
    stays fixed.
    """
    reward = explore_reward = 0.0
    for _ in range(steps):
        s = env.state
        a = policy.choice.get(s)
        if a is None or (a != EXPLORE and a not in env.aware_actions(s)):
            known = model.actions.get(s) if model is not None else None
            a = known[0] if known else EXPLORE
        obs = env.step(a)
        if a == EXPLORE:
            explore_reward += obs.reward
        else:
            reward += obs.reward
        if model is not None:
            for name, _ in model.record(s, a, obs):
                if name == "new_state":
                    model.add_state(obs.next_state)
    return ExploitStats(steps, reward, explore_reward, include_explore)


@dataclass
class RoundResult:
    round: int
    params: dict
    outcome: UrmaxOutcome
    replay: int | float | None
    exploit: ExploitStats | None


def urmax_outer(
    env: MdpuEnv,
    knowledge: DmKnowledge,
    discovery: DiscoveryFamily,
    epsilon: float,
    delta: float,
    round_budget: int,
    *,
    k0_override: int | None = None,
    k1_override: int | None = None,
    replay_override: int | None = None,
    replay_cap: int = 10**6,
    inner_step_budget: int = 10**6,
    strict_restart: bool = False,
    include_explore_rewards: bool = False,
    recorder: Recorder | None = None,
) -> Iterator[RoundResult]:
    """URMAX without known N, k, Rmax or T.

    Round r runs the inner loop with guesses (|S0| + r, |A0| + r, 1 + r,
    1 + r).  If it ends without an inconsistency, the resulting policy is
    replayed for K2 + K3 steps (``replay_override`` if given, and never
    more than ``replay_cap``).  Awareness and visit statistics carry over
    between rounds unless ``strict_restart`` is set.
    """
    if round_budget < 1:
        raise ValueError("round_budget must be >= 1")
    n0 = len(knowledge.aware_states)
    k0_actions = len(dict.fromkeys(a for s in knowledge.aware_states for a in knowledge.aware_actions.get(s, [])))
    log = _EventLog(env, recorder)
    model = None
    for r in range(round_budget):
        cfg = UrmaxConfig(
            N=n0 + r, k=k0_actions + r, rmax=1.0 + r, T=1 + r,
            epsilon=epsilon, delta=delta, discovery=discovery,
            k0_override=k0_override, k1_override=k1_override, step_budget=inner_step_budget,
        )
        log.emit("round_start", round=r, params=cfg.params)
        if model is None:
            model = new_model(knowledge, cfg)
        elif strict_restart:
            model.clear_statistics()
        outcome = urmax_inner(env, knowledge, cfg, model=model, recorder=recorder, round_index=r)
        replay, stats = None, None
        if outcome.status != "inconsistency":
            if replay_override is not None:
                replay = replay_override
            else:
                k0v = outcome.k0 if outcome.k0 is not None else math.inf
                k2, k3 = k2_k3(cfg.N, cfg.k, cfg.T, cfg.rmax, epsilon, delta, k0v)
                replay = k2 + k3
            n = int(min(replay, replay_cap))
            log.emit("exploit_start", round=r, params=cfg.params, replay=n)
            stats = exploit(env, outcome.policy, n, model, include_explore_rewards)
        yield RoundResult(r, cfg.params, outcome, replay, stats)
