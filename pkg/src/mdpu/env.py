"""Seeded simulator that presents an MDPU to a learner."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

from .discovery import discovery_prob
from .model import EXPLORE, MdpuSpec
from .rng import DISCOVERY, REVEAL, TRANSITION, Streams

Recorder = Callable[[dict], None]


class ContractViolation(RuntimeError):
    """The learner tried an action it has not been made aware of."""


@dataclass(frozen=True)
class Observation:
    next_state: str
    reward: float
    discovered: str | None = None
    was_explore: bool = False


class MdpuEnv:
    """One interaction stream with an MDPU.

    Playing ``EXPLORE`` at ``s`` with ``j`` hidden actions left succeeds with
    probability ``D(j, t_s + 1)`` where ``t_s`` counts explore failures at
    ``s`` since its last discovery.  A success reveals one hidden action
    chosen uniformly.  Transition, discovery and reveal draws come from
    separate streams.
    """

    def __init__(self, spec: MdpuSpec, start: str, seed: int, recorder: Recorder | None = None):
        if start not in spec.aware_states:
            raise ValueError(f"start state {start!r} is not initially aware")
        self.spec = spec
        self.seed = seed
        self.state = start
        self.step_count = 0
        self.faults = 0
        self.recorder = recorder
        self.fail_counts = {s: 0 for s in spec.mdp.states}
        self.undiscovered = {
            s: [a for a in spec.mdp.actions[s] if a not in spec.initial_actions(s)]
            for s in spec.mdp.states
        }
        self._rng = Streams(seed)
        # Cumulative transition tables, built once.
        self._cdf = {}
        for key, probs in spec.mdp.transitions.items():
            acc, rows = 0.0, []
            for s2, p in probs.items():
                if p > 0:
                    acc += p
                    rows.append((acc, s2))
            self._cdf[key] = rows

    def aware_actions(self, s: str) -> list[str]:
        hidden = self.undiscovered[s]
        return [a for a in self.spec.mdp.actions[s] if a not in hidden]

    def step(self, action: str) -> Observation:
        s = self.state
        if action == EXPLORE:
            obs, event = self._explore(s)
        else:
            if action not in self.spec.mdp.actions.get(s, []) or action in self.undiscovered[s]:
                self.faults += 1
                raise ContractViolation(f"action {action!r} is not available to the learner at {s!r}")
            u = self._rng.uniform(TRANSITION)
            rows = self._cdf[(s, action)]
            s2 = rows[-1][1]
            for acc, cand in rows:
                if u < acc:
                    s2 = cand
                    break
            obs, event = Observation(s2, self.spec.mdp.reward(s, action, s2)), "move"
        self.state = obs.next_state
        if self.recorder is not None:
            rec = {
                "step": self.step_count,
                "state": s,
                "action": action,
                "next": obs.next_state,
                "reward": obs.reward,
                "event": event,
            }
            if obs.discovered is not None:
                rec["revealed"] = obs.discovered
            self.recorder(rec)
        self.step_count += 1
        return obs

    def _explore(self, s: str) -> tuple[Observation, str]:
        hidden = self.undiscovered[s]
        if hidden:
            d = discovery_prob(self.spec.discovery, len(hidden), self.fail_counts[s] + 1)
            if self._rng.uniform(DISCOVERY) < d:
                found = hidden.pop(self._rng.choice_index(REVEAL, len(hidden)))
                self.fail_counts[s] = 0
                return Observation(s, self.spec.r_plus(s), found, True), "discovery"
        self.fail_counts[s] += 1
        return Observation(s, self.spec.r_minus(s), None, True), "explore_fail"

    def snapshot(self) -> dict:
        return {
            "scenario": self.spec.name,
            "seed": self.seed,
            "state": self.state,
            "step": self.step_count,
            "faults": self.faults,
            "fail_counts": dict(self.fail_counts),
            "undiscovered": {s: list(v) for s, v in self.undiscovered.items()},
            "rng": self._rng.state(),
        }

    def snapshot_bytes(self) -> bytes:
        return json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":")).encode("utf-8")

    @classmethod
    def restore(cls, spec: MdpuSpec, snap: dict, recorder: Recorder | None = None) -> MdpuEnv:
        env = cls(spec, spec.aware_states[0], snap["seed"], recorder)
        env.state = snap["state"]
        env.step_count = snap["step"]
        env.faults = snap["faults"]
        env.fail_counts = dict(snap["fail_counts"])
        env.undiscovered = {s: list(v) for s, v in snap["undiscovered"].items()}
        env._rng.set_state(snap["rng"])
        return env
