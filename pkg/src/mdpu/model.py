"""MDPs with unawareness: the awareness layer on top of an MdpSpec, the
decision maker's knowledge, and the JSON scenario format."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .discovery import DiscoveryFamily
from .mdp import PROB_TOL, MdpSpec, ValidationReport, validate_spec

EXPLORE = "__explore__"


@dataclass
class MdpuSpec:
    mdp: MdpSpec
    aware_states: list[str]
    aware_actions: dict[str, list[str]]
    discovery: DiscoveryFamily
    explore_found: dict[str, float] = field(default_factory=dict)
    explore_not_found: dict[str, float] = field(default_factory=dict)
    name: str = "unnamed"

    def r_plus(self, s: str) -> float:
        return self.explore_found.get(s, 0.0)

    def r_minus(self, s: str) -> float:
        return self.explore_not_found.get(s, 0.0)

    def initial_actions(self, s: str) -> list[str]:
        return list(self.aware_actions.get(s, [])) if s in self.aware_states else []

    @property
    def initial_action_ids(self) -> list[str]:
        """A_0: every action id the DM starts out aware of, at any state."""
        return list(dict.fromkeys(a for s in self.aware_states for a in self.aware_actions.get(s, [])))

    @classmethod
    def fully_aware(cls, mdp: MdpSpec, name: str = "fully-aware") -> MdpuSpec:
        """Wrap a plain MDP so that every state and action is known up front."""
        return cls(
            mdp=mdp,
            aware_states=list(mdp.states),
            aware_actions={s: list(mdp.actions[s]) for s in mdp.states},
            discovery=DiscoveryFamily.constant(0.0),
            name=name,
        )


@dataclass
class DmKnowledge:
    """What the decision maker knows beyond the awareness sets.

    The optional fields are exact values when present: ``known_N`` is |S|,
    ``known_k`` is |A|, ``known_rmax`` bounds every reward.
    """

    aware_states: list[str]
    aware_actions: dict[str, list[str]]
    known_N: int | None = None
    known_k: int | None = None
    known_rmax: float | None = None
    known_T: int | None = None

    @classmethod
    def from_spec(cls, spec: MdpuSpec, **bounds) -> DmKnowledge:
        return cls(list(spec.aware_states), {s: list(v) for s, v in spec.aware_actions.items()}, **bounds)


def validate_mdpu(spec: MdpuSpec, knowledge: DmKnowledge | None = None) -> ValidationReport:
    report = validate_spec(spec.mdp)
    issues = report.issues
    states = set(spec.mdp.states)
    for s in spec.aware_states:
        if s not in states:
            issues.append(f"aware state {s!r} not in state set")
    for s, acts in spec.aware_actions.items():
        if s not in spec.aware_states:
            issues.append(f"aware actions given for {s!r}, which is not an aware state")
            continue
        available = spec.mdp.actions.get(s, [])
        for a in acts:
            if a not in available:
                issues.append(f"aware action {a!r} at {s!r} is not in g_A({s})")
    for s in spec.mdp.states:
        if EXPLORE in spec.mdp.actions.get(s, []):
            issues.append(f"reserved explore id {EXPLORE!r} used as an ordinary action at {s!r}")
    for label, table in (("explore_found", spec.explore_found), ("explore_not_found", spec.explore_not_found)):
        for s, r in table.items():
            if s not in states:
                issues.append(f"{label} given for unknown state {s!r}")
            if r < 0:
                issues.append(f"negative {label} reward {r} at {s!r}")
    for s in spec.mdp.states:
        if spec.r_minus(s) > spec.r_plus(s):
            issues.append(f"explore_not_found {spec.r_minus(s)} > explore_found {spec.r_plus(s)} at {s!r}")
    if knowledge is not None and knowledge.known_rmax is not None:
        for s in spec.mdp.states:
            if spec.r_plus(s) >= knowledge.known_rmax:
                issues.append(f"explore_found {spec.r_plus(s)} not below declared rmax at {s!r}")
    return report


def is_compatible(candidate: MdpSpec, knowledge: DmKnowledge) -> bool:
    """Whether ``candidate`` could be the true MDP given what the DM knows."""
    if not validate_spec(candidate).ok:
        return False
    if not set(knowledge.aware_states) <= set(candidate.states):
        return False
    for s, acts in knowledge.aware_actions.items():
        if s in knowledge.aware_states and not set(acts) <= set(candidate.actions.get(s, [])):
            return False
    if knowledge.known_N is not None and len(candidate.states) != knowledge.known_N:
        return False
    if knowledge.known_k is not None and len(candidate.action_ids) != knowledge.known_k:
        return False
    if knowledge.known_rmax is not None and candidate.max_reward > knowledge.known_rmax:
        return False
    return True


# -- scenario files ---------------------------------------------------------

_NUMBER_MAP = {"type": "object", "additionalProperties": {"type": "number"}}

SCENARIO_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": [
        "name", "states", "actions", "aware_states", "aware_actions", "transitions",
        "explore_found", "explore_not_found", "discovery", "knowledge",
    ],
    "properties": {
        "name": {"type": "string"},
        "states": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "actions": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "string"}}},
        "aware_states": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "aware_actions": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "string"}}},
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["from", "action", "to", "prob", "reward"],
                "properties": {
                    "from": {"type": "string"},
                    "action": {"type": "string"},
                    "to": {"type": "string"},
                    "prob": {"type": "number", "minimum": 0, "maximum": 1},
                    "reward": {"type": "number"},
                },
            },
        },
        "explore_found": _NUMBER_MAP,
        "explore_not_found": _NUMBER_MAP,
        "discovery": {
            "type": "object",
            "required": ["family"],
            "properties": {"family": {"enum": ["constant", "power", "harmonic_j", "log_harmonic", "table"]}},
            "oneOf": [
                {"additionalProperties": False, "required": ["c"],
                 "properties": {"family": {"const": "constant"}, "c": {"type": "number", "minimum": 0, "maximum": 1}}},
                {"additionalProperties": False, "required": ["alpha"],
                 "properties": {"family": {"const": "power"}, "alpha": {"type": "number", "minimum": 0}}},
                {"additionalProperties": False,
                 "properties": {"family": {"const": "harmonic_j"}}},
                {"additionalProperties": False, "required": ["m1"],
                 "properties": {"family": {"const": "log_harmonic"}, "m1": {"type": "number", "exclusiveMinimum": 0}}},
                {"additionalProperties": False, "required": ["values"],
                 "properties": {"family": {"const": "table"},
                                "values": {"type": "array", "minItems": 1,
                                           "items": {"type": "number", "minimum": 0, "maximum": 1}}}},
                {"additionalProperties": False, "required": ["values_by_j"],
                 "properties": {"family": {"const": "table"},
                                "values_by_j": {"type": "array", "minItems": 1, "items": {
                                    "type": "array", "minItems": 1,
                                    "items": {"type": "number", "minimum": 0, "maximum": 1}}}}},
            ],
        },
        "knowledge": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "k": {"type": "integer", "minimum": 1},
                "rmax": {"type": "number", "exclusiveMinimum": 0},
                "T": {"type": "integer", "minimum": 1},
            },
        },
    },
}


class ScenarioError(ValueError):
    """A scenario document that cannot be turned into a valid MDPU."""


def _path(error: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in error.absolute_path) or "<root>"


def _describe(error: jsonschema.ValidationError) -> str:
    if error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        return f"{_path(error)}: unknown field(s) {', '.join(repr(e) for e in extra)}"
    if error.validator == "oneOf" and isinstance(error.instance, dict):
        return f"{_path(error)}: parameters do not match discovery family {error.instance.get('family')!r}"
    return f"{_path(error)}: {error.message}"


def parse_scenario(data: Any) -> tuple[MdpuSpec, DmKnowledge]:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        raise ScenarioError("; ".join(_describe(e) for e in errors))

    transitions: dict[tuple[str, str], dict[str, float]] = defaultdict(dict)
    rewards: dict[tuple[str, str, str], float] = {}
    problems = []
    for i, edge in enumerate(data["transitions"]):
        key = (edge["from"], edge["action"])
        if edge["to"] in transitions[key]:
            problems.append(f"transitions/{i}: duplicate edge ({edge['from']}, {edge['action']}) -> {edge['to']}")
        transitions[key][edge["to"]] = float(edge["prob"])
        rewards[(edge["from"], edge["action"], edge["to"])] = float(edge["reward"])
    for (s, a), probs in transitions.items():
        mass = math.fsum(probs.values())
        if abs(mass - 1.0) > PROB_TOL:
            problems.append(f"transitions: probabilities for ({s}, {a}) sum to {mass:g}, not 1")
    if problems:
        raise ScenarioError("; ".join(problems))

    mdp = MdpSpec(
        states=list(data["states"]),
        actions={s: list(v) for s, v in data["actions"].items()},
        transitions=dict(transitions),
        rewards=rewards,
    )
    spec = MdpuSpec(
        mdp=mdp,
        aware_states=list(data["aware_states"]),
        aware_actions={s: list(v) for s, v in data["aware_actions"].items()},
        discovery=DiscoveryFamily.from_dict(data["discovery"]),
        explore_found={s: float(v) for s, v in data["explore_found"].items()},
        explore_not_found={s: float(v) for s, v in data["explore_not_found"].items()},
        name=data["name"],
    )
    kn = data["knowledge"]
    knowledge = DmKnowledge.from_spec(
        spec,
        known_N=kn.get("N"),
        known_k=kn.get("k"),
        known_rmax=float(kn["rmax"]) if "rmax" in kn else None,
        known_T=kn.get("T"),
    )
    report = validate_mdpu(spec, knowledge)
    if not report.ok:
        raise ScenarioError(str(report))
    return spec, knowledge


def load_scenario(path: str | Path) -> tuple[MdpuSpec, DmKnowledge]:
    """Read and validate a scenario file.

    Malformed JSON surfaces as ScenarioError naming line and column.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_scenario(data)


def scenario_to_dict(spec: MdpuSpec, knowledge: DmKnowledge | None = None) -> dict[str, Any]:
    mdp = spec.mdp
    transitions = [
        {"from": s, "action": a, "to": s2, "prob": p, "reward": mdp.reward(s, a, s2)}
        for s in mdp.states
        for a in mdp.actions[s]
        for s2, p in mdp.transitions[(s, a)].items()
    ]
    kn: dict[str, Any] = {}
    if knowledge is not None:
        for key, value in (("N", knowledge.known_N), ("k", knowledge.known_k),
                           ("rmax", knowledge.known_rmax), ("T", knowledge.known_T)):
            if value is not None:
                kn[key] = value
    return {
        "name": spec.name,
        "states": list(mdp.states),
        "actions": {s: list(mdp.actions[s]) for s in mdp.states},
        "aware_states": list(spec.aware_states),
        "aware_actions": {s: list(v) for s, v in spec.aware_actions.items()},
        "transitions": transitions,
        "explore_found": dict(spec.explore_found),
        "explore_not_found": dict(spec.explore_not_found),
        "discovery": spec.discovery.to_dict(),
        "knowledge": kn,
    }
