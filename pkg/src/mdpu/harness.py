"""Seed-sweep experiment runner and the single-state discovery demo.

Each seed runs in isolation and returns its row plus its trace; a single
aggregator writes every file afterwards in ascending seed order, so the
output bytes do not depend on how many workers were used.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .discovery import DiscoveryFamily, discovery_prob
from .env import MdpuEnv
from .learner import rmax_run
from .mdp import OracleTooLarge, opt_oracle
from .model import MdpuSpec, load_scenario
from .urmax import UrmaxConfig, exploit, urmax_inner, urmax_outer

log = logging.getLogger("mdpu.harness")

ALGORITHMS = ("rmax", "urmax-inner", "urmax-outer")
CSV_COLUMNS = ("seed", "steps", "avg_reward", "regret", "discoveries", "inconsistencies", "rounds")
DEFAULT_REPLAY = 10_000
ORACLE_HORIZON = 1000


@dataclass
class ExperimentPlan:
    scenario: str
    algorithm: str
    seeds: range
    out: str
    k0_override: int | None = None
    k1_override: int | None = None
    replay_override: int | None = None
    max_steps: int = 10**6
    rounds: int = 5
    epsilon: float = 0.1
    delta: float = 0.1
    include_explore_rewards: bool = False
    oracle: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if len(self.seeds) == 0:
            raise ValueError("seed range is empty")
        for name in ("k0_override", "k1_override", "replay_override"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.max_steps < 1 or self.rounds < 1:
            raise ValueError("max_steps and rounds must be >= 1")

    def describe(self) -> dict:
        d = asdict(self)
        d["seeds"] = [self.seeds.start, self.seeds.stop - 1]
        d.pop("jobs")
        d.pop("out")
        return d


def parse_seed_range(text: str) -> range:
    """``"A..B"`` (inclusive) or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise ValueError(f"bad seed range {text!r}; expected A..B") from None
    if lo < 0 or hi < lo:
        raise ValueError(f"bad seed range {text!r}; need 0 <= A <= B")
    return range(lo, hi + 1)


@dataclass
class SeedResult:
    row: dict
    trace: list[dict] = field(default_factory=list)


def _required(knowledge, name):
    value = getattr(knowledge, "known_" + name)
    if value is None:
        raise ValueError(f"scenario knowledge lacks {name}, which this algorithm needs")
    return value


def _discovery_times(trace: list[dict]) -> dict[str, int]:
    return {f"{r['state']}/{r['revealed']}": r["step"] for r in trace if r.get("event") == "discovery"}


def run_seed(plan: ExperimentPlan, seed: int) -> SeedResult:
    spec, knowledge = load_scenario(plan.scenario)
    trace: list[dict] = []
    start = spec.aware_states[0]
    replay = plan.replay_override if plan.replay_override is not None else DEFAULT_REPLAY
    row: dict = {"seed": seed, "status": None, "converged_round": None, "rounds": 1, "fault": None}

    if plan.algorithm == "rmax":
        env = MdpuEnv(MdpuSpec.fully_aware(spec.mdp, spec.name), start, seed, trace.append)
        mdp = spec.mdp
        report = rmax_run(
            env,
            knowledge.known_N or len(mdp.states),
            knowledge.known_k or len(mdp.action_ids),
            knowledge.known_rmax or max(mdp.max_reward, 1.0),
            knowledge.known_T or 1,
            plan.epsilon,
            plan.delta,
            plan.max_steps,
            k1=plan.k1_override,
            recorder=trace.append,
        )
        learn_steps = report.steps
        row["status"] = report.status
        policy = report.policy
        stats = exploit(env, policy, replay, report.model, plan.include_explore_rewards)
    elif plan.algorithm == "urmax-inner":
        env = MdpuEnv(spec, start, seed, trace.append)
        cfg = UrmaxConfig(
            N=_required(knowledge, "N"),
            k=_required(knowledge, "k"),
            rmax=_required(knowledge, "rmax"),
            T=_required(knowledge, "T"),
            epsilon=plan.epsilon,
            delta=plan.delta,
            discovery=spec.discovery,
            k0_override=plan.k0_override,
            k1_override=plan.k1_override,
            step_budget=plan.max_steps,
        )
        outcome = urmax_inner(env, knowledge, cfg, recorder=trace.append)
        learn_steps = outcome.steps
        row["status"] = outcome.status
        policy = outcome.policy
        stats = exploit(env, policy, replay, outcome.model, plan.include_explore_rewards)
    else:
        env = MdpuEnv(spec, start, seed, trace.append)
        stats, policy, rounds = None, None, 0
        for result in urmax_outer(
            env,
            knowledge,
            spec.discovery,
            plan.epsilon,
            plan.delta,
            plan.rounds,
            k0_override=plan.k0_override,
            k1_override=plan.k1_override,
            replay_override=plan.replay_override,
            replay_cap=plan.max_steps,
            inner_step_budget=plan.max_steps,
            include_explore_rewards=plan.include_explore_rewards,
            recorder=trace.append,
        ):
            rounds += 1
            row["status"] = result.outcome.status
            if result.exploit is not None:
                stats, policy = result.exploit, result.outcome.policy
                if row["converged_round"] is None and result.outcome.status == "converged":
                    row["converged_round"] = result.round
        row["rounds"] = rounds
        learn_steps = env.step_count - (stats.steps if stats else 0)

    kinds = Counter(r["kind"] for r in trace if r.get("event") == "inconsistency")
    row.update(
        steps=env.step_count,
        learn_steps=learn_steps,
        avg_reward=stats.average if stats else None,
        exploit_steps=stats.steps if stats else 0,
        discoveries=sum(1 for r in trace if r.get("event") == "discovery"),
        discovery_times=_discovery_times(trace),
        inconsistencies=sum(kinds.values()),
        inconsistency_kinds=dict(sorted(kinds.items())),
        policy=dict(policy.choice) if policy else None,
        contract_faults=env.faults,
    )
    return SeedResult(row, trace)


def _safe_run_seed(plan: ExperimentPlan, seed: int) -> SeedResult:
    try:
        return run_seed(plan, seed)
    except Exception as exc:  # a fault in one seed must not sink the sweep
        log.warning("seed %d faulted: %s", seed, exc)
        return SeedResult({"seed": seed, "status": "fault", "fault": f"{type(exc).__name__}: {exc}"})


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _quantiles(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "q10": None, "q50": None, "q90": None}
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "q10": float(np.quantile(arr, 0.1)),
        "q50": float(np.quantile(arr, 0.5)),
        "q90": float(np.quantile(arr, 0.9)),
    }


def aggregate(rows: list[dict]) -> dict:
    ok = [r for r in rows if r.get("status") != "fault"]
    kinds: Counter = Counter()
    for r in ok:
        kinds.update(r.get("inconsistency_kinds", {}))
    rewards = [r["avg_reward"] for r in ok if r.get("avg_reward") is not None]
    regrets = [r["regret"] for r in ok if r.get("regret") is not None]
    return {
        "seeds": len(rows),
        "faults": len(rows) - len(ok),
        "avg_reward": _quantiles(rewards),
        "regret": _quantiles(regrets) if regrets else None,
        "steps": _quantiles([r["steps"] for r in ok]),
        "inconsistency_kinds": dict(sorted(kinds.items())),
    }


@dataclass
class Summary:
    plan: dict
    oracle_value: float | None
    rows: list[dict]
    aggregates: dict

    @property
    def faults(self) -> int:
        return self.aggregates["faults"]

    def to_json(self) -> str:
        return json.dumps(
            {"plan": self.plan, "oracle_value": self.oracle_value, "rows": self.rows, "aggregates": self.aggregates},
            indent=2,
        ) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
        return buf.getvalue()


def run_experiment(plan: ExperimentPlan) -> Summary:
    """Run every seed of ``plan`` and write traces, summary.csv and summary.json."""
    spec, _ = load_scenario(plan.scenario)  # fail fast on a bad scenario
    oracle_value = None
    if plan.oracle:
        try:
            oracle_value = opt_oracle(spec.mdp, ORACLE_HORIZON)[0]
        except OracleTooLarge as exc:
            log.warning("oracle skipped: %s", exc)

    seeds = list(plan.seeds)
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            results = list(pool.map(_safe_run_seed, [plan] * len(seeds), seeds))
    else:
        results = [_safe_run_seed(plan, s) for s in seeds]
    results.sort(key=lambda res: res.row["seed"])

    rows = []
    for res in results:
        row = dict(res.row)
        if oracle_value is not None and row.get("avg_reward") is not None:
            row["regret"] = oracle_value - row["avg_reward"]
        rows.append(row)
        log.info("seed %d: %s", row["seed"], row.get("status"))

    out = Path(plan.out)
    traces = out / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    for res in results:
        with open(traces / f"seed_{res.row['seed']}.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for rec in res.trace:
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")

    summary = Summary(plan.describe(), oracle_value, rows, aggregate(rows))
    (out / "summary.csv").write_text(summary.to_csv(), encoding="utf-8", newline="\n")
    (out / "summary.json").write_text(summary.to_json(), encoding="utf-8", newline="\n")
    return summary


def demo_grid(horizon: int, points: int = 25) -> list[int]:
    grid = {1, horizon} | {int(round(x)) for x in np.geomspace(1, horizon, points)}
    if horizon >= 10:
        grid.add(10)
    return sorted(grid)


def demo_example1(trials: int, horizon: int, out: str | None = None, seed: int = 0) -> list[dict]:
    """Simulate the explore action at the example1 scenario's single state.

    Every trial keeps exploring until the hidden action shows up.  At each
    grid point t, the fraction of trials still without a discovery is set
    against (t + 2) / (2 (t + 1)).  Trials are vectorised: only the ids of
    trials still searching are carried forward.
    """
    if trials < 1 or horizon < 1:
        raise ValueError("trials and horizon must be >= 1")
    fam = DiscoveryFamily.power(2.0)
    gen = np.random.Generator(np.random.Philox(key=seed))
    grid = demo_grid(horizon)
    wanted = set(grid)
    searching = trials
    rows = []
    for t in range(1, horizon + 1):
        if searching:
            found = int(np.count_nonzero(gen.random(searching) < discovery_prob(fam, 1, t)))
            searching -= found
        if t in wanted:
            closed = (t + 2) / (2 * (t + 1))
            rows.append({
                "t": t,
                "empirical": searching / trials,
                "closed_form": closed,
                "sigma": math.sqrt(closed * (1 - closed) / trials),
            })
    if out is not None:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "empirical_nondiscovery", "closed_form", "sigma"])
        for r in rows:
            writer.writerow([r["t"], repr(r["empirical"]), repr(r["closed_form"]), repr(r["sigma"])])
        (path / "example1_demo.csv").write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    return rows
