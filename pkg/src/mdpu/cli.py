"""Command-line entry point: ``mdpu validate | run | demo | theory``.

Exit codes: 0 success, 1 validation or usage error, 2 runtime fault.
Every failure prints exactly one line starting with ``error:`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from importlib import resources
from pathlib import Path

from . import theory
from .discovery import DiscoveryFamily
from .harness import ALGORITHMS, ExperimentPlan, demo_example1, parse_seed_range, run_experiment
from .model import ScenarioError, load_scenario

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as a single ``error:`` line, exit 1."""

    def error(self, message):
        raise UsageError(message)


def resolve_scenario(name: str) -> str:
    """A path on disk, or the stem of a scenario shipped with the package."""
    if Path(name).exists():
        return name
    shipped = resources.files("mdpu") / "scenarios" / f"{Path(name).stem}.json"
    if shipped.is_file():
        return str(shipped)
    raise FileNotFoundError(f"scenario {name!r} not found")


def shipped_scenarios() -> list[str]:
    folder = resources.files("mdpu") / "scenarios"
    return sorted(str(p) for p in folder.iterdir() if p.name.endswith(".json"))


def _jsonable(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _family_from_args(args) -> DiscoveryFamily:
    kind = args.family
    if kind is None:
        raise UsageError("--family is required")
    if kind == "constant":
        return DiscoveryFamily.constant(_need(args, "c"))
    if kind == "power":
        return DiscoveryFamily.power(_need(args, "alpha"))
    if kind == "harmonic_j":
        return DiscoveryFamily.harmonic_j()
    if kind == "log_harmonic":
        return DiscoveryFamily.log_harmonic(_need(args, "m1"))
    values = _need(args, "values")
    return DiscoveryFamily.table(values=[float(v) for v in values.split(",")])


def _need(args, name):
    value = getattr(args, name, None)
    if value is None:
        raise UsageError(f"--{name} is required for family {args.family!r}")
    return value


def _bound_from_args(args) -> theory.BoundFunction:
    return theory.BoundFunction(args.f, m1=args.m1 if args.m1 is not None else 1.0, m2=args.m2, shift=args.shift)


def _add_family(p, required=True, with_c=True):
    p.add_argument("--family", choices=("constant", "power", "harmonic_j", "log_harmonic", "table"), required=required)
    if with_c:
        p.add_argument("--c", type=float, help="constant family probability")
    p.add_argument("--alpha", type=float, help="power family exponent")
    p.add_argument("--m1", type=float, help="log_harmonic scale, or the bound function's slope")
    p.add_argument("--values", help="table family values, comma separated")


def _add_sizes(p):
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--rmax", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdpu", description="Learning with hidden actions: simulator, learners and bounds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("file")

    p = sub.add_parser("run", help="run a seed sweep")
    p.add_argument("--scenario", required=True, help="path, or the name of a shipped scenario")
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--seeds", required=True, help="inclusive range A..B")
    p.add_argument("--override-k0", type=int)
    p.add_argument("--override-k1", type=int)
    p.add_argument("--override-replay", type=int, help="exploitation steps after learning")
    p.add_argument("--max-steps", type=int, default=10**6, help="step budget per learning phase")
    p.add_argument("--rounds", type=int, default=5, help="outer-loop round budget")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--include-explore-rewards", action="store_true")
    p.add_argument("--oracle", action="store_true", help="compute the optimal average reward and regret")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (output is identical)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("demo", help="reproduce a worked example")
    p.add_argument("which", choices=("example1",))
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("theory", help="evaluate sample-size constants and bounds")
    tsub = p.add_subparsers(dest="quantity", required=True, parser_class=_Parser)

    q = tsub.add_parser("k0")
    _add_family(q)
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--delta", type=float, required=True)

    q = tsub.add_parser("k1")
    _add_sizes(q)
    q.add_argument("--variant", choices=("urmax", "rmax"), default="urmax",
                   help="rmax reads --N as |S| and --k as |A|")

    q = tsub.add_parser("k2k3")
    _add_sizes(q)
    q.add_argument("--K0", type=int, help="explicit K0; otherwise derived from --family")
    _add_family(q, required=False)

    q = tsub.add_parser("lower-bound")
    q.add_argument("--f", choices=("log", "loglog", "linear"), help="closed-form bound on the partial sums")
    q.add_argument("--m2", type=float, default=0.0)
    q.add_argument("--shift", type=float, default=0.0)
    _add_family(q, required=False, with_c=False)
    q.add_argument("--c", type=float, required=True, help="bound on D(1, t); also the constant family's value")
    q.add_argument("--delta", type=float, required=True)

    q = tsub.add_parser("gap")
    _add_family(q)
    q.add_argument("--r1", type=float, required=True)
    q.add_argument("--r2", type=float, required=True)

    q = tsub.add_parser("k0-bound")
    _add_family(q)
    q.add_argument("--f", choices=("log", "loglog", "linear"), required=True)
    q.add_argument("--fm1", type=float, default=1.0, help="slope of the bound function")
    q.add_argument("--m2", type=float, default=0.0)
    q.add_argument("--shift", type=float, default=0.0)
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--delta", type=float, required=True)
    return parser


def _emit(label: str, result: dict) -> None:
    outputs = result["outputs"]
    shown = ", ".join(f"{k} = {_jsonable(v)}" for k, v in outputs.items())
    print(f"{label}: {shown}")
    print(json.dumps(_jsonable(result), sort_keys=False))


def cmd_theory(args) -> int:
    q = args.quantity
    if q == "k0":
        fam = _family_from_args(args)
        crossing = theory.solve_partial_sum(fam, 1, theory.k0_threshold(args.N, args.delta))
        value = theory.k0(fam, args.N, args.delta)
        _emit("k0", {
            "quantity": "k0",
            "inputs": {"family": fam.to_dict(), "N": args.N, "delta": args.delta},
            "outputs": {"k0": value},
            "flags": {"infinite": value == math.inf, "approximate": crossing.approximate},
        })
    elif q == "k1":
        fn = theory.k1_urmax if args.variant == "urmax" else theory.k1_rmax
        value = fn(args.N, args.k, args.T, args.rmax, args.epsilon, args.delta)
        _emit("k1", {
            "quantity": "k1",
            "inputs": {"variant": args.variant, "N": args.N, "k": args.k, "T": args.T,
                       "rmax": args.rmax, "epsilon": args.epsilon, "delta": args.delta},
            "outputs": {"k1": value},
            "flags": {},
        })
    elif q == "k2k3":
        if args.K0 is not None:
            K0, source = args.K0, "given"
        elif args.family is not None:
            K0, source = theory.k0(_family_from_args(args), args.N, args.delta), "family"
        else:
            raise UsageError("k2k3 needs --K0 or a --family to derive it")
        k2, k3 = theory.k2_k3(args.N, args.k, args.T, args.rmax, args.epsilon, args.delta, K0)
        _emit("k2k3", {
            "quantity": "k2k3",
            "inputs": {"N": args.N, "k": args.k, "T": args.T, "rmax": args.rmax,
                       "epsilon": args.epsilon, "delta": args.delta, "K0": K0, "K0_source": source},
            "outputs": {"k2": k2, "k3": k3},
            "flags": {"k2_infinite": k2 == math.inf},
        })
    elif q == "lower-bound":
        if (args.f is None) == (args.family is None):
            raise UsageError("lower-bound needs exactly one of --f or --family")
        if args.f is not None:
            f = _bound_from_args(args)
            source = {"f": args.f, "m1": f.m1, "m2": f.m2, "shift": f.shift}
        else:
            f = _family_from_args(args)
            source = {"family": f.to_dict()}
        value = theory.lower_bound_steps(f, args.c, args.delta)
        _emit("lower-bound", {
            "quantity": "lower-bound",
            "inputs": {**source, "c": args.c, "delta": args.delta},
            "outputs": {"steps": value, "target": theory.lower_bound_target(args.c, args.delta)},
            "flags": {"infinite": value == math.inf},
        })
    elif q == "gap":
        fam = _family_from_args(args)
        d, c = theory.impossibility_gap(fam, args.r1, args.r2)
        _emit("gap", {
            "quantity": "gap",
            "inputs": {"family": fam.to_dict(), "r1": args.r1, "r2": args.r2},
            "outputs": {"d": d, "c": c},
            "flags": {},
        })
    else:
        fam = _family_from_args(args)
        f = theory.BoundFunction(args.f, m1=args.fm1, m2=args.m2, shift=args.shift)
        ok = theory.k0_upper_bound_check(fam, f, args.N, args.delta)
        _emit("k0-bound", {
            "quantity": "k0-bound",
            "inputs": {"family": fam.to_dict(), "f": args.f, "m1": f.m1, "m2": f.m2, "shift": f.shift,
                       "N": args.N, "delta": args.delta},
            "outputs": {"holds": ok, "k0": theory.k0(fam, args.N, args.delta),
                        "bound": theory.invert_increasing(f.precise, theory.k0_threshold(args.N, args.delta))},
            "flags": {},
        })
    return EXIT_OK


def cmd_validate(args) -> int:
    spec, knowledge = load_scenario(resolve_scenario(args.file))
    mdp = spec.mdp
    hidden = sum(len(mdp.actions[s]) for s in mdp.states) - sum(len(spec.initial_actions(s)) for s in mdp.states)
    print(f"ok: {spec.name}: {len(mdp.states)} states, {len(mdp.action_ids)} actions, "
          f"{hidden} hidden, discovery {spec.discovery.kind}")
    return EXIT_OK


def cmd_run(args) -> int:
    plan = ExperimentPlan(
        scenario=resolve_scenario(args.scenario),
        algorithm=args.algo,
        seeds=parse_seed_range(args.seeds),
        out=args.out,
        k0_override=args.override_k0,
        k1_override=args.override_k1,
        replay_override=args.override_replay,
        max_steps=args.max_steps,
        rounds=args.rounds,
        epsilon=args.epsilon,
        delta=args.delta,
        include_explore_rewards=args.include_explore_rewards,
        oracle=args.oracle,
        jobs=args.jobs,
    )
    summary = run_experiment(plan)
    agg = summary.aggregates
    print(f"ran {agg['seeds']} seeds; mean avg_reward {agg['avg_reward']['mean']}; output in {args.out}")
    if summary.faults:
        print(f"error: {summary.faults} seed(s) faulted; see summary.json", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_demo(args) -> int:
    rows = demo_example1(args.trials, args.horizon, args.out, seed=args.seed)
    for r in rows:
        print(f"t={r['t']:>6}  empirical={r['empirical']:.5f}  closed_form={r['closed_form']:.5f}")
    return EXIT_OK


def _configure_logging():
    level = {"debug": logging.DEBUG, "info": logging.INFO}.get(os.environ.get("MDPU_LOG", "").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"validate": cmd_validate, "run": cmd_run, "demo": cmd_demo, "theory": cmd_theory}[args.command]
        return handler(args)
    except (UsageError, ScenarioError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        logging.getLogger("mdpu").debug("runtime fault", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
