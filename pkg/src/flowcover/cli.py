"""Command-line front end: generate, reduce, solve, check, verify, pipeline.

Artifact files (instances, reductions, solutions, verify summaries) carry no
wall-clock data and are byte-identical for identical seeds and configs;
timing goes to stdout, to optional stats files, and to the ms column of CSV
reports.  The FLOWCOVER_BUDGET_MS environment variable caps the brute-force
oracle's running time per instance.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .covering import Selection, build_covering, check_feasible, covering_to_json, selection_cost
from .dpsolver import solve as dp_solve
from .grid import build_grid
from .harness import CSV_HEADER, CampaignConfig, campaign_instance, run_campaign
from .jobs import (
    JobInstance,
    instance_from_json,
    instance_to_json,
    max_processing,
    perturb_release_times,
    total_horizon,
)
from .oracle import OracleBudget, brute_force_covering, reduction_grid


def _instance_hash(instance: JobInstance) -> str:
    return hashlib.sha256(instance_to_json(instance).encode()).hexdigest()[:16]


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _append_csv(path: str, line: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if not target.exists():
        target.write_text(CSV_HEADER + "\n")
    with target.open("a") as fh:
        fh.write(line + "\n")


def _load_instance(path: str) -> JobInstance:
    return instance_from_json(Path(path).read_text())


def _reduction(instance: JobInstance, args: argparse.Namespace):
    """Shared front half: preprocess, build grid (seeded shift), covering."""
    eps = Fraction(args.epsilon) if args.epsilon is not None else instance.epsilon
    work = perturb_release_times(instance, eps)
    T = total_horizon(work) if work.jobs else 0
    P = max_processing(work) if work.jobs else 0
    grid = reduction_grid(T, args.K, args.seed, args.leaf_len)
    cov = build_covering(work, grid, cost_model=args.cost_model)
    return eps, work, T, P, grid.shift, cov


def cmd_gen(args: argparse.Namespace) -> int:
    if args.n < 1:
        print("error: --n must be at least 1", file=sys.stderr)
        return 2
    cfg = CampaignConfig(
        seed=args.seed,
        K=args.K,
        epsilon=Fraction(args.epsilon or "1"),
        n_max=args.n,
        p_max=args.pmax,
        w_max=args.wmax,
        horizon_max=args.horizon,
    )
    instance = campaign_instance(args.seed, cfg)
    _emit(instance_to_json(instance), args.out)
    return 0


def cmd_reduce(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    eps, work, T, P, shift, cov = _reduction(instance, args)
    payload = json.loads(covering_to_json(cov))
    payload.update(
        instance_hash=_instance_hash(instance),
        epsilon=str(eps),
        seed=args.seed,
        n=work.n,
        P=P,
    )
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    eps, work, T, P, shift, cov = _reduction(instance, args)
    record = {
        "method": args.method,
        "instance_hash": _instance_hash(instance),
        "epsilon": str(eps),
        "K": args.K,
        "leaf_len": args.leaf_len,
        "seed": args.seed,
        "shift": shift,
        "n": work.n,
        "P": P,
        "T": T,
        "cost_model": args.cost_model,
    }
    started = time.perf_counter()
    if args.method == "dp":
        result = dp_solve(cov)
        selection = result.selection
        record.update(
            cost=result.cost,
            selection=list(selection.sorted_ids()),
            states=result.stats.states,
            max_depth=result.stats.max_depth,
        )
        stats = {
            "states": result.stats.states,
            "max_depth": result.stats.max_depth,
            "carry_vectors": result.stats.carry_vectors,
            "wall_ms": round(result.stats.wall_ms, 3),
        }
    else:
        cost, selection = brute_force_covering(cov)
        record.update(cost=cost, selection=list(selection.sorted_ids()))
        stats = {"wall_ms": round((time.perf_counter() - started) * 1000.0, 3)}
    record["feasible"] = check_feasible(cov, selection).ok
    _emit(json.dumps(record, sort_keys=True, indent=2) + "\n", args.out)
    if args.stats_out:
        _emit(json.dumps(stats, sort_keys=True, indent=2) + "\n", args.stats_out)
    if args.out is not None:
        print(f"{args.method} cost={record['cost']} stats={json.dumps(stats, sort_keys=True)}")
    return 0 if record["feasible"] else 1


def cmd_check(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    record = json.loads(Path(args.solution).read_text())
    if record["instance_hash"] != _instance_hash(instance):
        print("check: FAIL instance hash mismatch")
        return 1
    work = perturb_release_times(instance, Fraction(record["epsilon"]))
    T = total_horizon(work) if work.jobs else 0
    grid = build_grid(T + 1, record["K"], shift=record["shift"], leaf_len=record["leaf_len"])
    cov = build_covering(work, grid, cost_model=record.get("cost_model", "weighted_length"))
    selection = Selection.of(record["selection"])
    report = check_feasible(cov, selection)
    cost = selection_cost(cov, selection)
    ok = report.ok and cost == record["cost"]
    if ok:
        print(f"check: OK cost={cost} rays clean, prefixes clean")
        return 0
    print(
        "check: FAIL "
        f"cost={cost} recorded={record['cost']} "
        f"prefix_violations={len(report.prefix_violations)} "
        f"demand_violations={len(report.demand_violations)}"
    )
    for v in report.demand_violations[:10]:
        print(f"  ray [{v.s},{v.t}] needs {v.required}, covered {v.covered}")
    for v in report.prefix_violations[:10]:
        print(
            f"  group job={v.job} cell=[{v.cell_begin},{v.cell_end}) "
            f"selected positions {list(v.selected_positions)}"
        )
    return 1


def cmd_pipeline(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    started = time.perf_counter()
    eps, work, T, P, shift, cov = _reduction(instance, args)
    result = dp_solve(cov)
    feasible = check_feasible(cov, result.selection).ok
    wall_ms = round((time.perf_counter() - started) * 1000.0, 3)
    record = {
        "instance_hash": _instance_hash(instance),
        "epsilon": str(eps),
        "K": args.K,
        "shift": shift,
        "n": work.n,
        "P": P,
        "T": T,
        "dp_cost": result.cost,
        "selection": list(result.selection.sorted_ids()),
        "states": result.stats.states,
        "max_depth": result.stats.max_depth,
        "feasible": feasible,
        "wall_ms": wall_ms,
    }
    text = json.dumps(record, sort_keys=True, indent=2) + "\n"
    if args.out:
        _emit(text, args.out)
    sys.stdout.write(text)
    if args.csv:
        _append_csv(
            args.csv,
            f"{args.seed},{work.n},{P},{args.K},{shift},{T},"
            f"{result.cost},,{result.stats.states},{round(wall_ms)}",
        )
    return 0 if feasible else 1


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = CampaignConfig(
        seed=args.seed,
        trials=args.trials,
        K=args.K,
        epsilon=Fraction(args.epsilon or "1"),
        n_max=args.n,
        p_max=args.pmax,
        w_max=args.wmax,
        horizon_max=args.horizon,
        leaf_len=args.leaf_len,
        cost_model=args.cost_model,
        workers=args.workers,
        budget=OracleBudget(),
    )
    started = time.perf_counter()
    result = run_campaign(cfg)
    elapsed = time.perf_counter() - started
    if args.out:
        _emit(result.summary_json(), args.out)
    if args.csv:
        _emit("\n".join(result.csv_lines()) + "\n", args.csv)
    if args.plot:
        _emit("\n".join(result.plot_lines()) + "\n", args.plot)
    failures = result.failures
    for report in failures:
        print(f"FAIL trial seed={report.seed}: {report.status} {report.detail}")
        if args.regression_dir and report.instance_json:
            target = Path(args.regression_dir)
            target.mkdir(parents=True, exist_ok=True)
            meta = {
                "seed": report.seed,
                "K": report.K,
                "epsilon": report.epsilon,
                "leaf_len": report.leaf_len,
                "shift": report.shift,
                "status": report.status,
                "detail": report.detail,
                "instance": json.loads(report.instance_json),
            }
            path = target / f"regression_seed{report.seed}.json"
            path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
            print(f"  saved {path}")
    print(
        f"verify: {result.verified}/{cfg.trials} ok, "
        f"{len(failures)} failed, {result.skipped} skipped "
        f"({elapsed:.1f}s)"
    )
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowcover",
        description=(
            "Exact covering solver for the rectangle/ray reduction of preemptive "
            "weighted flow time, with brute-force verification oracles."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, reduction: bool = True) -> None:
        p.add_argument("--seed", type=int, default=0, help="seed for shifts and draws")
        p.add_argument("--K", type=int, default=2, help="grid branching factor (>= 2)")
        p.add_argument("--epsilon", type=str, default=None, help='accuracy, e.g. "1" or "1/2"')
        if reduction:
            p.add_argument("--leaf-len", type=int, default=1, dest="leaf_len")
            p.add_argument(
                "--cost-model",
                default="weighted_length",
                dest="cost_model",
                choices=["weighted_length", "unit"],
            )

    p = sub.add_parser("gen", help="generate a random instance file")
    common(p, reduction=False)
    p.add_argument("--n", type=int, default=4, help="max job count")
    p.add_argument("--pmax", type=int, default=4, help="max processing time")
    p.add_argument("--wmax", type=int, default=4, help="max weight")
    p.add_argument("--horizon", type=int, default=64, help="cap on preprocessed horizon")
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("reduce", help="preprocess and dump the covering instance")
    common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("solve", help="solve one instance with the DP or the oracle")
    common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=["dp", "oracle"], default="dp")
    p.add_argument("--out", default=None)
    p.add_argument("--stats-out", default=None, dest="stats_out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="re-verify a solution file against its instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("pipeline", help="preprocess, reduce, solve, check; emit a record")
    common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None, help="append a CSV row here")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("verify", help="paired DP-vs-oracle campaign over random instances")
    common(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--pmax", type=int, default=4)
    p.add_argument("--wmax", type=int, default=4)
    p.add_argument("--horizon", type=int, default=64)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="summary JSON path")
    p.add_argument("--csv", default=None, help="per-trial CSV path")
    p.add_argument("--plot", default=None, help="states-vs-nP table path")
    p.add_argument("--regression-dir", default=None, dest="regression_dir")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
