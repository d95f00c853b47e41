"""Command-line entry point.

Subcommands map the library onto flags: `enumerate` for partition listings,
`estimate` for one Monte Carlo cumulant, `verify` for scaling checks,
`oracle` for the symbolic engine, `theory` for the non-crossing trace
formula, `run` for config-driven experiments, and `report` to render a
prior run.  Exit codes: 0 all PASS/BOUNDED, 2 at least one FAIL, 1 usage or
config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .cumulants import TracePower, TraceWithDiagonals, estimate_cumulant
from .ensembles import EnsembleSpec
from .oracle import CycleSpec, claim_check, entrywise_oracle, exponent_table, leading_exponent
from .partitions import enumerate_noncrossing, enumerate_partitions, export_partitions
from .profiles import Profile1D
from .runner import (
    ConfigError,
    ENV_PREFIX,
    expand_config,
    render_report,
    run_config,
    _delta_profile,
)
from .scaling import (
    FAIL,
    NGrid,
    verify_continuity,
    verify_cyclic_scaling,
    verify_disjoint_scaling,
    verify_self_averaging,
    verify_trace_scaling,
)
from .theory import compare_theory_vs_mc, model_for_spec, theory_trace_expectation


def _env_default(name: str, cast, fallback):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    return cast(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclecumulants",
        description="Scaling checks and exact combinatorics for structured random matrix ensembles",
    )
    sub = parser.add_subparsers(dest="command")

    p_enum = sub.add_parser("enumerate", help="list set partitions or non-crossing partitions")
    group = p_enum.add_mutually_exclusive_group(required=True)
    group.add_argument("--partitions", type=int, metavar="K", help="all partitions of {1..K}")
    group.add_argument("--nc", type=int, metavar="N", help="non-crossing partitions of {1..N}")
    p_enum.add_argument("--golden", type=str, help="write the listing to this file instead of stdout")

    p_est = sub.add_parser("estimate", help="one Monte Carlo cumulant estimate")
    p_est.add_argument("--ensemble", required=True, help="ensemble spec as JSON")
    p_est.add_argument("--observable", required=True, help='e.g. {"kind":"trace_power","p":2}')
    p_est.add_argument("--samples", type=int, default=1000)

    p_ver = sub.add_parser("verify", help="run one scaling check")
    p_ver.add_argument("--check", required=True,
                       choices=["cyclic-scaling", "disjoint-cycles", "trace-cumulants",
                                "continuity", "self-averaging"])
    p_ver.add_argument("--ensemble", required=True, help="ensemble spec as JSON, or 'gue'")
    p_ver.add_argument("--n", type=int, default=2)
    p_ver.add_argument("--cycles", type=str, help="comma-separated cycle lengths")
    p_ver.add_argument("--powers", type=str, help="comma-separated trace powers")
    p_ver.add_argument("--z", type=float, default=0.1)
    p_ver.add_argument("--sizes", type=str, default="32,48,64,96,128,192")
    p_ver.add_argument("--samples", type=int, default=2000)
    p_ver.add_argument("--tolerance", type=float,
                       default=_env_default("TOLERANCE", float, 0.25))

    p_orc = sub.add_parser("oracle", help="symbolic leading-exponent engine")
    p_orc.add_argument("--cycles", required=True, help="comma-separated cycle lengths, e.g. 2,2")
    p_orc.add_argument("--insertions", type=str,
                       help="per-cycle per-edge insertion counts, e.g. '1,0:0' for cycles 2,1")
    p_orc.add_argument("--entrywise", action="store_true",
                       help="treat insertions as |M|^2 powers instead of matrix powers")
    p_orc.add_argument("--claim-check", action="store_true",
                       help="also test move reachability of the leading stratum")
    p_orc.add_argument("--dump-exponents", type=str, metavar="CSV",
                       help="write the exponent of every connecting partition")

    p_thy = sub.add_parser("theory", help="non-crossing trace formula")
    p_thy.add_argument("--ensemble", required=True)
    p_thy.add_argument("--n", type=int, required=True)
    p_thy.add_argument("--deltas", type=str, help="comma-separated from {1,x}")
    p_thy.add_argument("--quad", type=int, default=256)
    p_thy.add_argument("--compare-mc", action="store_true")
    p_thy.add_argument("--samples", type=int, default=1000)
    p_thy.add_argument("--breakdown", type=str, metavar="CSV",
                       help="write per-partition contributions")

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", type=str, default=_env_default("OUT", str, None))
    p_run.add_argument("--jobs", type=int, default=_env_default("JOBS", int, None))
    p_run.add_argument("--tolerance", type=float,
                       default=_env_default("TOLERANCE", float, None))

    p_rep = sub.add_parser("report", help="render a prior run")
    p_rep.add_argument("--run", required=True, help="run directory or run.json path")
    p_rep.add_argument("--csv", type=str, help="write the plot-ready CSV here")

    return parser


def _parse_ensemble(raw: str) -> EnsembleSpec:
    if raw.strip().startswith("{"):
        return EnsembleSpec.from_json(json.loads(raw))
    if raw == "gue":
        return EnsembleSpec("gue", 64, _env_default("SEED", int, 0))
    raise SystemExit(f"cannot parse ensemble {raw!r}; pass JSON or 'gue'")


def _parse_cycles(cycles: str, insertions: str | None, entrywise: bool) -> CycleSpec:
    lengths = [int(tok) for tok in cycles.split(",") if tok]
    ins = None
    if insertions:
        ins = [[int(t) for t in chunk.split(",") if t] for chunk in insertions.split(":")]
    return CycleSpec.from_lengths(lengths, ins, kind="entrywise" if entrywise else "power")


def _cmd_enumerate(args) -> int:
    if args.partitions is not None:
        parts = enumerate_partitions(args.partitions)
    else:
        parts = enumerate_noncrossing(args.nc)
    if args.golden:
        export_partitions(args.golden, parts)
        print(f"wrote {len(parts)} partitions to {args.golden}")
    else:
        for p in parts:
            print(p)
    return 0


def _cmd_estimate(args) -> int:
    spec = _parse_ensemble(args.ensemble)
    obs_spec = json.loads(args.observable)
    kind = obs_spec.get("kind")
    if kind == "trace_power":
        obs = TracePower(int(obs_spec["p"]))
    elif kind == "trace_with_diagonals":
        obs = TraceWithDiagonals(tuple(_delta_profile(d) for d in obs_spec["deltas"]))
    elif kind == "entry_cycle":
        from .cumulants import EntryCycle

        cycles = tuple(tuple(int(i) for i in c) for c in obs_spec["cycles"])
        powers = obs_spec.get("powers")
        if powers is not None:
            powers = tuple(tuple(int(q) for q in c) for c in powers)
        obs = EntryCycle(cycles, powers)
    else:
        raise SystemExit(f"unknown observable kind {kind!r}")
    est = estimate_cumulant(spec, obs, args.samples)
    writer = csv.DictWriter(sys.stdout, fieldnames=list(est.csv_row().keys()))
    writer.writeheader()
    writer.writerow(est.csv_row())
    return 0


def _cmd_verify(args) -> int:
    spec = _parse_ensemble(args.ensemble)
    sizes = tuple(int(tok) for tok in args.sizes.split(",") if tok)
    grid = NGrid(sizes, args.samples)
    if args.check == "cyclic-scaling":
        report = verify_cyclic_scaling(spec, n=args.n, grid=grid, tolerance=args.tolerance)
    elif args.check == "disjoint-cycles":
        if not args.cycles:
            raise SystemExit("--cycles required for disjoint-cycles")
        lengths = [int(t) for t in args.cycles.split(",")]
        report = verify_disjoint_scaling(spec, lengths, grid=grid, tolerance=args.tolerance)
    elif args.check == "trace-cumulants":
        if not args.powers:
            raise SystemExit("--powers required for trace-cumulants")
        powers = [int(t) for t in args.powers.split(",")]
        report = verify_trace_scaling(spec, powers, grid=grid, tolerance=args.tolerance)
    elif args.check == "continuity":
        report = verify_continuity(spec, samples=args.samples)
    else:
        report = verify_self_averaging(spec, z=args.z, grid=grid)
    print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    return 0 if report.verdict != FAIL else 2


def _cmd_oracle(args) -> int:
    cs = _parse_cycles(args.cycles, args.insertions, args.entrywise)
    status = 0
    if args.entrywise:
        result = entrywise_oracle(cs)
        print(json.dumps(result.to_json(), indent=2, sort_keys=True))
        status = 0 if result.matches else 2
    else:
        exponent, argmax = leading_exponent(cs)
        print(f"spec {cs.label()}: leading exponent {exponent} "
              f"(expected {cs.expected_exponent}), {len(argmax)} maximizers")
        if exponent != cs.expected_exponent:
            status = 2
        if args.claim_check:
            result = claim_check(cs)
            print(json.dumps(result.to_json(), indent=2, sort_keys=True))
            if not (result.leading_matches and result.argmax_reachable):
                status = 2
    if args.dump_exponents:
        with open(args.dump_exponents, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh)
            writer.writerow(["partition", "exponent", "vanishes"])
            for p, e in exponent_table(cs):
                writer.writerow([str(p), "" if e is None else e, e is None])
        print(f"wrote exponent table to {args.dump_exponents}")
    return status


def _cmd_theory(args) -> int:
    spec = _parse_ensemble(args.ensemble)
    deltas = None
    if args.deltas:
        deltas = [_delta_profile(tok) for tok in args.deltas.split(",")]
    model = model_for_spec(spec, n_max=max(args.n, 4))
    result = theory_trace_expectation(model, deltas, args.n, quad=args.quad)
    print(f"theory value: {result.value!r} (quadrature error {result.quadrature_error:.2e})")
    if args.breakdown:
        with open(args.breakdown, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.DictWriter(fh, fieldnames=["n", "partition", "kreweras", "value"])
            writer.writeheader()
            for row in result.breakdown_rows():
                writer.writerow(row)
        print(f"wrote breakdown to {args.breakdown}")
    if args.compare_mc:
        comparison = compare_theory_vs_mc(spec, deltas, args.n, samples=args.samples)
        print(json.dumps(comparison.to_json(), indent=2, sort_keys=True))
        return 0 if comparison.within_3sigma else 2
    return 0


def _cmd_run(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        raw["seed"] = args.seed
        raw.setdefault("ensemble", {})
        raw["ensemble"]["seed"] = args.seed
    env_seed = os.environ.get(ENV_PREFIX + "SEED")
    if args.seed is None and env_seed is not None:
        raw["seed"] = int(env_seed)
        raw.setdefault("ensemble", {})
        raw["ensemble"]["seed"] = int(env_seed)
    if args.tolerance is not None:
        raw["tolerance"] = args.tolerance
    if args.out is not None:
        raw["out"] = args.out
    if args.jobs is not None:
        raw["jobs"] = args.jobs
    try:
        report = run_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    failures = [c["name"] for c in report.checks if c.get("verdict") == FAIL]
    out_dir = report.config["out"]
    print(f"run complete: {len(report.checks)} checks, report at {out_dir}/run.json")
    if failures:
        print("FAILED checks: " + ", ".join(failures), file=sys.stderr)
        return 2
    return 0


def _cmd_report(args) -> int:
    path = Path(args.run)
    if path.is_dir():
        path = path / "run.json"
    try:
        with open(path, "r", encoding="utf-8") as fh:
            run_json = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read run: {exc}", file=sys.stderr)
        return 1
    table, plot_rows = render_report(run_json)
    print(table)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.DictWriter(fh, fieldnames=["check", "N", "value", "error", "fit"])
            writer.writeheader()
            for row in plot_rows:
                writer.writerow(row)
        print(f"wrote plot data to {args.csv}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage()
        return 1
    handlers = {
        "enumerate": _cmd_enumerate,
        "estimate": _cmd_estimate,
        "verify": _cmd_verify,
        "oracle": _cmd_oracle,
        "theory": _cmd_theory,
        "run": _cmd_run,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except SystemExit:
        raise
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
