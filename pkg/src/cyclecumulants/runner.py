"""Config-driven experiment runs: parse, validate, execute, report.

A run takes a JSON config naming an ensemble and a list of checks, executes
the checks in order, and writes a JSON report plus a CSV of raw estimates.
Rerunning the same config byte-reproduces every numeric output, including
under a different worker count: sweep cells are computed in parallel but
reduced in sorted order.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cumulants import CSV_FIELDS
from .ensembles import EnsembleSpec
from .oracle import CycleSpec, claim_check, entrywise_oracle, leading_exponent
from .partitions import (
    bell_number,
    catalan_number,
    enumerate_noncrossing,
    enumerate_partitions,
)
from .profiles import Profile1D, constant1d, linear1d
from .scaling import (
    BOUNDED,
    FAIL,
    NGrid,
    PASS,
    CheckReport,
    verify_continuity,
    verify_cyclic_scaling,
    verify_disjoint_scaling,
    verify_self_averaging,
    verify_trace_scaling,
    verify_transform_stability,
)
from .theory import compare_theory_vs_mc
from .transforms import transform_from_json

DEFAULT_TOLERANCE = 0.25
ENV_PREFIX = "CYCLECUM_"

CHECK_TYPES = (
    "enumerate-partitions",
    "enumerate-nc",
    "cyclic-scaling",
    "disjoint-cycles",
    "trace-cumulants",
    "continuity",
    "self-averaging",
    "transform",
    "theory-vs-mc",
    "oracle-leading",
    "oracle-claim",
    "oracle-entrywise",
)


class ConfigError(ValueError):
    """Invalid experiment config; the message carries the JSON path."""


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}: missing required key {key!r}")
    return obj[key]


def expand_config(raw: dict) -> dict:
    """Validate and fill defaults; the result reproduces the run exactly."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    out = dict(raw)
    out.setdefault("seed", 0)
    out.setdefault("out", "runs/latest")
    out.setdefault("jobs", 1)
    out.setdefault("tolerance", DEFAULT_TOLERANCE)
    ensemble = _require(out, "ensemble", "config")
    try:
        spec = EnsembleSpec.from_json(
            {**ensemble, "seed": ensemble.get("seed", out["seed"])}
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"config.ensemble: {exc}") from exc
    out["ensemble"] = spec.to_json()
    checks = out.setdefault("checks", [])
    if not isinstance(checks, list):
        raise ConfigError("config.checks must be a list")
    names = set()
    expanded = []
    for i, chk in enumerate(checks):
        path = f"config.checks[{i}]"
        if not isinstance(chk, dict):
            raise ConfigError(f"{path}: must be an object")
        chk = dict(chk)
        ctype = _require(chk, "type", path)
        if ctype not in CHECK_TYPES:
            raise ConfigError(f"{path}.type: unknown check type {ctype!r}")
        chk.setdefault("name", f"{ctype}-{i}")
        if chk["name"] in names:
            raise ConfigError(f"{path}.name: duplicate check name {chk['name']!r}")
        names.add(chk["name"])
        if ctype in ("cyclic-scaling", "disjoint-cycles", "trace-cumulants", "self-averaging", "transform"):
            grid = chk.setdefault("grid", {"sizes": [32, 48, 64, 96, 128, 192], "samples": 2000})
            try:
                NGrid.from_json(grid)
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"{path}.grid: {exc}") from exc
        if ctype in ("cyclic-scaling", "disjoint-cycles", "trace-cumulants", "transform"):
            chk.setdefault("tolerance", out["tolerance"])
        expanded.append(chk)
    out["checks"] = expanded
    return out


def _delta_profile(name_or_obj) -> Profile1D:
    if isinstance(name_or_obj, dict):
        return Profile1D.from_json(name_or_obj)
    if name_or_obj in (1, "1", "one", "constant"):
        return constant1d(1.0)
    if name_or_obj in ("x", "linear"):
        return linear1d(0.0, 1.0)
    raise ConfigError(f"unknown delta profile {name_or_obj!r}")


def _cycle_spec_from(chk: dict, kind: str = "power") -> CycleSpec:
    lengths = chk["cycles"]
    insertions = chk.get("insertions")
    return CycleSpec.from_lengths(lengths, insertions, kind=kind)


@dataclass
class RunReport:
    config: dict
    checks: list[dict] = field(default_factory=list)
    wall_seconds: dict = field(default_factory=dict)
    raw_csv: str = "raw_estimates.csv"

    @property
    def overall(self) -> str:
        verdicts = [c.get("verdict", PASS) for c in self.checks]
        if any(v == FAIL for v in verdicts):
            return FAIL
        return PASS

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "versions": {
                "cyclecumulants": __version__,
                "numpy": np.__version__,
            },
            "checks": self.checks,
            "wall_seconds": self.wall_seconds,
            "raw_csv": self.raw_csv,
            "overall": self.overall,
        }


def _run_one_check(chk: dict, spec: EnsembleSpec, jobs: int) -> tuple[dict, list[dict]]:
    """Returns (verdict row, raw CSV rows)."""
    ctype = chk["type"]
    name = chk["name"]

    if ctype == "enumerate-partitions":
        k = int(chk["k"])
        parts = enumerate_partitions(k)
        expected = bell_number(k)
        verdict = PASS if len(parts) == expected else FAIL
        return (
            {"name": name, "type": ctype, "verdict": verdict, "count": len(parts),
             "expected": expected},
            [],
        )
    if ctype == "enumerate-nc":
        n = int(chk["n"])
        parts = enumerate_noncrossing(n)
        expected = catalan_number(n)
        verdict = PASS if len(parts) == expected else FAIL
        return (
            {"name": name, "type": ctype, "verdict": verdict, "count": len(parts),
             "expected": expected},
            [],
        )
    if ctype == "oracle-leading":
        cs = _cycle_spec_from(chk, chk.get("kind", "power"))
        exponent, argmax = leading_exponent(cs)
        verdict = PASS if exponent == cs.expected_exponent else FAIL
        return (
            {"name": name, "type": ctype, "verdict": verdict,
             "leading_exponent": exponent, "expected": cs.expected_exponent,
             "argmax_count": len(argmax), "spec": cs.label()},
            [],
        )
    if ctype == "oracle-claim":
        cs = _cycle_spec_from(chk, "power")
        result = claim_check(cs)
        verdict = PASS if (result.leading_matches and result.argmax_reachable) else FAIL
        row = {"name": name, "type": ctype, "verdict": verdict}
        row.update(result.to_json())
        return row, []
    if ctype == "oracle-entrywise":
        cs = _cycle_spec_from(chk, "entrywise")
        result = entrywise_oracle(cs)
        verdict = PASS if result.matches else FAIL
        row = {"name": name, "type": ctype, "verdict": verdict}
        row.update(result.to_json())
        return row, []
    if ctype == "theory-vs-mc":
        deltas = [_delta_profile(d) for d in chk.get("deltas", [1] * int(chk["n"]))]
        comparison = compare_theory_vs_mc(
            spec, deltas, int(chk["n"]), samples=int(chk.get("samples", 1000)),
            quad=int(chk.get("quad", 256)),
        )
        verdict = PASS if comparison.within_3sigma else FAIL
        row = {"name": name, "type": ctype, "verdict": verdict}
        row.update(comparison.to_json())
        return row, []

    grid = NGrid.from_json(chk["grid"]) if "grid" in chk else NGrid()
    report: CheckReport
    if ctype == "cyclic-scaling":
        report = verify_cyclic_scaling(
            spec, n=int(chk.get("n", 2)), x_pattern=chk.get("x"),
            grid=grid, tolerance=float(chk["tolerance"]), name=name,
        )
    elif ctype == "disjoint-cycles":
        report = verify_disjoint_scaling(
            spec, chk["cycles"], insertions=chk.get("insertions"),
            grid=grid, tolerance=float(chk["tolerance"]), name=name,
        )
    elif ctype == "trace-cumulants":
        report = verify_trace_scaling(
            spec, chk["powers"], grid=grid, tolerance=float(chk["tolerance"]), name=name,
        )
    elif ctype == "continuity":
        report = verify_continuity(
            spec, size=chk.get("N"), samples=int(chk.get("samples", 4000)),
            meshes=tuple(chk.get("meshes", (8, 16))),
            decay_threshold=float(chk.get("decay_threshold", 0.8)),
            name=name,
        )
    elif ctype == "self-averaging":
        report = verify_self_averaging(
            spec, z=float(chk.get("z", 0.1)), grid=grid,
            threshold=float(chk.get("threshold", -0.8)), name=name,
        )
    elif ctype == "transform":
        report = verify_transform_stability(
            spec, transform_from_json(chk["transform"]), chk["checks"],
            grid=grid, tolerance=float(chk["tolerance"]), name=name,
        )
    else:  # pragma: no cover - guarded by expand_config
        raise ConfigError(f"unhandled check type {ctype}")
    rows = [est.csv_row() for est in report.rows]
    return report.to_json(), rows


def run_config(config: dict, out_dir: str | Path | None = None, jobs: int | None = None) -> RunReport:
    """Execute all checks of an expanded config and write report + raw CSV."""
    config = expand_config(config)
    if jobs is not None:
        config["jobs"] = jobs
    out = Path(out_dir if out_dir is not None else config["out"])
    out.mkdir(parents=True, exist_ok=True)
    spec = EnsembleSpec.from_json(config["ensemble"])
    report = RunReport(config=config)
    raw_rows: list[dict] = []
    for chk in config["checks"]:
        t0 = time.perf_counter()
        row, rows = _run_one_check(chk, spec, config["jobs"])
        report.wall_seconds[chk["name"]] = round(time.perf_counter() - t0, 3)
        report.checks.append(row)
        raw_rows.extend(rows)
    _write_csv(out / report.raw_csv, raw_rows)
    with open(out / "run.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CSV_FIELDS))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def render_report(run_json: dict) -> tuple[str, list[dict]]:
    """Human-readable table plus plot-ready rows (check, N, value, error, fit)."""
    lines = []
    plot_rows = []
    header = f"{'check':28s} {'type':16s} {'verdict':8s} {'target':>8s} {'fitted':>9s} {'error':>8s}"
    lines.append(header)
    lines.append("-" * len(header))
    for chk in run_json.get("checks", []):
        target = chk.get("target_exponent")
        fitted = chk.get("fitted")
        err = chk.get("error")
        lines.append(
            f"{chk.get('name',''):28s} {chk.get('type',''):16s} {chk.get('verdict',''):8s} "
            f"{_fmt(target):>8s} {_fmt(fitted):>9s} {_fmt(err):>8s}"
        )
        fitted_val = fitted if fitted is not None else ""
        for n, value, error in chk.get("points", []):
            plot_rows.append(
                {"check": chk.get("name", ""), "N": n, "value": repr(value),
                 "error": repr(error), "fit": fitted_val}
            )
    lines.append("-" * len(header))
    lines.append(f"overall: {run_json.get('overall', '?')}")
    return "\n".join(lines), plot_rows


def _fmt(x) -> str:
    if x is None:
        return "-"
    return f"{x:.3f}" if isinstance(x, float) else str(x)
