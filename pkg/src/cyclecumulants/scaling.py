"""N-grid sweeps, log-log exponent fits, and verdicts for the scaling laws
the ensemble class is defined by: cyclic cumulants ~ N^(1-n), disjoint-cycle
cumulants ~ N^(2-r-n), trace cumulants ~ N^(2-2r), profile continuity, and
self-averaging of the trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cumulants import (
    CumulantEstimate,
    EntryCycle,
    TracePower,
    estimate_cumulant,
    estimate_trace_cumulant,
)
from .ensembles import EnsembleSpec
from .transforms import EntrywiseSpec, Transform, transform_label

DEFAULT_SIZES = (32, 48, 64, 96, 128, 192)
DEFAULT_TOLERANCE = 0.25

PASS = "PASS"
BOUNDED = "BOUNDED"
FAIL = "FAIL"


@dataclass(frozen=True)
class NGrid:
    """Ascending matrix sizes with a per-size sample count."""

    sizes: tuple[int, ...] = DEFAULT_SIZES
    samples: int = 2000

    def __post_init__(self) -> None:
        if len(self.sizes) < 3:
            raise ValueError("need at least 3 sizes for an exponent fit")
        if any(n < 8 for n in self.sizes):
            raise ValueError("all sizes must be >= 8")
        if list(self.sizes) != sorted(self.sizes):
            raise ValueError("sizes must be ascending")

    def to_json(self) -> dict:
        return {"sizes": list(self.sizes), "samples": self.samples}

    @staticmethod
    def from_json(obj: dict) -> "NGrid":
        return NGrid(tuple(int(n) for n in obj["sizes"]), int(obj["samples"]))


@dataclass(frozen=True)
class ScalingFit:
    """Weighted log-log fit of |value| against N."""

    exponent: float
    exponent_error: float
    log_prefactor: float
    r_squared: float
    sign_consistent: bool

    def to_json(self) -> dict:
        return {
            "exponent": self.exponent,
            "exponent_error": self.exponent_error,
            "log_prefactor": self.log_prefactor,
            "r_squared": self.r_squared,
            "sign_consistent": self.sign_consistent,
        }


@dataclass(frozen=True)
class ZeroBound:
    """All points consistent with zero at 2 sigma: no fit, only a bound.

    bound_exponent is the least-squares slope of the 2-sigma envelopes, so
    the underlying decay is consistent with "at least this fast".
    """

    bound_exponent: float
    max_significance: float

    def to_json(self) -> dict:
        return {
            "bound_exponent": self.bound_exponent,
            "max_significance": self.max_significance,
            "statistically_zero": True,
        }


def fit_exponent(points: Sequence[tuple[float, float, float]]) -> ScalingFit | ZeroBound:
    """Fit log|value| = a log N + b by weighted least squares.

    points are (N, value, error) triples.  When every value is within 2 sigma
    of zero the result is a ZeroBound instead of a fit; a significant sign
    flip is reported through sign_consistent=False.
    """
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    ns = np.array([p[0] for p in points], dtype=float)
    vals = np.array([p[1] for p in points], dtype=float)
    errs = np.array([p[2] for p in points], dtype=float)
    if np.any(ns <= 0):
        raise ValueError("sizes must be positive")

    significant = np.abs(vals) > 2 * errs
    if not np.any(significant):
        envelope = np.abs(vals) + 2 * errs
        envelope = np.maximum(envelope, 1e-300)
        slope, _ = _wls(np.log(ns), np.log(envelope), np.ones_like(ns))[:2]
        with np.errstate(divide="ignore", invalid="ignore"):
            signif = np.where(errs > 0, np.abs(vals) / errs, 0.0)
        return ZeroBound(bound_exponent=float(slope), max_significance=float(np.max(signif)))

    signs = np.sign(vals[significant])
    sign_consistent = bool(np.all(signs == signs[0]))

    mags = np.abs(vals)
    if np.any(mags == 0):
        raise ValueError("zero value with significant companions; no log fit possible")
    x = np.log(ns)
    y = np.log(mags)
    if np.all(errs > 0):
        w = (mags / errs) ** 2  # 1/sigma_log^2
    else:
        w = np.ones_like(y)
    slope, intercept, slope_err, r2 = _wls(x, y, w)
    return ScalingFit(
        exponent=float(slope),
        exponent_error=float(slope_err),
        log_prefactor=float(intercept),
        r_squared=float(r2),
        sign_consistent=sign_consistent,
    )


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float, float, float]:
    """Weighted least squares; returns (slope, intercept, slope_error, r2).

    With w = 1/sigma^2 the parameter variance is 1/Sxx, inflated by the
    reduced chi-square when the fit is poor; with unit weights it falls back
    to the residual-based estimate.
    """
    sw = np.sum(w)
    xb = np.sum(w * x) / sw
    yb = np.sum(w * y) / sw
    sxx = np.sum(w * (x - xb) ** 2)
    sxy = np.sum(w * (x - xb) * (y - yb))
    slope = sxy / sxx
    intercept = yb - slope * xb
    resid = y - (slope * x + intercept)
    dof = max(len(x) - 2, 1)
    chi2 = float(np.sum(w * resid**2))
    if np.all(w == 1.0):
        slope_var = chi2 / dof / sxx
    else:
        slope_var = max(1.0, chi2 / dof) / sxx
    sst = float(np.sum(w * (y - yb) ** 2))
    r2 = 1.0 - chi2 / sst if sst > 0 else 1.0
    return float(slope), float(intercept), float(math.sqrt(slope_var)), float(r2)


def derive_seed(base_seed: int, *context: int) -> int:
    """Stable 63-bit seed for a sweep cell, keyed by the base seed and context."""
    ss = np.random.SeedSequence(entropy=[base_seed & 0xFFFFFFFFFFFFFFFF, *[c & 0xFFFFFFFF for c in context]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass
class CheckReport:
    """Verdict plus everything needed to reproduce and plot one check."""

    name: str
    kind: str
    verdict: str
    target: float | None
    tolerance: float | None
    fit: ScalingFit | ZeroBound | None
    rows: list[CumulantEstimate] = field(default_factory=list)
    grid: NGrid | None = None
    seed: int = 0
    notes: list[str] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "type": self.kind,
            "verdict": self.verdict,
            "target_exponent": self.target,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "notes": list(self.notes),
        }
        if isinstance(self.fit, ScalingFit):
            out["fitted"] = self.fit.exponent
            out["error"] = self.fit.exponent_error
            out["r_squared"] = self.fit.r_squared
            out["fit"] = self.fit.to_json()
        elif isinstance(self.fit, ZeroBound):
            out["fit"] = self.fit.to_json()
        if self.rows:
            out["points"] = [
                [r.size, r.value.real, r.std_error] for r in self.rows
            ]
        if self.grid is not None:
            out["grid"] = self.grid.to_json()
        if self.extras:
            out["extras"] = _jsonable(self.extras)
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return obj


def _exponent_verdict(
    fit: ScalingFit | ZeroBound, target: float, tolerance: float, notes: list[str]
) -> str:
    if isinstance(fit, ZeroBound):
        notes.append(
            f"all points within 2 sigma of zero; decay bounded by exponent "
            f"{fit.bound_exponent:.3f} (claim is an upper bound here, not refuted)"
        )
        return BOUNDED
    if not fit.sign_consistent:
        notes.append("sign flip across N beyond 2 sigma: no clean power law")
        return FAIL
    if abs(fit.exponent - target) <= tolerance:
        return PASS
    notes.append(
        f"fitted exponent {fit.exponent:.3f} +- {fit.exponent_error:.3f} "
        f"misses target {target} by more than {tolerance}"
    )
    return FAIL


def _grid_estimates(
    spec,
    observable_builder,
    grid: NGrid,
    transform: Transform | None,
) -> list[CumulantEstimate]:
    rows = []
    for n in grid.sizes:
        sub = spec.with_size(n, derive_seed(spec.seed, n))
        obs = observable_builder(n)
        rows.append(estimate_cumulant(sub, obs, grid.samples, transform))
    return rows


def _indices_from_pattern(pattern: Sequence[float], n: int) -> tuple[int, ...]:
    idx = tuple(min(max(int(round(x * n)), 1), n) for x in pattern)
    if len(set(idx)) != len(idx):
        raise ValueError(
            f"index pattern {pattern} collides after rounding at N={n}: {idx}"
        )
    return idx


def default_pattern(count: int, offset: float = 0.0) -> tuple[float, ...]:
    return tuple((j + 0.5) / count + offset for j in range(count))


def verify_cyclic_scaling(
    spec,
    n: int = 2,
    x_pattern: Sequence[float] | None = None,
    grid: NGrid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    transform: Transform | None = None,
    name: str = "cyclic-scaling",
) -> CheckReport:
    """Cyclic cumulant of n entries must scale as N^(1-n).

    Indices are pinned as fractions of N (rounded, collision checked), so the
    scaled positions x_k stay fixed along the sweep.
    """
    if n > 4:
        raise ValueError("cyclic scaling sweeps support n <= 4")
    grid = grid or NGrid()
    pattern = tuple(x_pattern) if x_pattern is not None else default_pattern(n)
    if len(pattern) != n:
        raise ValueError("x pattern length must equal the cycle length")

    rows = _grid_estimates(
        spec,
        lambda size: EntryCycle((_indices_from_pattern(pattern, size),)),
        grid,
        transform,
    )
    target = float(1 - n)
    fit = fit_exponent([(r.size, r.value.real, r.std_error) for r in rows])
    notes: list[str] = []
    verdict = _exponent_verdict(fit, target, tolerance, notes)
    return CheckReport(
        name=name,
        kind="cyclic-scaling",
        verdict=verdict,
        target=target,
        tolerance=tolerance,
        fit=fit,
        rows=rows,
        grid=grid,
        seed=spec.seed,
        notes=notes,
        extras={"n": n, "x_pattern": list(pattern), "transform": transform_label(transform)},
    )


def verify_disjoint_scaling(
    spec,
    cycle_lengths: Sequence[int],
    insertions: Sequence[Sequence[int]] | None = None,
    grid: NGrid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    transform: Transform | None = None,
    name: str = "disjoint-cycles",
) -> CheckReport:
    """Joint cumulant of r disjoint entry cycles must scale as N^(2-r-n)."""
    r = len(cycle_lengths)
    n = sum(cycle_lengths)
    order = n
    if order > 6:
        raise ValueError("total cumulant order must be <= 6")
    grid = grid or NGrid()
    patterns = []
    total = n
    pos = 0
    flat = default_pattern(total)
    for length in cycle_lengths:
        patterns.append(flat[pos : pos + length])
        pos += length
    powers = None
    if insertions is not None:
        powers = tuple(tuple(q + 1 for q in cyc) for cyc in insertions)

    def build(size: int) -> EntryCycle:
        cycles = tuple(_indices_from_pattern(p, size) for p in patterns)
        all_idx = [i for c in cycles for i in c]
        if len(set(all_idx)) != len(all_idx):
            raise ValueError(f"cycles share an index at N={size}")
        return EntryCycle(cycles, powers)

    rows = _grid_estimates(spec, build, grid, transform)
    m = 0 if insertions is None else sum(sum(c) for c in insertions)
    target = float(2 - r - n)
    fit = fit_exponent([(row.size, row.value.real, row.std_error) for row in rows])
    notes: list[str] = []
    verdict = _exponent_verdict(fit, target, tolerance, notes)
    return CheckReport(
        name=name,
        kind="disjoint-cycles",
        verdict=verdict,
        target=target,
        tolerance=tolerance,
        fit=fit,
        rows=rows,
        grid=grid,
        seed=spec.seed,
        notes=notes,
        extras={
            "cycle_lengths": list(cycle_lengths),
            "insertions": None if insertions is None else [list(c) for c in insertions],
            "r": r,
            "n": n,
            "extra_elements": m,
            "transform": transform_label(transform),
        },
    )


def verify_trace_scaling(
    spec,
    powers: Sequence[int],
    grid: NGrid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    transform: Transform | None = None,
    name: str = "trace-cumulants",
) -> CheckReport:
    """Joint cumulant of r normalized power traces must scale as N^(2-2r).

    Only the exponent is checked: the finite coefficient is not determined
    by the local cumulant data, so no value-level prediction is made.
    """
    grid = grid or NGrid()
    r = len(powers)
    rows = []
    for size in grid.sizes:
        sub = spec.with_size(size, derive_seed(spec.seed, size))
        rows.append(estimate_trace_cumulant(sub, powers, grid.samples, transform))
    target = float(2 - 2 * r)
    fit = fit_exponent([(row.size, row.value.real, row.std_error) for row in rows])
    notes: list[str] = []
    verdict = _exponent_verdict(fit, target, tolerance, notes)
    return CheckReport(
        name=name,
        kind="trace-cumulants",
        verdict=verdict,
        target=target,
        tolerance=tolerance,
        fit=fit,
        rows=rows,
        grid=grid,
        seed=spec.seed,
        notes=notes,
        extras={"powers": list(powers), "r": r, "transform": transform_label(transform)},
    )


def verify_continuity(
    spec,
    size: int | None = None,
    samples: int = 4000,
    meshes: tuple[int, int] = (8, 16),
    decay_threshold: float = 0.8,
    noise_factor: float = 3.0,
    transform: Transform | None = None,
    name: str = "continuity",
) -> CheckReport:
    """Scaled pair cumulant N*C_2 must look continuous in (x, y) = (i, j)/N.

    The check estimates the scaled local pair cumulant on two meshes of
    scaled positions, including the diagonal, and requires the largest jump
    between neighboring cells to shrink under mesh refinement (up to the
    statistical noise floor).  A step variance profile is the deliberate
    negative control: its jump survives refinement.
    """
    from .transforms import apply_transform

    coarse, fine = meshes
    if fine <= coarse:
        raise ValueError("meshes must be (coarse, fine) with fine > coarse")
    size = size or DEFAULT_SIZES[-1]
    sub = spec.with_size(size, derive_seed(spec.seed, size, 3))

    def mesh_jumps(mesh: int) -> tuple[float, float]:
        xs = default_pattern(mesh)
        idx = _indices_from_pattern(xs, size)
        k = len(idx)
        sums_a = np.zeros((k, k), dtype=np.complex128)
        sums_p = np.zeros((k, k), dtype=np.complex128)
        sums_p2 = np.zeros((k, k), dtype=float)
        ii = np.array(idx) - 1
        for raw in sub.samples(samples):
            m = apply_transform(raw, transform).entries
            sub_m = m[np.ix_(ii, ii)]
            prod = sub_m * sub_m.T  # per cell: M_ij * M_ji
            sums_a += sub_m
            sums_p += prod
            sums_p2 += np.abs(prod) ** 2
        mean_a = sums_a / samples
        mean_p = sums_p / samples
        g = size * (mean_p - mean_a * mean_a.T)
        gr = g.real
        var_p = np.maximum(sums_p2 / samples - np.abs(mean_p) ** 2, 0.0)
        se = size * np.sqrt(var_p / samples)
        jumps = []
        for a in range(k):
            for b in range(k):
                if a + 1 < k:
                    jumps.append(abs(gr[a + 1, b] - gr[a, b]))
                if b + 1 < k:
                    jumps.append(abs(gr[a, b + 1] - gr[a, b]))
        noise = float(np.max(se)) * math.sqrt(2.0)
        return float(max(jumps)), noise

    coarse_jump, coarse_noise = mesh_jumps(coarse)
    fine_jump, fine_noise = mesh_jumps(fine)
    noise = noise_factor * max(coarse_noise, fine_noise)
    shrank = fine_jump <= decay_threshold * coarse_jump + noise
    tiny = fine_jump <= noise
    verdict = PASS if (shrank or tiny) else FAIL
    notes = []
    if verdict == FAIL:
        notes.append(
            f"max jump did not shrink under refinement: coarse {coarse_jump:.4f} "
            f"-> fine {fine_jump:.4f} (noise allowance {noise:.4f})"
        )
    return CheckReport(
        name=name,
        kind="continuity",
        verdict=verdict,
        target=None,
        tolerance=decay_threshold,
        fit=None,
        rows=[],
        grid=None,
        seed=spec.seed,
        notes=notes,
        extras={
            "N": size,
            "samples": samples,
            "meshes": list(meshes),
            "coarse_jump": coarse_jump,
            "fine_jump": fine_jump,
            "noise_allowance": noise,
            "decay_threshold": decay_threshold,
            "transform": transform_label(transform),
        },
    )


def _logmeanexp(w: np.ndarray) -> float:
    wmax = float(np.max(w))
    return wmax + math.log(float(np.mean(np.exp(w - wmax))))


def verify_self_averaging(
    spec,
    z: float = 0.1,
    grid: NGrid | None = None,
    threshold: float = -0.8,
    term_orders: tuple[int, ...] = (2, 3),
    transform: Transform | None = None,
    name: str = "self-averaging",
) -> CheckReport:
    """The normalized trace is self-averaging: the gap
    (1/N) log E[exp(z N tr M / N)] - z E[tr M / N] must vanish at least like
    N^threshold along the sweep.

    Also reported per order n: the cumulant term z^n N^n C_n[trM/N, ...]/n!
    fitted against its expected N^(2-n) dropoff.
    """
    from .transforms import apply_transform

    grid = grid or NGrid()
    rows = []
    gap_points = []
    z_used = z
    for size in grid.sizes:
        sub = spec.with_size(size, derive_seed(spec.seed, size, 7))
        traces = np.empty(grid.samples, dtype=float)
        for col, raw in enumerate(sub.samples(grid.samples)):
            m = apply_transform(raw, transform)
            traces[col] = float(np.trace(m.entries).real) / size
        w = z_used * size * traces
        while np.max(np.abs(w)) > 500:
            z_used /= 2
            w = z_used * size * traces
        s = len(traces)
        gap = (_logmeanexp(w)) / size - z_used * float(np.mean(traces))
        # delete-1 jackknife of the gap
        if s > 1:
            wmax = float(np.max(w))
            ew = np.exp(w - wmax)
            tot = float(np.sum(ew))
            lme_del = wmax + np.log((tot - ew) / (s - 1))
            tr_del = (np.sum(traces) - traces) / (s - 1)
            gap_del = lme_del / size - z_used * tr_del
            center = np.mean(gap_del)
            se = float(np.sqrt((s - 1) / s * np.sum((gap_del - center) ** 2)))
        else:
            se = 0.0
        gap_points.append((size, gap, se))
        rows.append(
            CumulantEstimate(
                order=1,
                value=complex(gap),
                std_error=se,
                sample_count=grid.samples,
                size=size,
                observable=f"self-averaging gap(z={z_used:g})",
                ensemble=sub.label(),
                seed=sub.seed,
            )
        )
    notes: list[str] = []
    if z_used != z:
        notes.append(f"z reduced from {z} to {z_used} to avoid overflow")
    fit = fit_exponent(gap_points)
    if isinstance(fit, ZeroBound):
        verdict = BOUNDED
        notes.append("gap statistically zero at every N")
    elif fit.exponent <= threshold:
        verdict = PASS
    else:
        verdict = FAIL
        notes.append(
            f"gap exponent {fit.exponent:.3f} decays slower than threshold {threshold}"
        )

    term_reports = {}
    for order in term_orders:
        term_rows = []
        for size in grid.sizes:
            sub = spec.with_size(size, derive_seed(spec.seed, size, 7))
            est = estimate_trace_cumulant(sub, [1] * order, grid.samples, transform)
            factor = (z_used**order) * (float(size) ** order) / math.factorial(order)
            term_rows.append((size, est.value.real * factor, est.std_error * factor))
        tfit = fit_exponent(term_rows)
        target = float(2 - order)
        tnotes: list[str] = []
        tverdict = _exponent_verdict(tfit, target, DEFAULT_TOLERANCE, tnotes)
        term_reports[f"order_{order}"] = {
            "target": target,
            "verdict": tverdict,
            "fit": tfit.to_json(),
            "points": [[n_, v_, e_] for n_, v_, e_ in term_rows],
        }

    return CheckReport(
        name=name,
        kind="self-averaging",
        verdict=verdict,
        target=threshold,
        tolerance=None,
        fit=fit,
        rows=rows,
        grid=grid,
        seed=spec.seed,
        notes=notes,
        extras={"z": z, "z_used": z_used, "terms": term_reports, "transform": transform_label(transform)},
    )


def verify_transform_stability(
    spec,
    transform: Transform,
    checks: Sequence[dict],
    grid: NGrid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    allow_uncentered: bool = False,
    name: str = "transform",
) -> CheckReport:
    """Rerun scaling checks on the transformed ensemble with paired seeds.

    Each check descriptor is {"check": <kind>, ...params}.  The entry-wise
    family assumes centered matrices, E[M_ii] = 0; uncentered ensembles are
    refused unless allow_uncentered is set.
    """
    grid = grid or NGrid()
    if isinstance(transform, EntrywiseSpec) and not allow_uncentered:
        if not spec.is_centered():
            raise ValueError(
                "entry-wise transform assumes centered matrices (E[M_ii] = 0); "
                "shift the diagonal first or pass allow_uncentered=True"
            )
    sub_reports: list[CheckReport] = []
    for i, desc in enumerate(checks):
        desc = dict(desc)
        kind = desc.pop("check")
        sub_name = desc.pop("name", f"{name}.{kind}.{i}")
        tol = desc.pop("tolerance", tolerance)
        sub_grid = NGrid.from_json(desc.pop("grid")) if "grid" in desc else grid
        if kind == "cyclic-scaling":
            rep = verify_cyclic_scaling(
                spec, grid=sub_grid, tolerance=tol, transform=transform, name=sub_name, **desc
            )
        elif kind == "disjoint-cycles":
            rep = verify_disjoint_scaling(
                spec, grid=sub_grid, tolerance=tol, transform=transform, name=sub_name, **desc
            )
        elif kind == "trace-cumulants":
            rep = verify_trace_scaling(
                spec, grid=sub_grid, tolerance=tol, transform=transform, name=sub_name, **desc
            )
        elif kind == "self-averaging":
            rep = verify_self_averaging(
                spec, grid=sub_grid, transform=transform, name=sub_name, **desc
            )
        else:
            raise ValueError(f"unknown sub-check {kind!r} for transform stability")
        sub_reports.append(rep)
    worst = PASS
    for rep in sub_reports:
        if rep.verdict == FAIL:
            worst = FAIL
            break
        if rep.verdict == BOUNDED:
            worst = BOUNDED
    all_rows = [row for rep in sub_reports for row in rep.rows]
    return CheckReport(
        name=name,
        kind="transform",
        verdict=worst,
        target=None,
        tolerance=tolerance,
        fit=None,
        rows=all_rows,
        grid=grid,
        seed=spec.seed,
        notes=[f"{rep.name}: {rep.verdict}" for rep in sub_reports],
        extras={
            "transform": transform_label(transform),
            "sub_checks": [rep.to_json() for rep in sub_reports],
        },
    )
