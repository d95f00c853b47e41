"""Predicted single-trace expectations from local cumulant data.

The large-N expectation of tr(M D_1 ... M D_n)/N is a sum over non-crossing
partitions: each partition contributes the product of local cumulants over
its blocks, with the Kreweras complement dictating which scaled positions
coincide.  Deltas are resolved exactly by collapsing variables, never by
discretized spikes, so the combinatorial structure is grid independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cumulants import TraceWithDiagonals, estimate_cumulant
from .partitions import SetPartition, enumerate_noncrossing, kreweras_complement
from .profiles import Profile1D, Profile2D, constant1d


class MissingCumulantWarning(UserWarning):
    """A requested g_n is not available in the model; the term was dropped."""


@dataclass(frozen=True)
class CumulantEntry:
    """One g_n: exactly zero, a constant, or a function of n positions."""

    order: int
    kind: str  # "zero" | "constant" | "function"
    value: float = 0.0
    fn: Callable | None = None  # vectorized, n array arguments

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "constant", "function"):
            raise ValueError(f"bad entry kind {self.kind}")
        if self.kind == "function" and self.fn is None:
            raise ValueError("function entry needs fn")


@dataclass(frozen=True)
class LocalFreeCumulantModel:
    """Local cumulant data g_n for n = 1..n_max.

    zero_above_max=True means every order beyond n_max is exactly zero (the
    independent-entry case); otherwise missing orders are unavailable and the
    evaluator drops those terms with a loud warning.
    """

    entries: tuple[CumulantEntry, ...]
    zero_above_max: bool = False
    label: str = "model"

    @property
    def n_max(self) -> int:
        return len(self.entries)

    def entry(self, order: int) -> CumulantEntry | None:
        if 1 <= order <= self.n_max:
            return self.entries[order - 1]
        if self.zero_above_max:
            return CumulantEntry(order, "zero")
        return None

    @staticmethod
    def from_constants(kappas: Sequence[float], label: str = "constants") -> "LocalFreeCumulantModel":
        entries = []
        for i, k in enumerate(kappas, start=1):
            if k == 0:
                entries.append(CumulantEntry(i, "zero"))
            else:
                entries.append(CumulantEntry(i, "constant", float(k)))
        return LocalFreeCumulantModel(tuple(entries), zero_above_max=False, label=label)

    @staticmethod
    def independent_entries(sigma: Profile2D, label: str = "band") -> "LocalFreeCumulantModel":
        """g_1 = 0, g_2 = sigma, all higher orders exactly zero."""
        entries = (
            CumulantEntry(1, "zero"),
            CumulantEntry(2, "function", fn=lambda x, y: sigma(x, y)),
        )
        return LocalFreeCumulantModel(entries, zero_above_max=True, label=label)

    @staticmethod
    def gue(label: str = "gue") -> "LocalFreeCumulantModel":
        from .profiles import constant2d

        return LocalFreeCumulantModel.independent_entries(constant2d(1.0), label=label)

    @staticmethod
    def from_spectrum(spectrum: Profile1D, n_max: int = 6, quad: int = 4096,
                      label: str = "invariant") -> "LocalFreeCumulantModel":
        """Free cumulants of the spectral law lambda(x), x uniform on [0,1]."""
        xs = (np.arange(quad) + 0.5) / quad
        lam = np.asarray(spectrum(xs), dtype=float)
        moments = [float(np.mean(lam**p)) for p in range(1, n_max + 1)]
        kappas = free_cumulants_from_moments(moments)
        return LocalFreeCumulantModel.from_constants(kappas, label=label)


def moments_from_free_cumulants(kappas: Sequence[float]) -> list[float]:
    """m_n = sum over non-crossing partitions of the product of block kappas."""
    out = []
    for n in range(1, len(kappas) + 1):
        total = 0.0
        for p in enumerate_noncrossing(n):
            prod = 1.0
            for b in p.blocks:
                prod *= kappas[len(b) - 1]
            total += prod
        out.append(total)
    return out


def free_cumulants_from_moments(moments: Sequence[float]) -> list[float]:
    """Invert the non-crossing moment formula order by order."""
    kappas: list[float] = []
    for n in range(1, len(moments) + 1):
        partial = 0.0
        for p in enumerate_noncrossing(n):
            if p.num_blocks == 1:
                continue
            prod = 1.0
            for b in p.blocks:
                prod *= kappas[len(b) - 1] if len(b) <= len(kappas) else 0.0
            partial += prod
        kappas.append(moments[n - 1] - partial)
    return kappas


@dataclass
class PartitionTerm:
    partition: SetPartition
    kreweras: SetPartition
    value: float

    def to_json(self) -> dict:
        return {
            "partition": str(self.partition),
            "kreweras": str(self.kreweras),
            "value": self.value,
        }


@dataclass
class TraceExpectationResult:
    """Value of the predicted trace expectation with its term breakdown."""

    n: int
    value: float
    terms: list[PartitionTerm]
    quadrature_error: float
    warnings: list[str] = field(default_factory=list)

    def breakdown_rows(self) -> list[dict]:
        return [
            {"n": self.n, "partition": str(t.partition), "kreweras": str(t.kreweras), "value": repr(t.value)}
            for t in self.terms
        ]


class IrreducibleTermError(RuntimeError):
    """A term's coupled variables cannot be eliminated on the grid."""


def _term_value(
    model: LocalFreeCumulantModel,
    deltas: Sequence[Profile1D],
    p: SetPartition,
    quad: int,
) -> float | None:
    """Integral of one partition term; None when a g_n is unavailable."""
    n = p.ground_size
    kc = kreweras_complement(p)
    class_of = {}
    for ci, b in enumerate(kc.blocks):
        for e in b:
            class_of[e] = ci
    n_vars = kc.num_blocks
    xs = (np.arange(quad) + 0.5) / quad
    dx = 1.0 / quad

    # 1D weight per variable: product of the deltas living on that class
    weights = [np.ones(quad) for _ in range(n_vars)]
    for k in range(1, n + 1):
        weights[class_of[k]] = weights[class_of[k]] * np.asarray(deltas[k - 1](xs), dtype=float)

    scalar = 1.0
    factors: list[tuple[list[int], np.ndarray]] = []
    for b in p.blocks:
        entry = model.entry(len(b))
        if entry is None:
            return None
        if entry.kind == "zero":
            return 0.0
        if entry.kind == "constant":
            scalar *= entry.value
            continue
        vars_b = [class_of[e] for e in b]
        distinct = sorted(set(vars_b))
        grids = np.meshgrid(*[xs] * len(distinct), indexing="ij")
        pos = {v: grids[i] for i, v in enumerate(distinct)}
        arr = np.asarray(entry.fn(*[pos[v] for v in vars_b]), dtype=float)
        factors.append((distinct, arr))

    used = [False] * n_vars

    def apply_weight(vars_f: list[int], arr: np.ndarray) -> np.ndarray:
        # fold each variable's 1D delta weight into the tensor exactly once
        for axis, v in enumerate(vars_f):
            if not used[v]:
                shape = [1] * arr.ndim
                shape[axis] = quad
                arr = arr * weights[v].reshape(shape)
                used[v] = True
        return arr

    # eliminate variables of degree one until nothing multi-variate is left
    while factors:
        progress = False
        for idx, (vars_f, arr) in enumerate(factors):
            if len(vars_f) == 1:
                v = vars_f[0]
                others = [f for i, f in enumerate(factors) if i != idx]
                if any(v in vf for vf, _ in others):
                    # merge into the other factor holding v
                    for j, (vg, ag) in enumerate(others):
                        if v in vg:
                            axis = vg.index(v)
                            shape = [1] * ag.ndim
                            shape[axis] = quad
                            others[j] = (vg, ag * arr.reshape(shape))
                            break
                    factors = others
                else:
                    arr = apply_weight(vars_f, arr)
                    scalar *= float(np.sum(arr) * dx)
                    factors = others
                progress = True
                break
            degree = {
                v: sum(1 for vg, _ in factors if v in vg) for v in vars_f
            }
            leaf = next((v for v in vars_f if degree[v] == 1), None)
            if leaf is not None:
                arr = apply_weight([leaf], _reorder_first(vars_f, arr, leaf))
                contracted = np.tensordot(np.full(quad, dx), arr, axes=(0, 0))
                new_vars = [v for v in vars_f if v != leaf]
                factors[idx] = (new_vars, contracted)
                if not new_vars:
                    scalar *= float(factors[idx][1])
                    factors.pop(idx)
                progress = True
                break
        if not progress:
            coupled = sorted({v for vf, _ in factors for v in vf})
            if len(coupled) > 3:
                raise IrreducibleTermError(
                    f"term for {p} couples {len(coupled)} variables; refine the model "
                    "or lower the order"
                )
            # dense product over the small coupled core
            grids_shape = (quad,) * len(coupled)
            acc = np.ones(grids_shape)
            for vf, arr in factors:
                expand = [coupled.index(v) for v in vf]
                view = arr
                order = np.argsort(expand)
                view = np.transpose(view, axes=order)
                exp_sorted = sorted(expand)
                shape = [quad if i in exp_sorted else 1 for i in range(len(coupled))]
                view = view.reshape(shape)
                acc = acc * view
            for v in coupled:
                if not used[v]:
                    shape = [1] * len(coupled)
                    shape[coupled.index(v)] = quad
                    acc = acc * weights[v].reshape(shape)
                    used[v] = True
            scalar *= float(np.sum(acc) * dx ** len(coupled))
            factors = []

    for v in range(n_vars):
        if not used[v]:
            scalar *= float(np.sum(weights[v]) * dx)
            used[v] = True
    return scalar


def _reorder_first(vars_f: list[int], arr: np.ndarray, v: int) -> np.ndarray:
    """Move variable v to axis 0, updating vars_f in place."""
    axis = vars_f.index(v)
    if axis != 0:
        arr = np.moveaxis(arr, axis, 0)
        vars_f.insert(0, vars_f.pop(axis))
    return arr


def theory_trace_expectation(
    model: LocalFreeCumulantModel,
    deltas: Sequence[Profile1D] | None,
    n: int,
    quad: int = 256,
) -> TraceExpectationResult:
    """Predicted large-N value of E[tr(M D_1 ... M D_n)/N].

    Sums over non-crossing partitions of order n; per partition, blocks carry
    local cumulants evaluated at the collapsed positions dictated by the
    Kreweras complement.  quadrature_error is the observed change when the
    grid is halved.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > 8:
        raise ValueError("trace expectations supported for n <= 8")
    if deltas is None:
        deltas = [constant1d(1.0)] * n
    if len(deltas) != n:
        raise ValueError("need one diagonal weight per matrix factor")

    warn_msgs: list[str] = []

    def evaluate(q: int) -> tuple[float, list[PartitionTerm]]:
        terms: list[PartitionTerm] = []
        total = 0.0
        for p in enumerate_noncrossing(n):
            val = _term_value(model, deltas, p, q)
            if val is None:
                msg = f"g_{max(len(b) for b in p.blocks)} unavailable; dropped term {p}"
                if msg not in warn_msgs:
                    warn_msgs.append(msg)
                    warnings.warn(msg, MissingCumulantWarning, stacklevel=2)
                continue
            terms.append(PartitionTerm(p, kreweras_complement(p), val))
            total += val
        return total, terms

    value, terms = evaluate(quad)
    coarse_value, _ = evaluate(max(quad // 2, 2))
    return TraceExpectationResult(
        n=n,
        value=value,
        terms=terms,
        quadrature_error=abs(value - coarse_value),
        warnings=warn_msgs,
    )


def model_for_spec(spec, n_max: int = 6) -> LocalFreeCumulantModel:
    """The built-in local cumulant model matching an ensemble spec."""
    if spec.kind == "gue":
        return LocalFreeCumulantModel.gue()
    if spec.kind == "band_wigner":
        return LocalFreeCumulantModel.independent_entries(spec.profile, label="band")
    if spec.kind in ("unitarily_invariant", "orthogonally_invariant"):
        return LocalFreeCumulantModel.from_spectrum(spec.profile, n_max=n_max, label=spec.kind)
    raise ValueError(f"no built-in cumulant model for kind {spec.kind!r}")


@dataclass
class TheoryComparison:
    n: int
    theory: float
    quadrature_error: float
    mc_value: float
    mc_error: float
    combined_error: float
    within_3sigma: bool
    relative_difference: float

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "theory": self.theory,
            "quadrature_error": self.quadrature_error,
            "mc_value": self.mc_value,
            "mc_error": self.mc_error,
            "combined_error": self.combined_error,
            "within_3sigma": self.within_3sigma,
            "relative_difference": self.relative_difference,
        }


def compare_theory_vs_mc(
    spec,
    deltas: Sequence[Profile1D] | None,
    n: int,
    samples: int = 1000,
    model: LocalFreeCumulantModel | None = None,
    quad: int = 256,
) -> TheoryComparison:
    """Predicted trace expectation vs its Monte Carlo estimate at spec.size."""
    if n > 4:
        raise ValueError("Monte Carlo comparison supported for n <= 4")
    model = model or model_for_spec(spec, n_max=max(n, 4))
    if deltas is None:
        deltas = [constant1d(1.0)] * n
    theory = theory_trace_expectation(model, deltas, n, quad=quad)
    obs = TraceWithDiagonals(tuple(deltas))
    est = estimate_cumulant(spec, obs, samples)
    combined = math.sqrt(theory.quadrature_error**2 + est.std_error**2)
    diff = est.value.real - theory.value
    denom = max(abs(theory.value), 1e-12)
    return TheoryComparison(
        n=n,
        theory=theory.value,
        quadrature_error=theory.quadrature_error,
        mc_value=est.value.real,
        mc_error=est.std_error,
        combined_error=combined,
        within_3sigma=abs(diff) <= 3 * combined if combined > 0 else abs(diff) < 1e-12,
        relative_difference=diff / denom,
    )
