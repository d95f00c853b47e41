"""Monte Carlo estimation of joint cumulants of matrix observables.

The estimator is the plug-in one: empirical mixed moments combined over the
full partition lattice with Moebius weights.  Errors are delete-1 jackknife.
Bias is O(1/samples), which is fine at the sample counts the sweeps use;
unbiased k-statistics beyond order 4 are not worth their complexity here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .ensembles import MatrixSample
from .partitions import iter_partitions, moebius_weight
from .profiles import Profile1D
from .transforms import Transform, apply_transform, transform_label

MAX_CUMULANT_ORDER = 6
MAX_TRACE_FACTORS = 4
MAX_TRACE_POWER = 6


@dataclass(frozen=True)
class EntryCycle:
    """Matrix-entry cycles: one slot per segment (M^q)_{i_k i_{k+1}}.

    cycles holds 1-based index tuples; powers, when given, holds the matrix
    power of each segment (default 1, i.e. plain entries).  Distinct cycles
    must not share an index.
    """

    cycles: tuple[tuple[int, ...], ...]
    powers: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self) -> None:
        if not self.cycles or any(len(c) < 1 for c in self.cycles):
            raise ValueError("need at least one nonempty cycle")
        seen: set[int] = set()
        for c in self.cycles:
            for i in c:
                if i in seen:
                    raise ValueError(
                        f"cycles share index {i}; disjoint cycles must not have an index in common"
                    )
                seen.add(i)
        if self.powers is not None:
            if len(self.powers) != len(self.cycles) or any(
                len(p) != len(c) for p, c in zip(self.powers, self.cycles)
            ):
                raise ValueError("powers must mirror the cycle edge structure")
            if any(q < 1 for p in self.powers for q in p):
                raise ValueError("segment powers must be >= 1")

    @property
    def order(self) -> int:
        return sum(len(c) for c in self.cycles)

    def label(self) -> str:
        parts = []
        for ci, c in enumerate(self.cycles):
            pw = self.powers[ci] if self.powers else (1,) * len(c)
            edges = []
            for k in range(len(c)):
                i, j = c[k], c[(k + 1) % len(c)]
                edges.append(f"M^{pw[k]}[{i},{j}]" if pw[k] != 1 else f"M[{i},{j}]")
            parts.append("*".join(edges))
        return "cycle(" + ";".join(parts) + ")"


@dataclass(frozen=True)
class TracePower:
    """Single slot: the normalized trace of M^p."""

    power: int

    def __post_init__(self) -> None:
        if not (1 <= self.power <= MAX_TRACE_POWER):
            raise ValueError(f"trace power must be in 1..{MAX_TRACE_POWER}")

    @property
    def order(self) -> int:
        return 1

    def label(self) -> str:
        return f"tr(M^{self.power})/N"


@dataclass(frozen=True)
class TraceWithDiagonals:
    """Single slot: tr(M D_1 M D_2 ... M D_n)/N with D_k = diag(delta_k(i/N))."""

    deltas: tuple[Profile1D, ...]

    def __post_init__(self) -> None:
        if not self.deltas:
            raise ValueError("need at least one diagonal weight")

    @property
    def order(self) -> int:
        return 1

    def label(self) -> str:
        return "tr(" + "".join(f"M.{d.name}" for d in self.deltas) + ")/N"


Observable = EntryCycle | TracePower | TraceWithDiagonals


def _power_entry(m: np.ndarray, i: int, j: int, q: int) -> complex:
    """(M^q)_{ij} via q-1 matvecs (0-based indices)."""
    if q == 1:
        return complex(m[i, j])
    v = m[:, j].copy()
    for _ in range(q - 2):
        v = m @ v
    return complex(m[i, :] @ v)


class _TraceCache:
    """Normalized traces of matrix powers with shared matmul work."""

    def __init__(self, m: np.ndarray):
        self.m = m
        self.n = m.shape[0]
        self._m2: np.ndarray | None = None
        self._m3: np.ndarray | None = None

    def _pow2(self) -> np.ndarray:
        if self._m2 is None:
            self._m2 = self.m @ self.m
        return self._m2

    def _pow3(self) -> np.ndarray:
        if self._m3 is None:
            self._m3 = self._pow2() @ self.m
        return self._m3

    def trace(self, p: int) -> complex:
        m, n = self.m, self.n
        if p == 1:
            return complex(np.trace(m)) / n
        if p == 2:
            return complex(np.vdot(m, m)) / n
        if p == 3:
            return complex(np.vdot(m, self._pow2())) / n
        if p == 4:
            m2 = self._pow2()
            return complex(np.vdot(m2, m2)) / n
        if p == 5:
            return complex(np.vdot(self._pow2(), self._pow3())) / n
        if p == 6:
            m3 = self._pow3()
            return complex(np.vdot(m3, m3)) / n
        raise ValueError(f"trace power {p} out of range")


def evaluate_observable(sample: MatrixSample, obs: Observable) -> tuple[complex, ...]:
    """One complex value per cumulant slot of the observable."""
    m = sample.entries
    n = sample.size
    if isinstance(obs, EntryCycle):
        values = []
        for ci, cyc in enumerate(obs.cycles):
            pw = obs.powers[ci] if obs.powers else (1,) * len(cyc)
            for k in range(len(cyc)):
                i, j = cyc[k], cyc[(k + 1) % len(cyc)]
                if not (1 <= i <= n and 1 <= j <= n):
                    raise IndexError(f"cycle index ({i},{j}) out of range for N={n}")
                values.append(_power_entry(m, i - 1, j - 1, pw[k]))
        return tuple(values)
    if isinstance(obs, TracePower):
        return (_TraceCache(m).trace(obs.power),)
    if isinstance(obs, TraceWithDiagonals):
        from .ensembles import row_positions

        x = row_positions(n)
        dvals = [np.asarray(d(x), dtype=float) for d in obs.deltas]
        if len(dvals) == 1:
            return (complex(np.sum(np.diagonal(m) * dvals[0])) / n,)
        if len(dvals) == 2:
            # tr(M D1 M D2) = sum_ij |M_ij|^2 d1(j) d2(i)
            val = dvals[1] @ (np.abs(m) ** 2) @ dvals[0]
            return (complex(val) / n,)
        prod = m * dvals[0][None, :]
        for d in dvals[1:]:
            prod = (prod @ m) * d[None, :]
        return (complex(np.trace(prod)) / n,)
    raise TypeError(f"not an observable: {obs!r}")


def observable_order(observables: Observable | Sequence[Observable]) -> int:
    if isinstance(observables, (EntryCycle, TracePower, TraceWithDiagonals)):
        return observables.order
    return sum(o.order for o in observables)


def observable_label(observables: Observable | Sequence[Observable]) -> str:
    if isinstance(observables, (EntryCycle, TracePower, TraceWithDiagonals)):
        return observables.label()
    return "[" + ",".join(o.label() for o in observables) + "]"


@lru_cache(maxsize=16)
def _partition_tables(n: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """For each partition of {1..n}: (moebius weight, bitmask per block)."""
    table = []
    for p in iter_partitions(n):
        masks = tuple(sum(1 << (e - 1) for e in b) for b in p.blocks)
        table.append((moebius_weight(p), masks))
    return tuple(table)


def joint_cumulant(values: np.ndarray) -> tuple[complex, float]:
    """Plug-in joint cumulant of an (n_slots, samples) array with jackknife SE.

    Accumulation uses numpy's pairwise summation, so results are deterministic
    for a fixed sample order.
    """
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("values must be (slots, samples)")
    n, s = values.shape
    if n > MAX_CUMULANT_ORDER:
        raise ValueError(f"cumulant order {n} exceeds cap {MAX_CUMULANT_ORDER}")
    if s == 0:
        raise ValueError("zero samples")
    # per-sample subset products P[mask] and their sums
    prods: dict[int, np.ndarray] = {}
    for mask in range(1, 1 << n):
        low = mask & -mask
        rest = mask ^ low
        slot = low.bit_length() - 1
        prods[mask] = values[slot] if rest == 0 else prods[rest] * values[slot]
    sums = {mask: np.sum(arr) for mask, arr in prods.items()}

    def full_estimate() -> complex:
        total = 0.0 + 0.0j
        for w, masks in _partition_tables(n):
            term = w
            for mask in masks:
                term = term * (sums[mask] / s)
            total += term
        return total

    value = complex(full_estimate())
    if s == 1:
        return value, 0.0
    # delete-1 means for every subset, vectorized over the deleted sample
    del_means = {mask: (sums[mask] - prods[mask]) / (s - 1) for mask in prods}
    c_del = np.zeros(s, dtype=np.complex128)
    for w, masks in _partition_tables(n):
        term = np.full(s, w, dtype=np.complex128)
        for mask in masks:
            term = term * del_means[mask]
        c_del += term
    center = np.mean(c_del)
    se = float(np.sqrt((s - 1) / s * np.sum(np.abs(c_del - center) ** 2)))
    return value, se


@dataclass(frozen=True)
class CumulantEstimate:
    """A Monte Carlo joint-cumulant estimate at one matrix size."""

    order: int
    value: complex
    std_error: float
    sample_count: int
    size: int
    observable: str
    ensemble: str
    seed: int

    def csv_row(self) -> dict:
        return {
            "ensemble": self.ensemble,
            "observable": self.observable,
            "N": self.size,
            "samples": self.sample_count,
            "order": self.order,
            "value_re": repr(self.value.real),
            "value_im": repr(self.value.imag),
            "std_error": repr(self.std_error),
            "seed": self.seed,
        }


CSV_FIELDS = (
    "ensemble",
    "observable",
    "N",
    "samples",
    "order",
    "value_re",
    "value_im",
    "std_error",
    "seed",
)


def _slot_values(
    source,
    observables: Observable | Sequence[Observable],
    samples: int,
    transform: Transform | None = None,
    start: int = 0,
) -> np.ndarray:
    obs_list = (
        [observables]
        if isinstance(observables, (EntryCycle, TracePower, TraceWithDiagonals))
        else list(observables)
    )
    n_slots = sum(o.order for o in obs_list)
    out = np.empty((n_slots, samples), dtype=np.complex128)
    for col, raw in enumerate(source.samples(samples, start)):
        m = apply_transform(raw, transform)
        cache = _TraceCache(m.entries)
        row = 0
        for o in obs_list:
            if isinstance(o, TracePower):
                vals: tuple[complex, ...] = (cache.trace(o.power),)
            else:
                vals = evaluate_observable(m, o)
            out[row : row + len(vals), col] = vals
            row += len(vals)
    return out


def estimate_cumulant(
    source,
    observables: Observable | Sequence[Observable],
    samples: int,
    transform: Transform | None = None,
) -> CumulantEstimate:
    """Joint cumulant of the observables' slots over seeded samples."""
    order = observable_order(observables)
    if order > MAX_CUMULANT_ORDER:
        raise ValueError(f"cumulant order {order} exceeds cap {MAX_CUMULANT_ORDER}")
    if samples < 1:
        raise ValueError("zero samples")
    values = _slot_values(source, observables, samples, transform)
    value, se = joint_cumulant(values)
    label = observable_label(observables)
    if transform is not None:
        label = f"{label}|{transform_label(transform)}"
    return CumulantEstimate(
        order=order,
        value=value,
        std_error=se,
        sample_count=samples,
        size=source.size,
        observable=label,
        ensemble=source.label(),
        seed=getattr(source, "seed", 0),
    )


def estimate_cyclic_cumulant(
    source,
    indices: Sequence[int],
    samples: int,
    scaled: bool = False,
    transform: Transform | None = None,
) -> CumulantEstimate:
    """C_n[M_{i1 i2}, ..., M_{in i1}]; scaled=True returns N^(n-1) times it,
    the finite-size local cumulant value at x_k = i_k / N."""
    obs = EntryCycle((tuple(indices),))
    est = estimate_cumulant(source, obs, samples, transform)
    if not scaled:
        return est
    factor = float(source.size) ** (len(indices) - 1)
    return CumulantEstimate(
        order=est.order,
        value=est.value * factor,
        std_error=est.std_error * factor,
        sample_count=est.sample_count,
        size=est.size,
        observable=f"N^{len(indices)-1}*{est.observable}",
        ensemble=est.ensemble,
        seed=est.seed,
    )


def estimate_trace_cumulant(
    source,
    powers: Sequence[int],
    samples: int,
    transform: Transform | None = None,
) -> CumulantEstimate:
    """Joint cumulant of normalized traces of the given matrix powers."""
    if len(powers) > MAX_TRACE_FACTORS:
        raise ValueError(f"at most {MAX_TRACE_FACTORS} trace factors supported")
    obs = [TracePower(p) for p in powers]
    return estimate_cumulant(source, obs, samples, transform)
