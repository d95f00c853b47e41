"""Seeded samplers for Hermitian random-matrix ensembles with local gauge
structure, plus the diagonal/gauge manipulations the scaling checks need.

Every sampler is deterministic given (seed, sample index): each sample draws
from an independent RNG stream keyed by the pair, so generation order across
indices does not matter and parallel evaluation stays reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .profiles import Profile1D, Profile2D

_KINDS = ("gue", "band_wigner", "unitarily_invariant", "orthogonally_invariant")


def _rng_for(seed: int, index: int) -> np.random.Generator:
    entropy = [seed & 0xFFFFFFFFFFFFFFFF, index]
    return np.random.default_rng(np.random.SeedSequence(entropy=entropy))


def hermitize(m: np.ndarray) -> np.ndarray:
    """Exactly Hermitian average (M + M^dagger)/2.

    IEEE addition is commutative, so the result satisfies A == A.conj().T
    bit for bit and the diagonal imaginary part is exactly zero.
    """
    return (m + m.conj().T) / 2


def row_positions(n: int) -> np.ndarray:
    """Scaled row positions on [0,1], midpoint convention x_i = (i - 1/2)/N.

    Midpoints share the i/N large-N limit but keep discrete averages free of
    O(1/N) endpoint bias, so finite-size sweeps compare cleanly against the
    continuum formulas.
    """
    return (np.arange(1, n + 1, dtype=float) - 0.5) / n


@dataclass(frozen=True)
class EnsembleSpec:
    """A sampleable Hermitian random-matrix law.

    kind is one of "gue", "band_wigner" (profile: variance sigma(x,y)),
    "unitarily_invariant" or "orthogonally_invariant" (profile: spectrum
    lambda(x) conjugated by a Haar unitary / orthogonal matrix).
    """

    kind: str
    size: int
    seed: int
    profile: Profile1D | Profile2D | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; expected one of {_KINDS}")
        if self.size < 2:
            raise ValueError(f"ensemble size must be >= 2, got {self.size}")
        if self.kind == "band_wigner" and not isinstance(self.profile, Profile2D):
            raise ValueError("band_wigner needs a 2D variance profile")
        if self.kind in ("unitarily_invariant", "orthogonally_invariant") and not isinstance(
            self.profile, Profile1D
        ):
            raise ValueError(f"{self.kind} needs a 1D spectrum profile")

    def with_size(self, size: int, seed: int | None = None) -> "EnsembleSpec":
        return EnsembleSpec(self.kind, size, self.seed if seed is None else seed, self.profile)

    def sampler(self) -> "_Sampler":
        return _Sampler(self)

    def samples(self, count: int, start: int = 0) -> Iterator["MatrixSample"]:
        return self.sampler().samples(count, start)

    def is_centered(self, tol: float = 1e-12) -> bool:
        """Whether E[M_ii] = 0 for every i (analytic, per kind)."""
        if self.kind in ("gue", "band_wigner"):
            return True
        lam = self.profile(row_positions(self.size))
        return abs(float(np.mean(lam))) <= tol

    def label(self) -> str:
        prof = "" if self.profile is None else f",{self.profile.name}"
        return f"{self.kind}(N={self.size}{prof})"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "N": self.size, "seed": self.seed}
        if self.profile is not None:
            out["profile"] = self.profile.to_json()
        return out

    @staticmethod
    def from_json(obj: dict) -> "EnsembleSpec":
        kind = obj["kind"]
        profile = None
        if "profile" in obj and obj["profile"] is not None:
            if kind == "band_wigner":
                profile = Profile2D.from_json(obj["profile"])
            else:
                profile = Profile1D.from_json(obj["profile"])
        return EnsembleSpec(kind=kind, size=int(obj["N"]), seed=int(obj["seed"]), profile=profile)


@dataclass(frozen=True)
class MatrixSample:
    """One Hermitian draw with its provenance."""

    entries: np.ndarray
    spec: object | None
    index: int

    @property
    def size(self) -> int:
        return self.entries.shape[0]


class _Sampler:
    def __init__(self, spec: EnsembleSpec):
        self.spec = spec
        n = spec.size
        if spec.kind == "band_wigner":
            x = row_positions(n)
            sigma = np.asarray(spec.profile(x[:, None], x[None, :]), dtype=float)
            if not np.array_equal(sigma, sigma.T):
                raise ValueError("band variance profile failed the symmetry check")
            if np.any(sigma < 0):
                raise ValueError("band variance profile must be nonnegative")
            self._off_scale = np.sqrt(sigma / (2 * n))
            self._diag_scale = np.sqrt(np.diag(sigma) / n)
        elif spec.kind == "gue":
            self._off_scale = np.full((n, n), 1.0 / math.sqrt(2 * n))
            self._diag_scale = np.full(n, 1.0 / math.sqrt(n))
        else:
            lam = np.asarray(spec.profile(row_positions(n)), dtype=float)
            self._lam = lam

    def draw(self, index: int) -> MatrixSample:
        spec = self.spec
        n = spec.size
        rng = _rng_for(spec.seed, index)
        if spec.kind in ("gue", "band_wigner"):
            a = rng.standard_normal((n, n))
            b = rng.standard_normal((n, n))
            d = rng.standard_normal(n)
            upper = np.triu((a + 1j * b) * self._off_scale, k=1)
            m = upper + upper.conj().T
            m[np.diag_indices(n)] = d * self._diag_scale
        elif spec.kind == "unitarily_invariant":
            g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            q, r = np.linalg.qr(g)
            d = np.diagonal(r).copy()
            d[d == 0] = 1.0
            q = q * (d / np.abs(d))
            m = hermitize((q * self._lam) @ q.conj().T)
        else:  # orthogonally_invariant
            g = rng.standard_normal((n, n))
            q, r = np.linalg.qr(g)
            s = np.sign(np.diagonal(r))
            s[s == 0] = 1.0
            q = q * s
            m = hermitize(((q * self._lam) @ q.T).astype(np.complex128))
        return MatrixSample(m, spec, index)

    def samples(self, count: int, start: int = 0) -> Iterator[MatrixSample]:
        for index in range(start, start + count):
            yield self.draw(index)


@dataclass(frozen=True)
class DeterministicEnsemble:
    """A degenerate ensemble that returns a fixed matrix for every draw.

    Useful as a zero-variance stub in tests and self-averaging checks; the
    matrix_fn builds the (Hermitian) matrix for a given size.
    """

    matrix_fn: Callable[[int], np.ndarray]
    size: int
    seed: int = 0
    kind: str = "deterministic"

    def with_size(self, size: int, seed: int | None = None) -> "DeterministicEnsemble":
        return DeterministicEnsemble(self.matrix_fn, size, self.seed if seed is None else seed)

    def samples(self, count: int, start: int = 0) -> Iterator[MatrixSample]:
        m = np.asarray(self.matrix_fn(self.size), dtype=np.complex128)
        for index in range(start, start + count):
            yield MatrixSample(m, self, index)

    def is_centered(self, tol: float = 1e-12) -> bool:
        m = self.matrix_fn(self.size)
        return abs(complex(np.mean(np.diagonal(m)))) <= tol

    def label(self) -> str:
        return f"deterministic(N={self.size})"


def gauge_transform(m: MatrixSample, phases: np.ndarray) -> MatrixSample:
    """Conjugate by the diagonal phase matrix: M_ij -> e^{-i th_i} M_ij e^{i th_j}."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (m.size,):
        raise ValueError(f"phase vector of length {phases.shape} does not match N={m.size}")
    u = np.exp(1j * phases)
    out = hermitize(np.conj(u)[:, None] * m.entries * u[None, :])
    return MatrixSample(out, m.spec, m.index)


def shift_diagonal(m: MatrixSample, a: Profile1D) -> MatrixSample:
    """Subtract the diagonal profile: M_ij -> M_ij - delta_ij a(i/N)."""
    shift = np.asarray(a(row_positions(m.size)), dtype=float)
    out = m.entries.copy()
    out[np.diag_indices(m.size)] -= shift
    return MatrixSample(out, m.spec, m.index)


def diagonal_profile(source, samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-row mean of the diagonal entries with standard errors.

    Used to confirm (or enforce) centering before entry-wise transforms.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples for a standard error")
    n = source.size
    acc = np.zeros(n, dtype=np.complex128)
    acc2 = np.zeros(n, dtype=float)
    for s in source.samples(samples):
        d = np.diagonal(s.entries)
        acc += d
        acc2 += np.abs(d) ** 2
    mean = acc / samples
    var = np.maximum(acc2 / samples - np.abs(mean) ** 2, 0.0)
    return mean.real, np.sqrt(var / (samples - 1))
