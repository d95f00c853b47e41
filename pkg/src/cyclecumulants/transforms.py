"""Sample-wise matrix transformations whose stability the scaling checks probe:
matrix-valued polynomials P(M) and entry-wise maps Y_ij = M_ij f(N |M_ij|^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import MatrixSample, hermitize, row_positions
from .profiles import Profile2D


@dataclass(frozen=True)
class PolySpec:
    """Real-coefficient polynomial a_0 + a_1 M + ... + a_d M^d, d >= 1."""

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coefficients) < 2:
            raise ValueError("polynomial degree must be >= 1")
        if self.coefficients[-1] == 0:
            raise ValueError("trailing coefficient must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def label(self) -> str:
        terms = []
        for k, c in enumerate(self.coefficients):
            if c == 0:
                continue
            if k == 0:
                terms.append(f"{c:g}")
            elif k == 1:
                terms.append(f"{c:g}M" if c != 1 else "M")
            else:
                terms.append(f"{c:g}M^{k}" if c != 1 else f"M^{k}")
        return "+".join(terms) if terms else "0"

    def to_json(self) -> dict:
        return {"type": "poly", "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class EntrywiseSpec:
    """Entry-wise power series f applied as Y_ij = M_ij * f_xy(N |M_ij|^2).

    coefficients[m] is the degree-m coefficient, either a number (constant in
    (x, y)) or a symmetric Profile2D.  The diagonal is not covered by the
    transform's defining form, so a policy picks it: "zero" (default) or
    "same" (apply the same formula to M_ii).

    Requires a centered ensemble (E[M_ii] = 0); callers check this before
    sweeping transformed ensembles.
    """

    coefficients: tuple[float | Profile2D, ...]
    diagonal_policy: str = "zero"

    def __post_init__(self) -> None:
        if not self.coefficients:
            raise ValueError("need at least the degree-0 coefficient")
        if self.diagonal_policy not in ("zero", "same"):
            raise ValueError("diagonal_policy must be 'zero' or 'same'")
        for c in self.coefficients:
            if isinstance(c, Profile2D):
                # symmetry of builtins is structural; tabulated grids are
                # validated in Profile2D itself, so this is a type check only
                continue
            float(c)

    @property
    def truncation_degree(self) -> int:
        return len(self.coefficients) - 1

    def label(self) -> str:
        def cname(c):
            return c.name if isinstance(c, Profile2D) else f"{float(c):g}"

        body = ",".join(cname(c) for c in self.coefficients)
        return f"entrywise[{body}]/diag={self.diagonal_policy}"

    def to_json(self) -> dict:
        coeffs = [
            c.to_json() if isinstance(c, Profile2D) else float(c)
            for c in self.coefficients
        ]
        return {
            "type": "entrywise",
            "coefficients": coeffs,
            "diagonal_policy": self.diagonal_policy,
        }


Transform = PolySpec | EntrywiseSpec


def transform_from_json(obj: dict) -> Transform:
    if obj["type"] == "poly":
        return PolySpec(tuple(float(c) for c in obj["coefficients"]))
    if obj["type"] == "entrywise":
        coeffs = tuple(
            Profile2D.from_json(c) if isinstance(c, dict) else float(c)
            for c in obj["coefficients"]
        )
        return EntrywiseSpec(coeffs, obj.get("diagonal_policy", "zero"))
    raise ValueError(f"unknown transform type {obj.get('type')!r}")


def poly_apply(m: MatrixSample, p: PolySpec) -> MatrixSample:
    """Horner evaluation of the polynomial; Hermitian by real coefficients."""
    n = m.size
    eye = np.eye(n, dtype=np.complex128)
    coeffs = p.coefficients
    out = coeffs[-1] * eye
    for c in reversed(coeffs[:-1]):
        out = out @ m.entries
        if c != 0:
            out = out + c * eye
    return MatrixSample(hermitize(out), m.spec, m.index)


def entrywise_apply(m: MatrixSample, f: EntrywiseSpec) -> MatrixSample:
    """Apply Y_ij = M_ij f_{x_i x_j}(N |M_ij|^2) with the configured diagonal."""
    n = m.size
    x = row_positions(n)
    u = n * np.abs(m.entries) ** 2
    fval = np.zeros((n, n), dtype=float)
    upow = np.ones_like(u)
    for c in f.coefficients:
        if isinstance(c, Profile2D):
            cval = np.asarray(c(x[:, None], x[None, :]), dtype=float)
        else:
            cval = float(c)
        fval = fval + cval * upow
        upow = upow * u
    y = m.entries * fval
    if f.diagonal_policy == "zero":
        y[np.diag_indices(n)] = 0.0
    upper = np.triu(y, k=1)
    out = upper + upper.conj().T
    out[np.diag_indices(n)] = np.real(np.diagonal(y))
    return MatrixSample(out, m.spec, m.index)


def apply_transform(m: MatrixSample, t: Transform | None) -> MatrixSample:
    if t is None:
        return m
    if isinstance(t, PolySpec):
        return poly_apply(m, t)
    if isinstance(t, EntrywiseSpec):
        return entrywise_apply(m, t)
    raise TypeError(f"not a transform: {t!r}")


def transform_label(t: Transform | None) -> str:
    return "identity" if t is None else t.label()
