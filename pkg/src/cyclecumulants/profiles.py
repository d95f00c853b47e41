"""Serializable profile functions on [0,1] and [0,1]^2.

Variance profiles, spectral densities, diagonal shifts and trace weights are
all "arbitrary smooth functions" conceptually; the CLI needs a JSON encoding,
so we ship a small registry of named families plus tabulated values with
linear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Profile1D:
    """A named function on [0,1]."""

    name: str
    params: tuple[tuple[str, Any], ...] = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = dict(self.params)
        if self.name == "constant":
            return np.full_like(x, float(p["value"]))
        if self.name == "linear":
            return p.get("intercept", 0.0) + p.get("slope", 1.0) * x
        if self.name == "step":
            lo, hi, edge = p.get("low", -1.0), p.get("high", 1.0), p.get("edge", 0.5)
            return np.where(x <= edge, lo, hi)
        if self.name == "bump":
            c = p.get("center", 0.5)
            w = p.get("width", 0.15)
            a = p.get("amplitude", 1.0)
            base = p.get("base", 0.0)
            return base + a * np.exp(-(((x - c) / w) ** 2))
        if self.name == "tabulated":
            vals = np.asarray(p["values"], dtype=float)
            grid = np.linspace(0.0, 1.0, len(vals))
            return np.interp(x, grid, vals)
        raise ValueError(f"unknown 1D profile {self.name!r}")

    def to_json(self) -> dict:
        return {"name": self.name, **{k: v for k, v in self.params}}

    @staticmethod
    def from_json(obj: dict) -> "Profile1D":
        obj = dict(obj)
        name = obj.pop("name")
        if name == "tabulated":
            obj["values"] = tuple(float(v) for v in obj["values"])
        return Profile1D(name, tuple(sorted(obj.items())))


def constant1d(value: float) -> Profile1D:
    return Profile1D("constant", (("value", float(value)),))


def linear1d(intercept: float = 0.0, slope: float = 1.0) -> Profile1D:
    return Profile1D("linear", (("intercept", float(intercept)), ("slope", float(slope))))


def step1d(low: float = -1.0, high: float = 1.0, edge: float = 0.5) -> Profile1D:
    return Profile1D("step", (("edge", float(edge)), ("high", float(high)), ("low", float(low))))


def bump1d(center: float = 0.5, width: float = 0.15, amplitude: float = 1.0, base: float = 0.0) -> Profile1D:
    return Profile1D(
        "bump",
        (("amplitude", float(amplitude)), ("base", float(base)),
         ("center", float(center)), ("width", float(width))),
    )


def tabulated1d(values) -> Profile1D:
    return Profile1D("tabulated", (("values", tuple(float(v) for v in values)),))


@dataclass(frozen=True)
class Profile2D:
    """A named symmetric function on [0,1]^2.

    Symmetry f(x,y) = f(y,x) is required so Hermitian structure survives
    entry-wise use; tabulated grids are validated at construction.
    """

    name: str
    params: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self) -> None:
        if self.name == "tabulated":
            vals = np.asarray(dict(self.params)["values"], dtype=float)
            if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
                raise ValueError("tabulated 2D profile needs a square grid")
            if not np.array_equal(vals, vals.T):
                raise ValueError("tabulated 2D profile must be symmetric")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p = dict(self.params)
        if self.name == "constant":
            return np.broadcast_to(np.float64(p["value"]), np.broadcast_shapes(x.shape, y.shape)).copy()
        if self.name == "product_affine":
            return p.get("base", 0.0) + p.get("coeff", 1.0) * (x * y)
        if self.name == "block_step":
            lo, hi, edge = p.get("low", 0.5), p.get("high", 1.5), p.get("edge", 0.5)
            same = (x <= edge) == (y <= edge)
            return np.where(same, hi, lo)
        if self.name == "bump":
            c = p.get("center", 0.5)
            w = p.get("width", 0.2)
            a = p.get("amplitude", 1.0)
            base = p.get("base", 1.0)
            return base + a * np.exp(-(((x - c) ** 2 + (y - c) ** 2) / w**2))
        if self.name == "tabulated":
            vals = np.asarray(p["values"], dtype=float)
            return _bilinear(vals, x, y)
        raise ValueError(f"unknown 2D profile {self.name!r}")

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name}
        for k, v in self.params:
            if k == "values":
                out[k] = [list(row) for row in v]
            else:
                out[k] = v
        return out

    @staticmethod
    def from_json(obj: dict) -> "Profile2D":
        obj = dict(obj)
        name = obj.pop("name")
        if name == "tabulated":
            obj["values"] = tuple(tuple(float(v) for v in row) for row in obj["values"])
        return Profile2D(name, tuple(sorted(obj.items())))


def _bilinear(grid: np.ndarray, x, y):
    q = grid.shape[0]
    xi = np.clip(np.asarray(x, dtype=float), 0.0, 1.0) * (q - 1)
    yi = np.clip(np.asarray(y, dtype=float), 0.0, 1.0) * (q - 1)
    x0 = np.clip(np.floor(xi).astype(int), 0, q - 2)
    y0 = np.clip(np.floor(yi).astype(int), 0, q - 2)
    fx = xi - x0
    fy = yi - y0
    v00 = grid[x0, y0]
    v01 = grid[x0, y0 + 1]
    v10 = grid[x0 + 1, y0]
    v11 = grid[x0 + 1, y0 + 1]
    return (
        v00 * (1 - fx) * (1 - fy)
        + v10 * fx * (1 - fy)
        + v01 * (1 - fx) * fy
        + v11 * fx * fy
    )


def constant2d(value: float) -> Profile2D:
    return Profile2D("constant", (("value", float(value)),))


def product_affine2d(base: float = 1.0, coeff: float = 1.0) -> Profile2D:
    """sigma(x, y) = base + coeff * x * y, e.g. the 1 + xy family."""
    return Profile2D("product_affine", (("base", float(base)), ("coeff", float(coeff))))


def block_step2d(low: float = 0.5, high: float = 1.5, edge: float = 0.5) -> Profile2D:
    """Discontinuous symmetric profile: high on the diagonal blocks, low off."""
    return Profile2D("block_step", (("edge", float(edge)), ("high", float(high)), ("low", float(low))))


def bump2d(center: float = 0.5, width: float = 0.2, amplitude: float = 1.0, base: float = 1.0) -> Profile2D:
    return Profile2D(
        "bump",
        (("amplitude", float(amplitude)), ("base", float(base)),
         ("center", float(center)), ("width", float(width))),
    )


def tabulated2d(values) -> Profile2D:
    return Profile2D(
        "tabulated",
        (("values", tuple(tuple(float(v) for v in row) for row in values)),),
    )
