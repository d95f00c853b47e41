"""Polynomial and entry-wise transform behavior, with hand moment oracles."""

import numpy as np
import pytest

from cyclecumulants.ensembles import EnsembleSpec, MatrixSample
from cyclecumulants.profiles import constant2d, product_affine2d, tabulated2d
from cyclecumulants.transforms import (
    EntrywiseSpec,
    PolySpec,
    entrywise_apply,
    poly_apply,
)


def wrap(matrix):
    return MatrixSample(np.asarray(matrix, dtype=np.complex128), None, 0)


class TestPoly:
    def test_identity_polynomial(self):
        s = next(iter(EnsembleSpec("gue", 12, 3).samples(1)))
        t = poly_apply(s, PolySpec((0.0, 1.0)))
        assert np.array_equal(t.entries, s.entries)

    def test_square_of_diagonal(self):
        t = poly_apply(wrap(np.diag([1.0, 2.0])), PolySpec((0.0, 0.0, 1.0)))
        assert np.allclose(t.entries, np.diag([1.0, 4.0]))

    def test_pauli_x_squared_minus_identity(self):
        pauli_x = [[0, 1], [1, 0]]
        t = poly_apply(wrap(pauli_x), PolySpec((-1.0, 0.0, 1.0)))
        assert np.allclose(t.entries, 0)

    def test_linearity_in_coefficients(self):
        s = next(iter(EnsembleSpec("gue", 16, 5).samples(1)))
        p = PolySpec((1.0, 0.0, 2.0))
        q = PolySpec((0.0, 1.0, 0.0, 1.0))
        a, b = 0.7, -1.3
        combo = PolySpec(tuple(a * x + b * y for x, y in zip((1.0, 0.0, 2.0, 0.0), (0.0, 1.0, 0.0, 1.0))))
        lhs = poly_apply(s, combo).entries
        rhs = a * poly_apply(s, p).entries + b * poly_apply(s, q).entries
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_monomial_composition(self):
        s = next(iter(EnsembleSpec("gue", 16, 5).samples(1)))
        twice = poly_apply(poly_apply(s, PolySpec((0.0, 0.0, 1.0))), PolySpec((0.0, 0.0, 1.0)))
        quartic = poly_apply(s, PolySpec((0.0, 0.0, 0.0, 0.0, 1.0)))
        assert np.allclose(twice.entries, quartic.entries, atol=1e-12)

    def test_hermiticity_exact(self):
        s = next(iter(EnsembleSpec("gue", 16, 5).samples(1)))
        t = poly_apply(s, PolySpec((0.5, -1.0, 2.0, 0.25)))
        assert np.array_equal(t.entries, t.entries.conj().T)

    def test_degree_validation(self):
        with pytest.raises(ValueError):
            PolySpec((1.0,))
        with pytest.raises(ValueError):
            PolySpec((1.0, 0.0))


class TestEntrywise:
    def test_constant_one_is_identity_offdiagonal(self):
        s = next(iter(EnsembleSpec("gue", 12, 7).samples(1)))
        t = entrywise_apply(s, EntrywiseSpec((1.0,), diagonal_policy="same"))
        assert np.allclose(t.entries, s.entries, atol=1e-15)

    def test_constant_scales(self):
        s = next(iter(EnsembleSpec("gue", 12, 7).samples(1)))
        t = entrywise_apply(s, EntrywiseSpec((2.5,)))
        off = ~np.eye(12, dtype=bool)
        assert np.allclose(t.entries[off], 2.5 * s.entries[off])
        assert np.all(t.entries[np.eye(12, dtype=bool)] == 0)

    def test_unit_scaled_modulus_is_fixed_point(self):
        # with f(u) = u, an entry with N |M_12|^2 = 1 maps to itself
        n = 8
        m = np.zeros((n, n), dtype=complex)
        m[0, 1] = (1 + 1j) / np.sqrt(2 * n)
        m[1, 0] = m[0, 1].conjugate()
        t = entrywise_apply(wrap(m), EntrywiseSpec((0.0, 1.0)))
        assert np.allclose(t.entries[0, 1], m[0, 1], atol=1e-15)

    def test_sixth_moment_oracle(self):
        # Y_12 = M_12 N |M_12|^2 on unit-variance entries:
        # E|Y_12|^2 = N^2 E|g|^6 = 6 (E|g|^2)^3 N^2 = 6/N for complex Gaussian g
        n = 32
        spec = EnsembleSpec("band_wigner", n, 11, constant2d(1.0))
        f = EntrywiseSpec((0.0, 1.0))
        count = 20_000
        acc = 0.0
        for s in spec.samples(count):
            y = entrywise_apply(s, f)
            acc += abs(y.entries[0, 1]) ** 2
        assert abs(acc / count - 6 / n) < 0.1 * (6 / n)

    def test_hermiticity_exact(self):
        s = next(iter(EnsembleSpec("gue", 16, 13).samples(1)))
        f = EntrywiseSpec((0.5, product_affine2d(1.0, 1.0), 0.25), diagonal_policy="same")
        t = entrywise_apply(s, f)
        assert np.array_equal(t.entries, t.entries.conj().T)

    def test_diagonal_policies(self):
        s = next(iter(EnsembleSpec("gue", 12, 17).samples(1)))
        zero = entrywise_apply(s, EntrywiseSpec((0.0, 1.0), diagonal_policy="zero"))
        same = entrywise_apply(s, EntrywiseSpec((0.0, 1.0), diagonal_policy="same"))
        diag = np.eye(12, dtype=bool)
        assert np.all(zero.entries[diag] == 0)
        expected = s.entries[diag] * (12 * np.abs(s.entries[diag]) ** 2)
        assert np.allclose(same.entries[diag], expected)
        assert np.array_equal(zero.entries[~diag], same.entries[~diag])

    def test_asymmetric_profile_rejected_at_construction(self):
        with pytest.raises(ValueError, match="symmetric"):
            tabulated2d([[1.0, 2.0], [3.0, 4.0]])

    def test_bad_policy(self):
        with pytest.raises(ValueError, match="diagonal_policy"):
            EntrywiseSpec((1.0,), diagonal_policy="mirror")
