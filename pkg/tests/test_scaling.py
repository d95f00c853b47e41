"""Exponent fitting on synthetic power laws, then small seeded sweeps."""

import numpy as np
import pytest

from cyclecumulants.ensembles import DeterministicEnsemble, EnsembleSpec
from cyclecumulants.profiles import block_step2d, constant2d, product_affine2d
from cyclecumulants.scaling import (
    BOUNDED,
    FAIL,
    PASS,
    NGrid,
    ScalingFit,
    ZeroBound,
    fit_exponent,
    verify_continuity,
    verify_cyclic_scaling,
    verify_disjoint_scaling,
    verify_self_averaging,
    verify_trace_scaling,
    verify_transform_stability,
)
from cyclecumulants.transforms import EntrywiseSpec, PolySpec

SMALL = NGrid((32, 48, 64), 2500)


class TestFit:
    @pytest.mark.parametrize("a", [-4, -3, -2, -1, 0])
    def test_exact_power_law_recovered(self, a):
        points = [(n, 3.0 * n**a, 0.0) for n in (32, 64, 128)]
        fit = fit_exponent(points)
        assert isinstance(fit, ScalingFit)
        assert abs(fit.exponent - a) < 1e-12
        assert abs(fit.log_prefactor - np.log(3.0)) < 1e-12
        assert fit.r_squared == pytest.approx(1.0)

    def test_constant_gives_zero(self):
        fit = fit_exponent([(n, 7.0, 0.0) for n in (32, 64, 128)])
        assert fit.exponent == pytest.approx(0.0, abs=1e-12)

    def test_weights_pull_toward_precise_points(self):
        precise = [(32, 1.0, 1e-6), (64, 0.5, 1e-6), (128, 0.25, 1e-6)]
        noisy = precise + [(256, 10.0, 100.0)]
        fit = fit_exponent(noisy)
        assert abs(fit.exponent + 1.0) < 0.05

    def test_statistically_zero(self):
        points = [(n, 1e-8, 1.0) for n in (32, 64, 128)]
        fit = fit_exponent(points)
        assert isinstance(fit, ZeroBound)

    def test_sign_flip_flagged(self):
        points = [(32, 1.0, 0.01), (64, -0.5, 0.01), (128, 0.25, 0.01)]
        fit = fit_exponent(points)
        assert isinstance(fit, ScalingFit)
        assert not fit.sign_consistent

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            fit_exponent([(32, 1.0, 0.0), (64, 0.5, 0.0)])


class TestGrid:
    def test_defaults(self):
        grid = NGrid()
        assert grid.sizes == (32, 48, 64, 96, 128, 192)

    def test_validation(self):
        with pytest.raises(ValueError):
            NGrid((32, 64))
        with pytest.raises(ValueError):
            NGrid((4, 32, 64))
        with pytest.raises(ValueError):
            NGrid((64, 32, 128))

    def test_json_roundtrip(self):
        grid = NGrid((32, 64, 128), 500)
        assert NGrid.from_json(grid.to_json()) == grid


class TestCyclicScalingSweep:
    def test_gue_pair_exponent(self):
        spec = EnsembleSpec("gue", 32, 211)
        report = verify_cyclic_scaling(spec, n=2, grid=SMALL, tolerance=0.2)
        assert report.verdict == PASS
        assert abs(report.fit.exponent + 1.0) < 0.1

    def test_band_prefactor(self):
        spec = EnsembleSpec("band_wigner", 32, 223, product_affine2d(1.0, 1.0))
        report = verify_cyclic_scaling(
            spec, n=2, x_pattern=(0.25, 0.75), grid=NGrid((32, 64, 128), 4000),
            tolerance=0.2,
        )
        assert report.verdict == PASS
        # N C_2 -> sigma(1/4, 3/4) = 1 + 3/16; two octaves pin the intercept
        assert abs(report.fit.log_prefactor - np.log(1 + 3 / 16)) < 0.15

    def test_colliding_pattern_rejected(self):
        spec = EnsembleSpec("gue", 32, 1)
        with pytest.raises(ValueError, match="collides"):
            verify_cyclic_scaling(spec, n=2, x_pattern=(0.5, 0.5001), grid=SMALL)


class TestDisjointAndTraces:
    def test_gaussian_four_cycle_is_bounded(self):
        # order-4 joint cumulant of jointly Gaussian entries vanishes; the
        # verdict must be the zero bound, never FAIL
        spec = EnsembleSpec("gue", 32, 227)
        report = verify_disjoint_scaling(spec, (2, 2), grid=NGrid((32, 48, 64), 800))
        assert report.verdict == BOUNDED
        assert report.target == -4.0

    def test_trace_pair_law(self):
        spec = EnsembleSpec("gue", 32, 229)
        report = verify_trace_scaling(spec, (2, 2), grid=SMALL, tolerance=0.25)
        assert report.verdict == PASS
        assert abs(report.fit.exponent + 2.0) < 0.2

    def test_single_trace_constant(self):
        spec = EnsembleSpec("gue", 32, 233)
        report = verify_trace_scaling(spec, (2,), grid=SMALL, tolerance=0.25)
        # r = 1: target 2 - 2 = 0, tr M^2 / N -> 1
        assert report.target == 0.0
        assert report.verdict == PASS


class TestContinuity:
    def test_smooth_profile_passes(self):
        spec = EnsembleSpec("band_wigner", 32, 239, product_affine2d(1.0, 1.0))
        report = verify_continuity(spec, size=96, samples=3000, meshes=(4, 8))
        assert report.verdict == PASS

    def test_step_profile_fails(self):
        spec = EnsembleSpec("band_wigner", 32, 241, block_step2d(0.5, 1.5, 0.5))
        report = verify_continuity(spec, size=96, samples=3000, meshes=(4, 8))
        assert report.verdict == FAIL

    def test_gue_constant_passes(self):
        spec = EnsembleSpec("gue", 32, 251)
        report = verify_continuity(spec, size=96, samples=3000, meshes=(4, 8))
        assert report.verdict == PASS


class TestSelfAveraging:
    def test_deterministic_gap_exactly_zero(self):
        stub = DeterministicEnsemble(lambda n: np.diag(np.linspace(-1, 1, n)), 32)
        report = verify_self_averaging(stub, z=0.1, grid=NGrid((16, 32, 64), 50))
        gaps = [row.value.real for row in report.rows]
        assert all(g == 0 for g in gaps)
        assert report.verdict == BOUNDED

    def test_gue_gap_decays(self):
        spec = EnsembleSpec("gue", 32, 257)
        report = verify_self_averaging(
            spec, z=0.1, grid=NGrid((32, 48, 64, 96), 4000), threshold=-0.8
        )
        assert report.verdict == PASS
        assert report.fit.exponent < -0.8
        assert "order_2" in report.extras["terms"]

    def test_gap_positive(self):
        # Jensen: log E[e^X] >= E[X], so every gap estimate is nonnegative
        spec = EnsembleSpec("gue", 32, 263)
        report = verify_self_averaging(spec, z=0.1, grid=NGrid((32, 48, 64), 3000))
        assert all(row.value.real > 0 for row in report.rows)


class TestTransformStability:
    def test_identity_polynomial_bitwise_paired(self):
        spec = EnsembleSpec("gue", 32, 269)
        base = verify_cyclic_scaling(spec, n=2, grid=SMALL, tolerance=0.2)
        wrapped = verify_transform_stability(
            spec,
            PolySpec((0.0, 1.0)),
            [{"check": "cyclic-scaling", "n": 2}],
            grid=SMALL,
            tolerance=0.2,
        )
        sub = wrapped.extras["sub_checks"][0]
        assert sub["fitted"] == base.fit.exponent
        assert sub["verdict"] == base.verdict

    def test_entrywise_requires_centering(self):
        from cyclecumulants.profiles import linear1d

        spec = EnsembleSpec("unitarily_invariant", 32, 271, linear1d())
        with pytest.raises(ValueError, match="centered matrices"):
            verify_transform_stability(
                spec,
                EntrywiseSpec((0.0, 1.0)),
                [{"check": "cyclic-scaling", "n": 2}],
                grid=SMALL,
            )

    def test_square_polynomial_trace_law(self):
        spec = EnsembleSpec("gue", 32, 277)
        report = verify_transform_stability(
            spec,
            PolySpec((0.0, 0.0, 1.0)),
            [{"check": "trace-cumulants", "powers": [2, 2]}],
            grid=NGrid((32, 48, 64), 2000),
            tolerance=0.35,
        )
        assert report.verdict == PASS
