"""Non-crossing trace formula: hand-evaluated cases, the moment-cumulant
inversion, quadrature behavior, and the Monte Carlo comparison."""

import numpy as np
import pytest

from cyclecumulants.ensembles import EnsembleSpec
from cyclecumulants.profiles import constant1d, constant2d, linear1d, step1d
from cyclecumulants.theory import (
    CumulantEntry,
    LocalFreeCumulantModel,
    MissingCumulantWarning,
    compare_theory_vs_mc,
    free_cumulants_from_moments,
    model_for_spec,
    moments_from_free_cumulants,
    theory_trace_expectation,
)


class TestHandValues:
    def test_n1_linear_first_cumulant(self):
        model = LocalFreeCumulantModel(
            (CumulantEntry(1, "function", fn=lambda x: x),),
            zero_above_max=True,
        )
        res = theory_trace_expectation(model, None, 1)
        assert res.value == pytest.approx(0.5, abs=1e-6)

    def test_n2_pair_only(self):
        # g_1 = 0, g_2 = 1: only the one-block partition survives
        model = LocalFreeCumulantModel.from_constants([0.0, 1.0])
        res = theory_trace_expectation(model, None, 2)
        assert res.value == pytest.approx(1.0, abs=1e-12)
        surviving = [t for t in res.terms if t.value != 0]
        assert len(surviving) == 1
        assert str(surviving[0].partition) == "{1,2}"

    def test_n2_singleton_collapse(self):
        # g_1 = 1, g_2 = 0: the singleton partition's dual forces x1 = x2
        model = LocalFreeCumulantModel.from_constants([1.0, 0.0])
        res = theory_trace_expectation(model, None, 2)
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_band_with_linear_weight(self):
        # independent entries with sigma = 1: value is the mean of delta_1
        model = LocalFreeCumulantModel.independent_entries(constant2d(1.0))
        res = theory_trace_expectation(model, [linear1d(), constant1d(1.0)], 2)
        assert res.value == pytest.approx(0.5, abs=1e-6)

    def test_breakdown_sums_to_total(self):
        model = LocalFreeCumulantModel.from_constants([0.0, 1.0, 0.0, -1.0])
        res = theory_trace_expectation(model, None, 4)
        assert res.value == sum(t.value for t in res.terms)

    def test_pm_one_fourth_moment_identity(self):
        # kappa = (0, 1, 0, -1): m4 = 2 kappa2^2 + kappa4 = 1 exactly
        model = LocalFreeCumulantModel.from_constants([0.0, 1.0, 0.0, -1.0])
        res = theory_trace_expectation(model, None, 4)
        assert res.value == pytest.approx(1.0, abs=1e-12)
        pairings = [t for t in res.terms if t.value > 0]
        assert len(pairings) == 2  # {12}{34} and {14}{23}; {13}{24} crosses


class TestMomentCumulant:
    def test_known_pm_one_values(self):
        kappas = free_cumulants_from_moments([0.0, 1.0, 0.0, 1.0])
        assert kappas == pytest.approx([0.0, 1.0, 0.0, -1.0])

    def test_roundtrip(self):
        kappas = [0.5, 1.0, -0.25, 2.0, 0.0, -1.5]
        moments = moments_from_free_cumulants(kappas)
        back = free_cumulants_from_moments(moments)
        assert back == pytest.approx(kappas, rel=1e-12)

    def test_semicircle_moments(self):
        # kappa_2 = 1 alone gives the Catalan moments
        moments = moments_from_free_cumulants([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        assert moments == pytest.approx([0, 1, 0, 2, 0, 5])

    def test_spectrum_builder_matches(self):
        model = LocalFreeCumulantModel.from_spectrum(step1d(), n_max=4)
        values = [e.value if e.kind == "constant" else 0.0 for e in model.entries]
        assert values == pytest.approx([0.0, 1.0, 0.0, -1.0], abs=1e-12)


class TestQuadrature:
    def test_convergence_within_reported_error(self):
        model = LocalFreeCumulantModel(
            (CumulantEntry(1, "function", fn=lambda x: np.sin(3 * x)),),
            zero_above_max=True,
        )
        coarse = theory_trace_expectation(model, None, 1, quad=64)
        fine = theory_trace_expectation(model, None, 1, quad=128)
        assert abs(fine.value - coarse.value) <= coarse.quadrature_error + 1e-15

    def test_missing_order_warns_and_drops(self):
        model = LocalFreeCumulantModel.from_constants([0.0, 1.0])  # no g_3, g_4
        with pytest.warns(MissingCumulantWarning):
            res = theory_trace_expectation(model, None, 4)
        # pair partitions survive: the two non-crossing pairings of 4 points
        assert res.value == pytest.approx(2.0, abs=1e-12)
        assert res.warnings

    def test_exact_zero_above_max_is_silent(self):
        import warnings as w

        model = LocalFreeCumulantModel.independent_entries(constant2d(1.0))
        with w.catch_warnings():
            w.simplefilter("error")
            res = theory_trace_expectation(model, None, 4)
        assert res.value == pytest.approx(2.0, abs=1e-6)


class TestCompare:
    def test_gue_pair_trace(self):
        spec = EnsembleSpec("gue", 96, 307)
        comparison = compare_theory_vs_mc(spec, None, 2, samples=400)
        assert comparison.theory == pytest.approx(1.0, abs=1e-6)
        assert comparison.within_3sigma

    def test_pm_one_fourth_moment_exact_sampling(self):
        spec = EnsembleSpec("unitarily_invariant", 64, 311, step1d())
        comparison = compare_theory_vs_mc(spec, None, 4, samples=100)
        assert comparison.theory == pytest.approx(1.0, abs=1e-12)
        # tr M^4 / N = 1 exactly per draw for the plus-minus-one spectrum
        assert comparison.mc_value == pytest.approx(1.0, abs=1e-9)
        assert comparison.within_3sigma

    def test_band_linear_weight_against_mc(self):
        spec = EnsembleSpec("band_wigner", 96, 313, constant2d(1.0))
        comparison = compare_theory_vs_mc(
            spec, [linear1d(), constant1d(1.0)], 2, samples=500
        )
        assert comparison.theory == pytest.approx(0.5, abs=1e-6)
        assert comparison.within_3sigma

    def test_model_for_spec_kinds(self):
        assert model_for_spec(EnsembleSpec("gue", 16, 0)).label == "gue"
        m = model_for_spec(EnsembleSpec("unitarily_invariant", 16, 0, step1d()))
        assert m.entries[1].value == pytest.approx(1.0)
