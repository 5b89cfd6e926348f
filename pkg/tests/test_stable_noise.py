import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hedgeturbo.stable_noise import (
    CG,
    AlphaStableParams,
    BCGMDensity,
    CauchyDensity,
    GaussianDensity,
    GsnrSpec,
    MixtureDensity,
    bcgm_pdf,
    density_eval,
    dispersion_to_gsnr,
    epsilon_bcgm,
    epsilon_mebcgm_integral,
    epsilon_mebcgm_quadratic,
    geometric_power,
    gsnr_to_dispersion,
    integrate_density,
    sas_char_fn,
    sas_density,
    sas_sample,
)

alphas_12 = st.floats(1.0, 2.0)


def empirical_cf(x, omega):
    return np.mean(np.cos(omega * x))


class TestParams:
    @pytest.mark.parametrize("alpha,gamma", [(0.0, 1.0), (2.01, 1.0), (1.5, 0.0), (1.5, -1.0)])
    def test_rejects_invalid(self, alpha, gamma):
        with pytest.raises(ValueError):
            AlphaStableParams(alpha, gamma)

    def test_gsnr_amplitude_must_be_positive(self):
        with pytest.raises(ValueError):
            GsnrSpec(10.0, amplitude=0.0)

    def test_cg_value(self):
        assert CG == pytest.approx(1.781072418, abs=1e-9)


class TestCharFn:
    @given(st.floats(0.05, 2.0), st.floats(0.01, 10.0))
    def test_one_at_origin(self, alpha, gamma):
        assert sas_char_fn(AlphaStableParams(alpha, gamma), 0.0) == 1.0

    def test_gaussian_value(self):
        assert sas_char_fn(AlphaStableParams(2.0, 0.5), 1.0) == pytest.approx(0.606531, abs=1e-6)

    def test_cauchy_value(self):
        assert sas_char_fn(AlphaStableParams(1.0, 1.0), 2.0) == pytest.approx(0.135335, abs=1e-6)


class TestSampler:
    def test_gaussian_variance(self):
        x = sas_sample(AlphaStableParams(2.0, 0.5), 100_000, rng=1)
        assert np.var(x) == pytest.approx(1.0, rel=0.05)

    def test_cauchy_quartiles(self):
        x = sas_sample(AlphaStableParams(1.0, 1.0), 100_000, rng=2)
        q1, med, q3 = np.percentile(x, [25, 50, 75])
        assert abs(med) < 0.05
        assert q3 - q1 == pytest.approx(2.0, rel=0.05)

    @pytest.mark.parametrize("alpha", [1.0, 1.2, 1.4, 1.6, 1.8, 2.0])
    def test_empirical_cf(self, alpha):
        n = 100_000
        x = sas_sample(AlphaStableParams(alpha, 1.0), n, rng=int(alpha * 10))
        for omega in (0.25, 0.5, 1.0, 2.0, 4.0):
            want = sas_char_fn(AlphaStableParams(alpha, 1.0), omega)
            assert abs(empirical_cf(x, omega) - want) < 4 / math.sqrt(n) + 0.01

    def test_dispersion_scaling(self):
        # scale gamma**(1/alpha) of the unit law
        p = AlphaStableParams(1.5, 3.0)
        x = sas_sample(p, 200_000, rng=5)
        assert abs(empirical_cf(x, 0.7) - sas_char_fn(p, 0.7)) < 0.01

    def test_matches_scipy_levy_stable(self):
        # scipy's S1 parametrisation with beta=0 and scale gamma**(1/alpha)
        alpha = 1.4
        x = sas_sample(AlphaStableParams(alpha, 1.0), 20_000, rng=9)
        ref = stats.levy_stable(alpha, 0.0)
        assert stats.kstest(x, ref.cdf).pvalue > 1e-3

    def test_deterministic(self):
        p = AlphaStableParams(1.3, 0.7)
        np.testing.assert_array_equal(sas_sample(p, 50, rng=11), sas_sample(p, 50, rng=11))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sas_sample(AlphaStableParams(1.3), 0)


class TestEpsilon:
    def test_bcgm_values(self):
        assert epsilon_bcgm(1.0) == 1.0
        assert epsilon_bcgm(2.0) == 0.0
        assert epsilon_bcgm(1.4) == pytest.approx(0.3469388, abs=1e-7)

    def test_quadratic_values(self):
        assert epsilon_mebcgm_quadratic(1.0) == 1.0  # 1.000004 before clamping
        assert epsilon_mebcgm_quadratic(2.0) == pytest.approx(0.009486, abs=1e-6)
        assert epsilon_mebcgm_quadratic(1.5) == pytest.approx(0.376369, abs=1e-6)

    @pytest.mark.parametrize("fn", [epsilon_bcgm, epsilon_mebcgm_quadratic, epsilon_mebcgm_integral])
    @pytest.mark.parametrize("alpha", [0.99, 2.01])
    def test_domain(self, fn, alpha):
        with pytest.raises(ValueError):
            fn(alpha)

    def test_integral_endpoints(self):
        assert epsilon_mebcgm_integral(1.0) == pytest.approx(1.0, abs=1e-6)
        assert epsilon_mebcgm_integral(2.0) == pytest.approx(0.0, abs=1e-6)

    def test_integral_near_fit(self):
        assert abs(epsilon_mebcgm_integral(1.5) - epsilon_mebcgm_quadratic(1.5)) < 0.02

    def test_integral_against_independent_quadrature(self):
        # mpmath on [0, inf) as an independent oracle
        mpmath = pytest.importorskip("mpmath")
        a = 1.3
        exp = mpmath.exp
        B = mpmath.quad(lambda w: exp(-w - w**a) + exp(-2 * w**2) - exp(-w - w**2) - exp(-w**a - w**2),
                        [0, 1, mpmath.inf])
        A = mpmath.quad(lambda w: exp(-2 * w) + exp(-2 * w**2) - 2 * exp(-w - w**2), [0, 1, mpmath.inf])
        assert epsilon_mebcgm_integral(a) == pytest.approx(float(B / A), abs=1e-7)

    @given(alphas_12)
    def test_in_unit_interval(self, alpha):
        for fn in (epsilon_bcgm, epsilon_mebcgm_quadratic):
            assert 0.0 <= fn(alpha) <= 1.0


class TestDensities:
    def test_bcgm_peaks(self):
        assert bcgm_pdf(0.0, 1.5, 1.0, 1.0) == pytest.approx(1 / math.pi)
        assert bcgm_pdf(0.0, 1.5, 1.0, 0.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)))

    def test_gaussian_peak(self):
        assert density_eval(GaussianDensity(1.0), 0.0) == pytest.approx(0.3989423, abs=1e-7)

    def test_identical_mixture(self):
        d = MixtureDensity(((0.5, CauchyDensity(1.0)), (0.5, CauchyDensity(1.0))))
        assert density_eval(d, 0.0) == pytest.approx(1 / math.pi)

    def test_mixture_weights_validated(self):
        with pytest.raises(ValueError):
            MixtureDensity(((0.7, CauchyDensity(1.0)), (0.7, CauchyDensity(1.0))))
        with pytest.raises(ValueError):
            MixtureDensity(((1.5, CauchyDensity(1.0)), (-0.5, CauchyDensity(1.0))))

    @given(st.floats(-1e4, 1e4), st.floats(0.1, 10.0))
    def test_endpoint_consistency(self, x, gamma):
        assert abs(bcgm_pdf(x, 1.0, gamma, epsilon_bcgm(1.0)) - CauchyDensity(gamma).pdf(x)) <= 1e-12
        assert abs(bcgm_pdf(x, 2.0, gamma, epsilon_bcgm(2.0))
                   - GaussianDensity(2 * gamma**2).pdf(x)) <= 1e-12

    @given(st.floats(-1e6, 1e6, allow_subnormal=False), alphas_12, st.floats(0.1, 10.0))
    def test_symmetric_positive_finite(self, x, alpha, gamma):
        for d in (sas_density(alpha, gamma), sas_density(alpha, gamma, "bcgm")):
            v = density_eval(d, x)
            assert v == density_eval(d, -x)
            assert np.isfinite(v) and v >= 0
            assert np.isfinite(d.logpdf(x))

    def test_endpoint_densities(self):
        assert isinstance(sas_density(1.0, 0.3), CauchyDensity)
        g = sas_density(2.0, 0.3)
        assert isinstance(g, GaussianDensity) and g.variance == pytest.approx(0.6)

    def test_logpdf_floor(self):
        d = BCGMDensity(2.0, 1.0, "bcgm")  # pure Gaussian part, underflows far out
        assert d.logpdf(1e5) == pytest.approx(math.log(1e-300))

    @pytest.mark.parametrize("alpha", [round(1.0 + 0.1 * i, 1) for i in range(11)])
    @pytest.mark.parametrize("rule", ["bcgm", "mebcgm"])
    def test_bcgm_normalized(self, alpha, rule):
        d = BCGMDensity(float(alpha), 1.0, rule)
        assert integrate_density(d) == pytest.approx(1.0, abs=1e-6)

    def test_mixture_normalized(self):
        d = MixtureDensity(((0.5, sas_density(1.4, 0.8)), (0.5, sas_density(1.6, 0.8))))
        assert integrate_density(d) == pytest.approx(1.0, abs=1e-6)

    def test_bcgm_matches_levy_stable_roughly(self):
        # an approximation, but a close one near the body of the law
        x = np.linspace(-3, 3, 13)
        ref = stats.levy_stable(1.5, 0.0).pdf(x)
        approx = sas_density(1.5, 1.0).pdf(x)
        assert np.max(np.abs(approx - ref)) < 0.02


class TestGsnr:
    def test_geometric_power_values(self):
        assert geometric_power(AlphaStableParams(1.0, 1.0)) == pytest.approx(1.0)
        assert geometric_power(AlphaStableParams(2.0, CG)) == pytest.approx(1.0)
        assert geometric_power(AlphaStableParams(2.0, 0.5)) == pytest.approx(math.sqrt(0.5 / CG), rel=1e-12)
        # commonly quoted to five places as 0.529825
        assert geometric_power(AlphaStableParams(2.0, 0.5)) == pytest.approx(0.529825, abs=2e-5)

    def test_gaussian_snr_coincidence(self):
        g = gsnr_to_dispersion(GsnrSpec(0.0), 2.0)
        assert g == pytest.approx(0.5, rel=1e-12)
        for db in (-3.0, 4.0, 10.0):
            g = gsnr_to_dispersion(GsnrSpec(db, amplitude=1.3), 2.0)
            assert 1.3**2 / (2 * g) == pytest.approx(10 ** (db / 10), rel=1e-12)

    def test_cauchy_value(self):
        assert gsnr_to_dispersion(GsnrSpec(0.0), 1.0) == pytest.approx(1 / math.sqrt(2 * CG), rel=1e-12)

    @given(st.floats(0.1, 2.0), st.floats(1e-3, 1e3), st.floats(0.1, 10.0))
    def test_round_trip(self, alpha, gamma, amplitude):
        p = AlphaStableParams(alpha, gamma)
        db = dispersion_to_gsnr(p, amplitude)
        assert gsnr_to_dispersion(GsnrSpec(db, amplitude), alpha) == pytest.approx(gamma, rel=1e-10)

    @settings(max_examples=30)
    @given(st.floats(1.0, 2.0), st.floats(-5, 20))
    def test_higher_gsnr_less_dispersion(self, alpha, db):
        assert gsnr_to_dispersion(GsnrSpec(db + 1), alpha) < gsnr_to_dispersion(GsnrSpec(db), alpha)
