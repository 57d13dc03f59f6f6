import numpy as np
import pytest

from tiltedscore import (
    BoundaryMassWarning,
    GaussianMixture,
    QuadratureSpec,
    TiltParams,
    fd_gradient,
    mc_moments,
    mixture_box,
    mixture_log_density,
    quad_denoiser,
    quad_marginal_logq,
    quad_normalizer,
)


def std_normal_logp(x):
    return -0.5 * np.sum(x**2, axis=1) - 0.5 * x.shape[1] * np.log(2 * np.pi)


@pytest.fixture(scope="module")
def spec_1d():
    return QuadratureSpec(lower=[-12.0], upper=[12.0], points_per_axis=2048)


class TestQuadratureSpec:
    def test_bounds_must_be_ordered(self):
        with pytest.raises(ValueError, match="strictly below"):
            QuadratureSpec(lower=[1.0], upper=[1.0], points_per_axis=64)

    def test_minimum_resolution(self):
        with pytest.raises(ValueError, match="at least 32"):
            QuadratureSpec(lower=[-1.0], upper=[1.0], points_per_axis=16)

    def test_grid_size_cap(self):
        with pytest.raises(ValueError, match="exceeds"):
            QuadratureSpec(lower=[-1.0] * 3, upper=[1.0] * 3, points_per_axis=1024)

    def test_dimension_cap(self):
        with pytest.raises(ValueError, match="1 <= d <= 3"):
            QuadratureSpec(lower=[-1.0] * 4, upper=[1.0] * 4, points_per_axis=64)

    def test_with_points(self, spec_1d):
        doubled = spec_1d.with_points(4096)
        assert doubled.points_per_axis == 4096
        np.testing.assert_array_equal(doubled.lower, spec_1d.lower)


class TestQuadNormalizer:
    def test_identity_tilt_is_one(self, spec_1d):
        out = quad_normalizer(std_normal_logp, TiltParams(v=[0.0]), spec_1d)
        np.testing.assert_allclose(out, 1.0, atol=1e-10)

    def test_quadratic_tilt_gaussian(self, spec_1d):
        out = quad_normalizer(std_normal_logp, TiltParams(v=[0.0], s=1.0), spec_1d)
        np.testing.assert_allclose(out, 1.0 / np.sqrt(2.0), rtol=1e-10)

    def test_linear_tilt_mgf(self, spec_1d):
        out = quad_normalizer(std_normal_logp, TiltParams(v=[1.0]), spec_1d)
        np.testing.assert_allclose(out, np.exp(0.5), rtol=1e-10)

    def test_normalization_constant_invariance(self, spec_1d):
        # the denominator makes any additive log-offset drop out
        tilt = TiltParams(v=[0.3], s=0.7)
        a = quad_normalizer(std_normal_logp, tilt, spec_1d)
        b = quad_normalizer(lambda x: std_normal_logp(x) + 11.0, tilt, spec_1d)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_small_box_warns(self):
        tight = QuadratureSpec(lower=[-2.0], upper=[2.0], points_per_axis=256)
        with pytest.warns(BoundaryMassWarning):
            quad_normalizer(std_normal_logp, TiltParams(v=[1.5]), tight)

    def test_nan_integrand_rejected(self, spec_1d):
        def bad(x):
            out = std_normal_logp(x)
            out[0] = np.nan
            return out

        with pytest.raises(ValueError, match="NaN"):
            quad_normalizer(bad, TiltParams(v=[0.0]), spec_1d)

    def test_wrong_output_shape_rejected(self, spec_1d):
        with pytest.raises(ValueError, match="map"):
            quad_normalizer(lambda x: np.zeros((x.shape[0], 1)), TiltParams(v=[0.0]), spec_1d)


class TestQuadDenoiser:
    def test_gaussian_posterior_mean(self, spec_1d):
        out = quad_denoiser(std_normal_logp, np.array([0.3]), 0.5, spec_1d)
        np.testing.assert_allclose(out, [np.sqrt(0.75) * 0.3], rtol=1e-10)

    def test_symmetric_density_at_origin(self, spec_1d):
        out = quad_denoiser(std_normal_logp, np.array([0.0]), 0.4, spec_1d)
        np.testing.assert_allclose(out, [0.0], atol=1e-12)

    def test_conjugate_gaussian_fixed_point(self, spec_1d):
        def logp(x):
            return -0.5 * np.sum((x - 2.0) ** 2, axis=1)

        sigma = 0.5
        u = np.array([2.0 * np.sqrt(1 - sigma**2)])
        np.testing.assert_allclose(quad_denoiser(logp, u, sigma, spec_1d), [2.0], rtol=1e-10)

    @pytest.mark.parametrize("sigma", [0.0, 1.0])
    def test_endpoints_rejected(self, spec_1d, sigma):
        with pytest.raises(ValueError, match="sigma"):
            quad_denoiser(std_normal_logp, np.zeros(1), sigma, spec_1d)

    def test_dimension_mismatch_rejected(self, spec_1d):
        with pytest.raises(ValueError, match="shape"):
            quad_denoiser(std_normal_logp, np.zeros(2), 0.5, spec_1d)


class TestQuadMarginalLogq:
    def test_standard_normal_marginal(self, spec_1d):
        out = quad_marginal_logq(std_normal_logp, np.array([0.0]), 0.5, spec_1d)
        np.testing.assert_allclose(out, -0.5 * np.log(2 * np.pi), rtol=1e-10)

    def test_narrow_density_convolution_limit(self, spec_1d):
        width = 1e-3
        mu, sigma, u = 1.3, 0.6, np.array([0.4])

        def logp(x):
            return -0.5 * np.sum((x - mu) ** 2, axis=1) / width**2 - np.log(
                width * np.sqrt(2 * np.pi)
            )

        got = quad_marginal_logq(logp, u, sigma, spec_1d.with_points(65536))
        loc = np.sqrt(1 - sigma**2) * mu
        expected = -0.5 * np.log(2 * np.pi * sigma**2) - (u[0] - loc) ** 2 / (2 * sigma**2)
        np.testing.assert_allclose(got, expected, atol=1e-5)

    def test_pure_noise_marginal(self, spec_1d):
        for u in (-1.0, 0.0, 2.5):
            out = quad_marginal_logq(std_normal_logp, np.array([u]), 1.0, spec_1d)
            np.testing.assert_allclose(out, -0.5 * np.log(2 * np.pi) - 0.5 * u**2, rtol=1e-10)

    def test_matches_mixture_marginal(self, harness_mixture, spec_1d):
        from tiltedscore import noised_mixture

        def logp(x):
            return mixture_log_density(harness_mixture, x)

        for sigma in (0.1, 0.5, 0.9):
            noised = noised_mixture(harness_mixture, sigma)
            for u in (-3.0, 0.2, 3.5):
                got = quad_marginal_logq(logp, np.array([u]), sigma, spec_1d)
                want = mixture_log_density(noised, np.array([u]))
                np.testing.assert_allclose(got, want, rtol=1e-10)


class TestFdGradient:
    def test_quadratic(self):
        out = fd_gradient(lambda x: -0.5 * np.sum(x**2), np.array([0.7]))
        np.testing.assert_allclose(out, [-0.7], atol=1e-8)

    def test_linear_exact(self):
        v = np.array([1.5, -2.0, 0.25])
        out = fd_gradient(lambda x: v @ x, np.array([0.3, 1.0, -0.7]))
        np.testing.assert_allclose(out, v, atol=1e-10)

    def test_gaussian_marginal_score(self, spec_1d):
        out = fd_gradient(
            lambda u: quad_marginal_logq(std_normal_logp, u, 0.5, spec_1d), np.array([0.4])
        )
        np.testing.assert_allclose(out, [-0.4], atol=1e-6)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            fd_gradient(lambda x: np.inf, np.zeros(1))

    def test_bad_step_rejected(self):
        with pytest.raises(ValueError, match="step"):
            fd_gradient(lambda x: 0.0, np.zeros(1), h=0.0)


class TestConvergenceSelfCheck:
    def test_denoiser_stable_under_doubling(self, harness_mixture):
        tilt = TiltParams(v=[0.7], s=2.0)
        from tiltedscore import tilted_mixture

        tilted = tilted_mixture(harness_mixture, tilt)
        lo, up = mixture_box(tilted)
        coarse = QuadratureSpec(lo, up, 2048)

        def logp(x):
            return mixture_log_density(tilted, x)

        for sigma in (0.05, 0.5, 0.95):
            for u in (-4.0, 1.0):
                a = quad_denoiser(logp, np.array([u]), sigma, coarse)
                b = quad_denoiser(logp, np.array([u]), sigma, coarse.with_points(4096))
                assert np.max(np.abs(a - b)) < 1e-9

    def test_normalizer_stable_under_doubling(self, harness_mixture):
        lo, up = mixture_box(harness_mixture)
        coarse = QuadratureSpec(lo, up, 2048)
        tilt = TiltParams(v=[-1.0], s=0.5)

        def logp(x):
            return mixture_log_density(harness_mixture, x)

        a = quad_normalizer(logp, tilt, coarse)
        b = quad_normalizer(logp, tilt, coarse.with_points(4096))
        np.testing.assert_allclose(a, b, rtol=1e-10)


class TestMcMoments:
    def test_constant_samples(self):
        out = mc_moments([[1.0], [1.0], [1.0], [1.0]])
        np.testing.assert_array_equal(out.mean, [1.0])
        np.testing.assert_array_equal(out.cov, [[0.0]])
        np.testing.assert_array_equal(out.se_mean, [0.0])

    def test_two_point_formula(self):
        out = mc_moments([[0.0], [2.0]])
        np.testing.assert_array_equal(out.mean, [1.0])
        np.testing.assert_array_equal(out.cov, [[2.0]])
        np.testing.assert_array_equal(out.se_mean, [1.0])

    def test_seeded_gaussian_clt_bound(self):
        draws = np.random.default_rng(42).standard_normal(100_000)
        out = mc_moments(draws)
        assert abs(out.mean[0]) < 3.0 / np.sqrt(100_000)
        np.testing.assert_allclose(out.se_mean[0], 1.0 / np.sqrt(100_000), rtol=0.02)

    def test_single_sample_rejected(self):
        with pytest.raises(ValueError, match="n >= 2"):
            mc_moments([[1.0]])

    def test_multivariate_shapes(self):
        rng = np.random.default_rng(7)
        out = mc_moments(rng.standard_normal((50, 3)))
        assert out.mean.shape == (3,)
        assert out.cov.shape == (3, 3)
        assert out.se_mean.shape == (3,)
