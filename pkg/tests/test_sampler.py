import numpy as np
import pytest

from tiltedscore import (
    GaussianMixture,
    MixtureScoreModel,
    NoiseSchedule,
    SamplerConfig,
    TiltParams,
    denoiser_step,
    make_schedule,
    mc_moments,
    mixture_moments,
    sample_base,
    sample_tilted,
    tilted_mixture,
)


class TestMakeSchedule:
    def test_linear_three_levels(self):
        sched = make_schedule("linear_sigma", steps=3, sigma_min=0.0)
        np.testing.assert_allclose(sched.levels, [0.9999, 0.49995, 0.0], rtol=1e-12)

    def test_geometric_endpoints(self):
        sched = make_schedule("geometric_sigma", steps=2, sigma_min=0.1)
        np.testing.assert_allclose(sched.levels, [0.9999, 0.1], rtol=1e-12)

    def test_geometric_is_log_spaced(self):
        sched = make_schedule("geometric_sigma", steps=5, sigma_min=0.01)
        ratios = sched.levels[1:] / sched.levels[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)

    def test_single_step_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            make_schedule("linear_sigma", steps=1, sigma_min=0.0)

    def test_geometric_to_zero_rejected(self):
        with pytest.raises(ValueError, match="geometric"):
            make_schedule("geometric_sigma", steps=10, sigma_min=0.0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown schedule"):
            make_schedule("cosine", steps=10, sigma_min=0.0)


class TestNoiseSchedule:
    def test_increasing_rejected(self):
        with pytest.raises(ValueError, match="decreasing"):
            NoiseSchedule(levels=[0.1, 0.5])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="\\[0, 1\\]"):
            NoiseSchedule(levels=[1.2, 0.5])

    def test_too_short_rejected(self):
        with pytest.raises(ValueError, match="two levels"):
            NoiseSchedule(levels=[0.5])

    def test_steps_property(self):
        assert NoiseSchedule(levels=[0.9, 0.5, 0.0]).steps == 2


class TestDenoiserStep:
    def test_final_step_returns_denoised(self):
        u = np.array([[0.4], [1.0]])
        xhat = np.array([[2.0], [-1.0]])
        out = denoiser_step(u, 0.5, 0.0, xhat)
        np.testing.assert_array_equal(out, xhat)

    def test_on_manifold_point_follows_flow(self):
        xhat = np.array([[1.5, -0.5]])
        hi, lo = 0.8, 0.3
        u = np.sqrt(1 - hi**2) * xhat
        out = denoiser_step(u, hi, lo, xhat)
        np.testing.assert_allclose(out, np.sqrt(1 - lo**2) * xhat, rtol=1e-14)

    def test_ordering_violation_rejected(self):
        with pytest.raises(ValueError, match="decrease"):
            denoiser_step(np.zeros((1, 1)), 0.3, 0.5, np.zeros((1, 1)))

    def test_ancestral_requires_noise(self):
        with pytest.raises(ValueError, match="noise"):
            denoiser_step(np.zeros((1, 1)), 0.5, 0.2, np.zeros((1, 1)), mode="ancestral")

    def test_ancestral_final_step_ignores_noise_scale(self):
        u = np.array([[0.4]])
        xhat = np.array([[0.9]])
        out = denoiser_step(u, 0.5, 0.0, xhat, noise=np.array([[3.0]]), mode="ancestral")
        np.testing.assert_allclose(out, xhat, atol=1e-15)

    def test_ancestral_preserves_gaussian_marginal_small_step(self):
        # u at level hi for X ~ N(0,1) is N(0,1); a small ancestral step with
        # the exact denoiser must keep the marginal N(0,1) up to the O(step^2)
        # bias of the noise-scale choice
        rng = np.random.default_rng(42)
        n = 400_000
        hi, lo = 0.52, 0.5
        x = rng.standard_normal((n, 1))
        u = np.sqrt(1 - hi**2) * x + hi * rng.standard_normal((n, 1))
        xhat = np.sqrt(1 - hi**2) * u  # exact N(0,1) denoiser
        out = denoiser_step(u, hi, lo, xhat, noise=rng.standard_normal((n, 1)), mode="ancestral")
        assert abs(out.mean()) < 0.01
        assert abs(out.var() - 1.0) < 0.01

    def test_ancestral_step_bias_shrinks_with_step_size(self):
        # halving the step size must cut the per-step variance bias ~4x:
        # the exact one-step output variance for base N(0,1) is computable
        def one_step_var(hi, lo):
            c_h, c_l = np.sqrt(1 - hi**2), np.sqrt(1 - lo**2)
            eta = lo * np.sqrt(1 - (lo / hi) ** 2)
            carry = np.sqrt(lo**2 - eta**2) / hi
            coef = c_l * c_h + carry * hi**2
            return coef**2 + eta**2

        wide = abs(one_step_var(0.60, 0.50) - 1.0)
        narrow = abs(one_step_var(0.55, 0.50) - 1.0)
        assert narrow < wide / 3.0


def _gaussian_model():
    return MixtureScoreModel(GaussianMixture.standard(1))


class TestSampling:
    def test_deterministic_runs_are_bitwise_identical(self):
        cfg = SamplerConfig(make_schedule("linear_sigma", 20, 0.0), n_samples=64, seed=7)
        model = _gaussian_model()
        tilt = TiltParams(v=[1.0])
        a = sample_tilted(model, tilt, cfg)
        b = sample_tilted(model, tilt, cfg)
        np.testing.assert_array_equal(a, b)

    def test_identity_tilt_matches_base_pipeline_bitwise(self, harness_model):
        cfg = SamplerConfig(make_schedule("linear_sigma", 30, 0.0), n_samples=128, seed=3)
        tilted = sample_tilted(harness_model, TiltParams(v=[0.0]), cfg)
        base = sample_base(harness_model, cfg)
        np.testing.assert_array_equal(tilted, base)

    def test_sample_streams_independent_of_batch_size(self):
        # per-sample RNG streams: the first k draws must not depend on n_samples
        model = _gaussian_model()
        sched = make_schedule("linear_sigma", 10, 0.0)
        small = sample_base(model, SamplerConfig(sched, n_samples=8, seed=11))
        large = sample_base(model, SamplerConfig(sched, n_samples=32, seed=11))
        np.testing.assert_array_equal(small, large[:8])

    def test_seed_changes_samples(self):
        model = _gaussian_model()
        sched = make_schedule("linear_sigma", 10, 0.0)
        a = sample_base(model, SamplerConfig(sched, n_samples=16, seed=1))
        b = sample_base(model, SamplerConfig(sched, n_samples=16, seed=2))
        assert np.max(np.abs(a - b)) > 1e-6

    def test_dimension_mismatch_rejected(self, harness_model):
        cfg = SamplerConfig(make_schedule("linear_sigma", 5, 0.0), n_samples=4, seed=0)
        with pytest.raises(ValueError, match="dimension"):
            sample_tilted(harness_model, TiltParams(v=[0.0, 0.0]), cfg)

    def test_base_gaussian_moments(self):
        cfg = SamplerConfig(make_schedule("linear_sigma", 100, 0.0), n_samples=20_000, seed=42)
        out = mc_moments(sample_base(_gaussian_model(), cfg))
        assert abs(out.mean[0]) < 0.05
        assert abs(out.cov[0, 0] - 1.0) < 0.05

    def test_linear_tilt_moments(self):
        cfg = SamplerConfig(make_schedule("linear_sigma", 100, 0.0), n_samples=20_000, seed=42)
        out = mc_moments(sample_tilted(_gaussian_model(), TiltParams(v=[1.0]), cfg))
        assert abs(out.mean[0] - 1.0) < 0.06
        assert abs(out.cov[0, 0] - 1.0) < 0.06

    def test_quadratic_tilt_moments(self):
        cfg = SamplerConfig(make_schedule("linear_sigma", 100, 0.0), n_samples=20_000, seed=42)
        out = mc_moments(sample_tilted(_gaussian_model(), TiltParams(v=[0.0], s=1.0), cfg))
        assert abs(out.mean[0]) < 0.06
        assert abs(out.cov[0, 0] - 0.5) < 0.06

    def test_ancestral_gaussian_moments(self):
        cfg = SamplerConfig(
            make_schedule("linear_sigma", 200, 0.0), n_samples=20_000, seed=42, mode="ancestral"
        )
        out = mc_moments(sample_base(_gaussian_model(), cfg))
        assert abs(out.mean[0]) < 0.05
        assert abs(out.cov[0, 0] - 1.0) < 0.05

    def test_mixture_tilt_moments(self, harness_mixture, harness_model):
        # the full pipeline on a mixture base against the exact tilted moments
        tilt = TiltParams(v=[0.7], s=2.0)
        cfg = SamplerConfig(make_schedule("linear_sigma", 150, 0.0), n_samples=20_000, seed=42)
        out = mc_moments(sample_tilted(harness_model, tilt, cfg))
        mean, cov = mixture_moments(tilted_mixture(harness_mixture, tilt))
        assert abs(out.mean[0] - mean[0]) < 0.05
        assert abs(out.cov[0, 0] - cov[0, 0]) < 0.05

    def test_multivariate_sampling_shape(self, mixture_2d):
        model = MixtureScoreModel(mixture_2d)
        cfg = SamplerConfig(make_schedule("linear_sigma", 20, 0.0), n_samples=50, seed=5)
        out = sample_tilted(model, TiltParams(v=[0.1, -0.2], s=0.5), cfg)
        assert out.shape == (50, 2)
        assert np.all(np.isfinite(out))


class TestSamplerConfig:
    def test_zero_samples_rejected(self):
        with pytest.raises(ValueError, match="n_samples"):
            SamplerConfig(make_schedule("linear_sigma", 5, 0.0), n_samples=0, seed=0)

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            SamplerConfig(make_schedule("linear_sigma", 5, 0.0), n_samples=1, seed=0, mode="mcmc")

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError, match="seed"):
            SamplerConfig(make_schedule("linear_sigma", 5, 0.0), n_samples=1, seed=-1)
