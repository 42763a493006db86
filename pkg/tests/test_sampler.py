"""Tests for the affine-invariant ensemble sampler."""

import math

import numpy as np
import pytest
from scipy.special import erf

from activegp.errors import ConfigError
from activegp.sampler import (
    init_walkers,
    run_chain,
    sample_z,
    stretch_move,
    z_from_uniform,
)


def std_normal_logpdf(x):
    x = np.asarray(x)
    return -0.5 * float(x @ x)


class TestZSampling:
    def test_support_endpoints(self):
        assert z_from_uniform(0.0, a=2.0) == pytest.approx(0.5, rel=1e-12)
        assert z_from_uniform(1.0, a=2.0) == pytest.approx(2.0, rel=1e-12)

    def test_inverse_cdf_midpoint(self):
        # ((0.5*(sqrt(2)-1/sqrt(2)) + 1/sqrt(2)))^2 = 9/8
        assert z_from_uniform(0.5, a=2.0) == pytest.approx(1.125, rel=1e-12)

    def test_mean_matches_analytic(self):
        # E[z] over g(z) ~ 1/sqrt(z) on [1/2, 2] is 7/6.
        rng = np.random.default_rng(42)
        draws = sample_z(2.0, rng, size=1_000_000)
        assert draws.mean() == pytest.approx(7.0 / 6.0, abs=0.01)
        assert draws.min() >= 0.5 and draws.max() <= 2.0

    def test_scalar_draw(self):
        rng = np.random.default_rng(0)
        z = sample_z(2.0, rng)
        assert isinstance(z, float) and 0.5 <= z <= 2.0

    def test_invalid_a_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            sample_z(1.0, rng)
        with pytest.raises(ConfigError):
            z_from_uniform(0.5, a=0.9)


class TestInitWalkers:
    def test_deterministic_and_distinct(self):
        s1 = init_walkers(4, np.zeros(2), np.eye(2), seed=123)
        s2 = init_walkers(4, np.zeros(2), np.eye(2), seed=123)
        assert np.array_equal(s1.walkers, s2.walkers)
        assert len({tuple(w) for w in s1.walkers}) == 4

    def test_too_few_walkers_rejected(self):
        with pytest.raises(ConfigError, match="2n"):
            init_walkers(3, np.zeros(2), np.eye(2), seed=0)

    def test_moments_recover_spread(self):
        s = init_walkers(10_000, np.zeros(2), np.eye(2), seed=7)
        assert np.all(np.abs(s.walkers.mean(axis=0)) < 0.05)
        assert np.allclose(s.walkers.var(axis=0), 1.0, rtol=0.05)

    def test_scalar_and_diagonal_spread(self):
        s = init_walkers(5000, np.array([1.0, -1.0]), np.array([4.0, 0.25]), seed=3)
        assert np.allclose(s.walkers.var(axis=0), [4.0, 0.25], rtol=0.1)


class TestStretchMove:
    def test_constant_target_acceptance_rate(self):
        # With a flat target the acceptance probability is min(1, z^(n-1)).
        # Oracle: quadrature of min(1, z) * g(z) over [1/2, 2] (n = 2).
        expected = 0.8905242917512647
        state = init_walkers(10, np.zeros(2), np.eye(2), seed=11)
        target = lambda th: 0.0
        total = accepted = 0
        for _ in range(2000):
            state = stretch_move(state, target)
            total += state.n_walkers
        accepted = state.n_accepted
        assert accepted / total == pytest.approx(expected, abs=0.01)

    def test_nan_target_rejected_and_counted(self):
        state = init_walkers(4, np.zeros(2), np.eye(2), seed=5, log_target=std_normal_logpdf)
        walkers_before = state.walkers.copy()
        state = stretch_move(state, lambda th: math.nan)
        assert state.nan_count == 4
        assert np.array_equal(state.walkers, walkers_before)

    def test_cached_values_consistent_after_sweeps(self):
        state = init_walkers(6, np.zeros(3), np.eye(3), seed=8, log_target=std_normal_logpdf)
        for _ in range(25):
            state = stretch_move(state, std_normal_logpdf)
        recomputed = np.array([std_normal_logpdf(w) for w in state.walkers])
        assert np.array_equal(state.log_target_values, recomputed)

    def test_one_dim_normal_moment_recovery(self):
        state = init_walkers(4, np.zeros(1), np.eye(1), seed=21, log_target=std_normal_logpdf)
        chain = run_chain(state, std_normal_logpdf, n_sweeps=100_000, burn_in=20_000)
        pooled = chain.samples.ravel()
        assert pooled.mean() == pytest.approx(0.0, abs=0.05)
        assert pooled.var() == pytest.approx(1.0, abs=0.1)


class TestRunChain:
    def test_sample_count(self):
        state = init_walkers(6, np.zeros(2), np.eye(2), seed=2)
        chain = run_chain(state, std_normal_logpdf, n_sweeps=11, burn_in=10)
        assert len(chain) == 6
        assert chain.burn_in_used == 10

    def test_determinism_bit_identical(self):
        def make():
            state = init_walkers(6, np.zeros(2), np.eye(2), seed=31)
            return run_chain(state, std_normal_logpdf, n_sweeps=200, burn_in=50)

        c1, c2 = make(), make()
        assert np.array_equal(c1.samples, c2.samples)
        assert np.array_equal(c1.log_target_values, c2.log_target_values)
        assert np.array_equal(c1.accepted_flags, c2.accepted_flags)
        assert c1.acceptance_rate == c2.acceptance_rate

    def test_three_dim_covariance_recovery(self):
        cov = np.array([[1.0, 0.6, 0.45], [0.6, 2.0, 0.8], [0.45, 0.8, 1.5]])
        prec = np.linalg.inv(cov)

        def target(th):
            return -0.5 * float(th @ prec @ th)

        state = init_walkers(6, np.zeros(3), cov, seed=17, log_target=target)
        chain = run_chain(state, target, n_sweeps=20_000, burn_in=5_000)
        sample_cov = np.cov(chain.samples, rowvar=False)
        assert np.all(np.abs(sample_cov - cov) <= 0.1 * np.abs(cov) + 1e-12)

    def test_degenerate_chain_warning(self):
        # A needle target no walker can enter: every proposal is rejected.
        def needle(th):
            return 0.0 if np.linalg.norm(th) < 1e-12 else -math.inf

        state = init_walkers(4, np.zeros(2), 1e-6 * np.eye(2), seed=3)
        # all initial values -inf -> every acceptance ratio is NaN -> reject
        chain = run_chain(state, needle, n_sweeps=50, burn_in=10)
        assert chain.acceptance_rate == 0.0
        assert any("degenerate" in w for w in chain.warnings)

    def test_invalid_burn_in(self):
        state = init_walkers(4, np.zeros(2), np.eye(2), seed=0)
        with pytest.raises(ConfigError):
            run_chain(state, std_normal_logpdf, n_sweeps=10, burn_in=10)


class TestAffineEquivariance:
    def test_power_of_two_scaling_is_bit_exact(self):
        # Diagonal power-of-two scalings commute exactly with the move
        # arithmetic, so the mapped chain must be bit-identical to the
        # mapped original trajectory.
        scale = np.array([4.0, 0.5, 2.0])

        cov = np.diag([1.0, 2.0, 0.5])
        prec = np.linalg.inv(cov)

        def target(th):
            return -0.5 * float(th @ prec @ th)

        def mapped_target(th):
            return target(th / scale)

        state_a = init_walkers(6, np.zeros(3), cov, seed=99, log_target=target)
        state_b = state_a.__class__(
            walkers=state_a.walkers * scale,
            log_target_values=state_a.log_target_values.copy(),
            rng=np.random.default_rng(1234),
        )
        state_a.rng = np.random.default_rng(1234)

        chain_a = run_chain(state_a, target, n_sweeps=300, burn_in=0)
        chain_b = run_chain(state_b, mapped_target, n_sweeps=300, burn_in=0)
        assert np.array_equal(chain_b.samples, chain_a.samples * scale)
        assert np.array_equal(chain_b.accepted_flags, chain_a.accepted_flags)

    def test_general_affine_map_matches_to_rounding(self):
        rng = np.random.default_rng(5)
        M = rng.normal(size=(2, 2)) + 3 * np.eye(2)
        b = rng.normal(size=2)
        M_inv = np.linalg.inv(M)

        def target(th):
            return -0.5 * float(th @ th)

        def mapped_target(y):
            return target(M_inv @ (y - b))

        state_a = init_walkers(4, np.zeros(2), np.eye(2), seed=77, log_target=target)
        mapped = state_a.walkers @ M.T + b
        state_b = state_a.__class__(
            walkers=mapped,
            log_target_values=np.array([mapped_target(y) for y in mapped]),
            rng=np.random.default_rng(55),
        )
        state_a.rng = np.random.default_rng(55)
        chain_a = run_chain(state_a, target, n_sweeps=50, burn_in=0)
        chain_b = run_chain(state_b, mapped_target, n_sweeps=50, burn_in=0)
        assert np.allclose(chain_b.samples, chain_a.samples @ M.T + b, rtol=1e-9, atol=1e-9)


def test_bimodal_mixture_total_variation():
    # Two-component 1-D Gaussian mixture; pooled histogram vs true density.
    mu1, mu2, s1, s2, w1 = -2.0, 2.5, 0.7, 1.0, 0.4

    def target(th):
        x = th[0]
        a = math.log(w1) - 0.5 * ((x - mu1) / s1) ** 2 - math.log(s1)
        b = math.log(1 - w1) - 0.5 * ((x - mu2) / s2) ** 2 - math.log(s2)
        return float(np.logaddexp(a, b))

    def cdf(x):
        return w1 * 0.5 * (1 + erf((x - mu1) / (s1 * math.sqrt(2)))) + (1 - w1) * 0.5 * (
            1 + erf((x - mu2) / (s2 * math.sqrt(2)))
        )

    state = init_walkers(8, np.zeros(1), 4.0 * np.eye(1), seed=2024, log_target=target)
    chain = run_chain(state, target, n_sweeps=130_000, burn_in=5_000)
    pooled = chain.samples.ravel()
    assert len(pooled) == 8 * 125_000

    edges = np.linspace(-6.0, 7.0, 51)
    hist, _ = np.histogram(pooled, bins=edges)
    p_hat = hist / len(pooled)
    p_true = np.diff([cdf(e) for e in edges])
    # mass outside the binned range goes to the TV defect as well
    tv = 0.5 * (np.abs(p_hat - p_true).sum() + (1 - p_hat.sum()) + (1 - p_true.sum()))
    assert tv < 0.05
