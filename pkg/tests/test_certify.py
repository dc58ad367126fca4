"""Coverage harness and exponential-moment probe."""

import math

import numpy as np
import pytest

from onlinepb.certify import (
    BOUND_ALGORITHMS,
    binomial_envelope,
    coverage_experiment,
    exp_moment_probe,
    prox_divergence,
)
from onlinepb.streams import (
    IID_GAUSSIAN_LINEAR,
    MARKOV_AR1,
    SyntheticStream,
)


def small_stream(family=IID_GAUSSIAN_LINEAR, m=30, d=2, **kw):
    return SyntheticStream(family, d=d, m=m, **kw)


class TestBinomialEnvelope:
    def test_value(self):
        # delta*R + 3 sqrt(R delta (1 - delta)) at R=200, delta=0.05
        assert binomial_envelope(200, 0.05) == pytest.approx(
            10 + 3 * math.sqrt(200 * 0.05 * 0.95))

    def test_degenerate_single_rep(self):
        assert binomial_envelope(1, 0.05) < 1.0 + 3.0


class TestCoverageSmoke:
    def test_opb_test_small(self):
        res = coverage_experiment("gibbs", "opb_test", small_stream(), R=4,
                                  n_mc=1500, n_particles=100, seed=0)
        assert res.repetitions == 4
        assert 0 <= res.violations <= 4
        assert res.lhs.shape == (4,)
        assert np.all(res.rhs > 0)
        assert res.passes_envelope() or res.violations > 0

    def test_prox_test_pointwise_small(self):
        res = coverage_experiment("noisy_prox", "prox_test_pointwise",
                                  small_stream(), R=3, n_mc=1000, seed=1)
        assert res.repetitions == 3

    def test_prox_train_renyi_small(self):
        res = coverage_experiment("noisy_prox", "prox_train_renyi",
                                  small_stream(), R=2, n_mc=800, seed=2)
        assert res.repetitions == 2

    def test_markov_stream(self):
        res = coverage_experiment(
            "noisy_prox", "prox_test_pointwise",
            small_stream(family=MARKOV_AR1, m=15), R=2, n_mc=500, seed=3)
        assert res.repetitions == 2

    def test_determinism(self):
        a = coverage_experiment("gibbs", "opb_test", small_stream(), R=2,
                                n_mc=600, n_particles=60, seed=4)
        b = coverage_experiment("gibbs", "opb_test", small_stream(), R=2,
                                n_mc=600, n_particles=60, seed=4)
        np.testing.assert_array_equal(a.lhs, b.lhs)
        np.testing.assert_array_equal(a.rhs, b.rhs)

    def test_mismatched_pair_rejected(self):
        with pytest.raises(ValueError):
            coverage_experiment("gibbs", "prox_test_pointwise", small_stream(),
                                R=1, n_mc=100)

    def test_bound_table_complete(self):
        assert set(BOUND_ALGORITHMS) == {
            "opb_test", "opb_train", "naive",
            "prox_test_pointwise", "prox_test_renyi",
            "prox_train_pointwise", "prox_train_renyi",
        }


class TestProxDivergence:
    def test_pointwise_hand_value(self):
        # d=1, one step: w0=0 -> w1=1, eps=0.5, sigma2=1, lam_bound=2
        means = np.array([[0.0], [1.0]])
        noises = np.array([[0.5]])
        # h = 1.5; (||h-w0||^2 - ||eps||^2) / (2 sigma2) / lam = (2.25-0.25)/2/2
        val = prox_divergence(means, noises, 1.0, "pointwise", 2.0)
        assert val == pytest.approx(0.5)

    def test_renyi_hand_value(self):
        means = np.array([[0.0], [2.0]])
        noises = np.array([[0.3]])
        # ||step||^2 / sigma2 / (2 lam) = 4 / 1 / 2
        val = prox_divergence(means, noises, 1.0, "renyi", 1.0)
        assert val == pytest.approx(2.0)


class TestExpMomentProbe:
    def test_lambda_zero(self):
        res = exp_moment_probe(0.0, 5, 1.0, R=50, seed=0)
        assert res.estimate == pytest.approx(1.0)
        assert res.ratio == pytest.approx(1.0)

    def test_cosh_hand_value(self):
        # m=1, loss in {0, K}, p=1/2, lam=1/K: moment = cosh(1/2) = 1.1276
        res = exp_moment_probe(1.0, 1, 1.0, R=400_000, seed=1, p=0.5)
        assert abs(res.estimate - math.cosh(0.5)) < 4 * res.se_relative * res.estimate
        assert res.estimate == pytest.approx(1.1276, abs=0.005)
        assert res.bound == pytest.approx(math.exp(0.5))
        assert res.ratio <= 1.0

    def test_larger_threshold_slackens_bound(self):
        a = exp_moment_probe(0.5, 4, 1.0, R=20_000, seed=2)
        b = exp_moment_probe(0.5, 4, 2.0, R=20_000, seed=2)
        # same lam; doubling K quadruples the log-bound, ratio decreases
        assert b.bound > a.bound

    def test_ratio_below_one_with_mc_slack(self):
        for lam in (0.1, 0.5, 1.0):
            res = exp_moment_probe(lam, 10, 1.0, R=30_000, seed=3)
            assert res.ratio <= 1.0 + 3 * res.se_relative

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            exp_moment_probe(-0.1, 5, 1.0, R=10)
        with pytest.raises(ValueError):
            exp_moment_probe(0.1, 5, 1.0, R=0)
