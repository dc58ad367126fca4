"""Synthetic streams and conditional-risk estimation."""

import numpy as np
import pytest

from onlinepb.core import HINGE, SQUARED, LossSpec
from onlinepb.distributions import run_rng
from onlinepb.streams import (
    IID_CLASSIFICATION_MARGIN,
    IID_GAUSSIAN_LINEAR,
    MARKOV_AR1,
    SyntheticStream,
    conditional_risk,
    generate,
    sample_conditional,
    true_weights,
)


class TestStreamSpec:
    def test_unknown_family(self):
        with pytest.raises(ValueError):
            SyntheticStream("weird", d=2, m=10)

    def test_flip_probability_range(self):
        with pytest.raises(ValueError):
            SyntheticStream(IID_CLASSIFICATION_MARGIN, d=2, m=10, noise=0.6)

    def test_tasks(self):
        assert SyntheticStream(IID_GAUSSIAN_LINEAR, 2, 5).task == "regression"
        assert SyntheticStream(
            IID_CLASSIFICATION_MARGIN, 2, 5, noise=0.1).task == "classification"


class TestGenerate:
    def test_determinism(self):
        s = SyntheticStream(IID_GAUSSIAN_LINEAR, d=3, m=40, seed=5)
        a, b = generate(s), generate(s)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)

    def test_reps_differ(self):
        s = SyntheticStream(IID_GAUSSIAN_LINEAR, d=3, m=40, seed=5)
        assert not np.array_equal(generate(s, rep=0).X, generate(s, rep=1).X)

    def test_weights_fixed_across_reps(self):
        s = SyntheticStream(IID_GAUSSIAN_LINEAR, d=4, m=5, seed=9)
        np.testing.assert_array_equal(true_weights(s), true_weights(s))

    def test_classification_labels(self):
        s = SyntheticStream(IID_CLASSIFICATION_MARGIN, d=2, m=100, noise=0.2)
        ds = generate(s)
        assert set(np.unique(ds.y)) <= {-1.0, 1.0}

    def test_markov_autocorrelation(self):
        s = SyntheticStream(MARKOV_AR1, d=1, m=5000, rho=0.8, seed=1)
        x = generate(s).X[:, 0]
        corr = np.corrcoef(x[:-1], x[1:])[0, 1]
        assert abs(corr - 0.8) < 0.05

    def test_feature_moments(self):
        s = SyntheticStream(IID_GAUSSIAN_LINEAR, d=2, m=10_000, seed=2)
        X = generate(s).X
        assert np.all(np.abs(X.mean(axis=0)) < 3 / np.sqrt(10_000) * 1.5)
        assert np.all(np.abs(X.var(axis=0) - 1) < 0.06)


class TestConditionalRisk:
    def test_perfect_model_zero_noise(self):
        s = SyntheticStream(IID_GAUSSIAN_LINEAR, d=3, m=10, noise=0.0, seed=3)
        est, se = conditional_risk(true_weights(s), LossSpec(SQUARED), s,
                                   n_mc=2000, rng=run_rng(0))
        assert est == pytest.approx(0.0, abs=1e-12)

    def test_hinge_zero_predictor(self):
        s = SyntheticStream(IID_CLASSIFICATION_MARGIN, d=2, m=10, noise=0.1)
        est, _ = conditional_risk(np.zeros(2), LossSpec(HINGE), s,
                                  n_mc=500, rng=run_rng(1))
        assert est == pytest.approx(1.0, abs=1e-12)

    def test_analytic_iid_risk(self):
        # unclipped squared risk of h: ||h - w*||^2 + noise^2
        s = SyntheticStream(IID_GAUSSIAN_LINEAR, d=3, m=10, noise=0.5, seed=4)
        w_star = true_weights(s)
        h = w_star + np.array([0.3, -0.2, 0.1])
        oracle = float(np.sum((h - w_star) ** 2)) + 0.25
        est, se = conditional_risk(h, LossSpec(SQUARED, 1e9), s,
                                   n_mc=60_000, rng=run_rng(2))
        assert abs(est - oracle) < 3 * se

    def test_markov_conditioning_matters(self):
        s = SyntheticStream(MARKOV_AR1, d=1, m=10, rho=0.9, noise=0.1, seed=5)
        h = np.array([0.0])
        a, _ = conditional_risk(h, LossSpec(SQUARED, 1e9), s,
                                prev_x=np.array([0.0]), n_mc=4000, rng=run_rng(3))
        b, _ = conditional_risk(h, LossSpec(SQUARED, 1e9), s,
                                prev_x=np.array([10.0]), n_mc=4000, rng=run_rng(3))
        # with h=0 the risk equals E[y^2], larger when |x| center is larger
        assert b > a

    def test_sample_conditional_shapes(self):
        s = SyntheticStream(MARKOV_AR1, d=2, m=10)
        X, y = sample_conditional(s, np.zeros(2), 7, run_rng(4))
        assert X.shape == (7, 2)
        assert y.shape == (7,)
