"""Numeric bound evaluators.

Frozen oracle values were computed independently with mpmath-style
high-precision arithmetic of the closed formulas.
"""

import math

import numpy as np
import pytest

from onlinepb.pac_bounds import (
    disintegrated_penalty,
    disintegrated_rhs,
    lambda_grid_select,
    main_bound_rhs,
    naive_bound_rhs,
    opb_test_rhs,
    opb_train_rhs,
    optimal_lambda_test,
)


class TestMainBound:
    def test_unit_example(self):
        # empirical 0, no KL, lam=m=K=1, delta=1/e: 0.5 + 1 = 1.5
        rep = main_bound_rhs(0.0, [], 1.0, 1, 1.0, math.exp(-1))
        assert rep.total == pytest.approx(1.5, abs=1e-12)

    def test_confidence_vanishes_as_delta_to_one(self):
        rep = main_bound_rhs(0.0, [0.0], 1.0, 1, 1.0, 1 - 1e-12)
        assert rep.confidence == pytest.approx(0.0, abs=1e-9)

    def test_lambda_homogeneity(self):
        kl = [0.3, 0.7]
        a = main_bound_rhs(0.0, kl, 0.5, 10, 2.0, 0.1)
        b = main_bound_rhs(0.0, kl, 1.0, 10, 2.0, 0.1)
        assert b.rate == pytest.approx(2 * a.rate)
        assert b.divergence == pytest.approx(a.divergence / 2)
        assert b.confidence == pytest.approx(a.confidence / 2)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            main_bound_rhs(0.0, [], 0.0, 1, 1.0, 0.5)
        with pytest.raises(ValueError):
            main_bound_rhs(0.0, [], 1.0, 0, 1.0, 0.5)
        with pytest.raises(ValueError):
            main_bound_rhs(0.0, [], 1.0, 1, 1.0, 1.5)


class TestTrainTestBounds:
    def test_train_equals_main(self):
        args = (2.5, [0.1, 0.2], 0.3, 7, 4.0, 0.05)
        assert opb_train_rhs(*args).total == main_bound_rhs(*args).total

    def test_zero_kl_train_equals_test(self):
        a = opb_train_rhs(1.0, [0.0] * 5, 0.2, 5, 1.0, 0.1).total
        b = opb_test_rhs(1.0, 0.2, 5, 1.0, 0.1).total
        assert a == pytest.approx(b)

    def test_penalty_at_optimal_lambda(self):
        # sqrt(2 * 100 * ln 20) = 24.477552...
        lam = optimal_lambda_test(100, 1.0, 0.05)
        rep = opb_test_rhs(0.0, lam, 100, 1.0, 0.05)
        oracle = math.sqrt(2 * 100 * math.log(20))
        assert rep.total == pytest.approx(oracle, abs=1e-10)
        assert oracle == pytest.approx(24.48, abs=0.01)

    def test_empirical_passthrough(self):
        rep = opb_test_rhs(3.25, 0.1, 10, 1.0, 0.05)
        assert rep.empirical == 3.25


class TestOptimalLambda:
    def test_value(self):
        # sqrt(2 ln 20 / 100) = 0.2447755...
        lam = optimal_lambda_test(100, 1.0, 0.05)
        assert lam == pytest.approx(math.sqrt(2 * math.log(20) / 100), abs=1e-15)
        assert lam == pytest.approx(0.24479, abs=1e-4)

    def test_m_scaling(self):
        assert optimal_lambda_test(400, 1.0, 0.05) == pytest.approx(
            optimal_lambda_test(100, 1.0, 0.05) / 2)

    def test_terms_balance(self):
        m, K, delta = 57, 3.0, 0.07
        lam = optimal_lambda_test(m, K, delta)
        assert lam * m * K**2 / 2 == pytest.approx(
            math.log(1 / delta) / lam, abs=1e-12)


class TestDisintegratedPenalties:
    def test_train_pointwise_unit(self):
        val = disintegrated_penalty("train_pointwise", 1.0, 1, 1.0, math.exp(-1))
        assert val == pytest.approx(1.5, abs=1e-12)

    def test_test_renyi_unit(self):
        val = disintegrated_penalty("test_renyi", 1.0, 1, 1.0, math.exp(-1))
        assert val == pytest.approx(3.0, abs=1e-12)

    def test_train_renyi_formula(self):
        lam, m, K, delta = 0.3, 20, 2.0, 0.05
        val = disintegrated_penalty("train_renyi", lam, m, K, delta)
        assert val == pytest.approx(
            lam * m * K**2 + 1.5 * math.log(1 / delta) / lam, abs=1e-12)

    def test_train_renyi_proof_constant_flag(self):
        lam, m, K, delta = 0.3, 20, 2.0, 0.05
        val = disintegrated_penalty("train_renyi", lam, m, K, delta,
                                    renyi_proof_constant=True)
        assert val == pytest.approx(
            lam * m * K**2 + 1.5 * math.log(2 / delta) / lam, abs=1e-12)

    def test_train_equals_test_pointwise(self):
        for lam, m, K, delta in [(0.1, 5, 1.0, 0.05), (2.0, 300, 7.0, 0.4)]:
            assert disintegrated_penalty("train_pointwise", lam, m, K, delta) == \
                disintegrated_penalty("test_pointwise", lam, m, K, delta)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            disintegrated_penalty("nope", 1.0, 1, 1.0, 0.5)

    def test_rhs_assembly(self):
        rep = disintegrated_rhs(2.0, 0.5, "train_pointwise", 1.0, 1, 1.0,
                                math.exp(-1))
        assert rep.total == pytest.approx(2.0 + 0.5 + 1.5, abs=1e-12)


class TestNaiveBound:
    def test_m1_coincides_with_main(self):
        a = naive_bound_rhs(0.5, [0.2], 0.7, 1, 2.0, 0.1).total
        b = main_bound_rhs(0.5, [0.2], 0.7, 1, 2.0, 0.1).total
        assert a == pytest.approx(b, abs=1e-12)

    def test_frozen_value(self):
        # m=100, delta=0.05, lam=K=1, no KL, empirical 0:
        # 100/2 + 100 ln(100/0.05) = 50 + 100 ln 2000 = 810.0902...
        rep = naive_bound_rhs(0.0, [], 1.0, 100, 1.0, 0.05)
        oracle = 50.0 + 100.0 * math.log(2000.0)
        assert rep.total == pytest.approx(oracle, abs=1e-10)
        assert oracle == pytest.approx(810.0902, abs=1e-4)

    def test_dominates_main(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = int(rng.integers(1, 500))
            lam = float(rng.uniform(0.01, 5))
            K = float(rng.uniform(0.1, 10))
            delta = float(rng.uniform(0.01, 0.99))
            kl = list(rng.uniform(0, 2, size=3))
            assert naive_bound_rhs(1.0, kl, lam, m, K, delta).total >= \
                main_bound_rhs(1.0, kl, lam, m, K, delta).total - 1e-12


class TestLambdaGridSelect:
    def test_singleton(self):
        lam, rep = lambda_grid_select([0.3], 10, 1.0, 0.05, lambda l: 1.0)
        assert lam == 0.3
        assert rep.delta == pytest.approx(0.05)

    def test_prefers_optimal(self):
        m, K, delta = 100, 1.0, 0.05
        star = optimal_lambda_test(m, K, delta)
        lam, _ = lambda_grid_select([star, 10 * star], m, K, delta, lambda l: 5.0)
        assert lam == star

    def test_union_bound_confidence(self):
        grid = list(np.linspace(0.05, 0.5, 10))
        lam, rep = lambda_grid_select(grid, 50, 1.0, 0.05, lambda l: 0.0)
        assert rep.confidence == pytest.approx(math.log(10 / 0.05) / lam)

    def test_tie_breaks_small(self):
        # symmetric penalties around lam*: make both grid points equal
        m, K, delta = 100, 1.0, 0.25
        star = optimal_lambda_test(m, K, delta / 2)  # at delta/|grid|
        g = [star / 2, star * 2]  # equal penalties by AM symmetry of a+1/a
        lam, _ = lambda_grid_select(g, m, K, delta, lambda l: 0.0)
        assert lam == g[0]

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            lambda_grid_select([], 10, 1.0, 0.05, lambda l: 0.0)
