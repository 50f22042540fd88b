import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from advreg.norms import (
    INF,
    DegenerateDirectionError,
    as_norm_order,
    dual_order,
    holder_extremal_direction,
    norm_sandwich,
    vector_norm,
)

ORDERS = [1.0, 1.5, 2.0, 3.0, INF]


class TestDualOrder:
    def test_boundary_pairs_are_exact(self):
        assert dual_order(1) == INF
        assert dual_order(INF) == 1.0
        assert dual_order(2) == 2.0

    def test_interior_example(self):
        assert_allclose(dual_order(1.5), 3.0, rtol=0, atol=0)

    def test_involution(self):
        for p in [1.0, 1.1, 1.5, 2.0, 3.0, 10.0, INF]:
            assert_allclose(dual_order(dual_order(p)), p, rtol=1e-12)

    def test_rejects_orders_below_one(self):
        with pytest.raises(ValueError):
            dual_order(0.8)
        with pytest.raises(ValueError):
            dual_order(-2)

    def test_string_inf_accepted(self):
        assert as_norm_order("inf") == INF
        assert dual_order("inf") == 1.0


class TestVectorNorm:
    def test_matches_numpy(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            v = rng.standard_normal(rng.integers(1, 12))
            for p in ORDERS:
                assert_allclose(vector_norm(v, p), np.linalg.norm(v, ord=p), rtol=1e-12)

    def test_rejects_invalid_order(self):
        with pytest.raises(ValueError):
            vector_norm(np.ones(3), 0.5)


class TestExtremalDirection:
    def test_sign_pattern_for_inf(self):
        d = holder_extremal_direction(np.array([3.0, -4.0]), INF)
        assert_allclose(d, [1.0, -1.0])

    def test_normalized_vector_for_p2(self):
        d = holder_extremal_direction(np.array([3.0, -4.0]), 2)
        assert_allclose(d, [0.6, -0.8])

    def test_tie_splitting_for_p1(self):
        d = holder_extremal_direction(np.array([2.0, -2.0, 1.0]), 1)
        assert_allclose(d, [0.5, -0.5, 0.0])

    def test_near_tie_within_tolerance_splits(self):
        b = np.array([1.0, 1.0 - 1e-13, 0.5])
        d = holder_extremal_direction(b, 1)
        assert_allclose(d[:2], [0.5, 0.5])

    def test_zero_vector_raises(self):
        with pytest.raises(DegenerateDirectionError):
            holder_extremal_direction(np.zeros(4), 2)

    def test_unit_norm_and_attained_value(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            beta = rng.standard_normal(rng.integers(1, 9))
            if not np.any(beta):
                continue
            for p in ORDERS:
                d = holder_extremal_direction(beta, p)
                assert abs(vector_norm(d, p) - 1.0) < 1e-12
                assert_allclose(d @ beta, vector_norm(beta, dual_order(p)), rtol=1e-10)

    def test_maximality_over_random_ball_points(self):
        # property check: no sampled direction in the unit lp ball beats the
        # extremal one (>= 1e3 pairs per order)
        rng = np.random.default_rng(23)
        for p in ORDERS:
            for _ in range(250):
                m = int(rng.integers(1, 8))
                beta = rng.standard_normal(m)
                if not np.any(beta):
                    continue
                best = holder_extremal_direction(beta, p) @ beta
                cand = rng.standard_normal((4, m))
                norms = np.array([vector_norm(c, p) for c in cand])
                cand = cand / norms[:, None] * rng.uniform(0, 1, size=(4, 1))
                assert np.all(cand @ beta <= best + 1e-9)


class TestNormSandwich:
    def test_holds_on_random_vectors(self):
        rng = np.random.default_rng(5)
        pairs = [(1.0, 2.0), (1.0, INF), (2.0, INF), (1.5, 3.0)]
        for _ in range(300):
            v = rng.standard_normal(rng.integers(1, 20))
            for p, q in pairs:
                res = norm_sandwich(v, p, q)
                assert res.holds
                assert res.lower <= res.upper

    def test_tightness_cases(self):
        ones = np.ones(7)
        res = norm_sandwich(ones, 1, 2)
        assert_allclose(res.upper, vector_norm(ones, 1), rtol=1e-12)
        basis = np.zeros(7)
        basis[3] = -2.0
        res = norm_sandwich(basis, 1, 2)
        assert_allclose(res.lower, vector_norm(basis, 1), rtol=1e-12)

    def test_requires_q_greater_than_p(self):
        with pytest.raises(ValueError):
            norm_sandwich(np.ones(3), 2, 2)
        with pytest.raises(ValueError):
            norm_sandwich(np.ones(3), INF, 1)
