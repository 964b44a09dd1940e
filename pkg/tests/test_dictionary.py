import math

import numpy as np
import pytest

from kaf import Dictionary, KernelSpec, gram
from kaf.dictionary import GROWTH_FLOOR
from kaf.exceptions import (
    DimensionMismatchError,
    NearSingularGrowthError,
    NumericalError,
    ValidationError,
)
from kaf.oracle import polynomial_feature_map

GAUSS = KernelSpec("gaussian", sigma=1.0)


def grown_dictionary(spec, points, delta):
    d = Dictionary(spec, points[0])
    for u in points[1:]:
        res = d.ald_test(u, delta)
        if res.admitted:
            d.grow(u, res)
    return d


class TestAldTest:
    def test_exact_self_representation(self):
        d = Dictionary(GAUSS, [0.5, -1.0])
        res = d.ald_test([0.5, -1.0], 0.0)
        np.testing.assert_allclose(res.a, [1.0])
        assert res.d2 == 0.0
        assert not res.admitted

    def test_gaussian_far_point(self):
        d = Dictionary(GAUSS, [0.0])
        res = d.ald_test([2.0], 0.1)
        e4 = math.exp(-4.0)
        np.testing.assert_allclose(res.h, [e4], rtol=1e-15)
        np.testing.assert_allclose(res.a, [e4], rtol=1e-15)
        assert res.d2 == pytest.approx(1.0 - math.exp(-8.0), rel=1e-12)
        assert res.admitted

    def test_polynomial_scalar_case(self):
        # poly degree 1 makes the feature space explicit: phi(u) = [1, u];
        # the residual can be cross-checked by 2-D least squares.
        spec = KernelSpec("polynomial", degree=1)
        d = Dictionary(spec, [1.0])
        res = d.ald_test([3.0], 0.0)
        np.testing.assert_allclose(res.h, [4.0])
        np.testing.assert_allclose(res.a, [2.0])
        assert res.d2 == pytest.approx(2.0, abs=1e-12)

        phi = polynomial_feature_map([[1.0], [3.0]], 1)
        coef, residual, *_ = np.linalg.lstsq(phi[:1].T, phi[1], rcond=None)
        assert coef[0] == pytest.approx(2.0, abs=1e-12)
        assert residual[0] == pytest.approx(res.d2, abs=1e-12)

    def test_member_yields_indicator(self):
        rng = np.random.default_rng(0)
        d = grown_dictionary(GAUSS, rng.uniform(-2, 2, (30, 2)), 0.01)
        for idx in range(d.size):
            res = d.ald_test(d.centers[idx], 0.0)
            assert res.d2 <= 1e-10
            ind = np.zeros(d.size)
            ind[idx] = 1.0
            np.testing.assert_allclose(res.a, ind, atol=1e-8)

    def test_residual_matches_feature_space_lstsq(self):
        rng = np.random.default_rng(1)
        for degree in (1, 2):
            spec = KernelSpec("polynomial", degree=degree)
            pts = rng.uniform(-1, 1, (5, 3))
            d = grown_dictionary(spec, pts, 1e-8)
            for _ in range(10):
                u = rng.uniform(-1, 1, 3)
                res = d.ald_test(u, 0.0)
                phi_c = polynomial_feature_map(d.centers, degree)
                phi_u = polynomial_feature_map(u[None, :], degree)[0]
                _, resid, rank, _ = np.linalg.lstsq(phi_c.T, phi_u, rcond=None)
                brute = resid[0] if resid.size else float(
                    np.linalg.norm(phi_c.T @ np.linalg.lstsq(phi_c.T, phi_u,
                                                             rcond=None)[0] - phi_u) ** 2)
                assert res.d2 == pytest.approx(brute, abs=1e-10)

    def test_does_not_mutate(self):
        d = Dictionary(GAUSS, [0.0])
        before = d.gram.copy()
        d.ald_test([2.0], 0.0)
        assert d.size == 1
        np.testing.assert_array_equal(d.gram, before)

    def test_dimension_mismatch(self):
        d = Dictionary(GAUSS, [0.0, 1.0])
        with pytest.raises(DimensionMismatchError):
            d.ald_test([0.0], 0.1)

    def test_negative_delta_rejected(self):
        d = Dictionary(GAUSS, [0.0])
        with pytest.raises(ValidationError):
            d.ald_test([1.0], -0.5)

    def test_non_finite_inverse_reports_condition_diagnostic(self):
        # white-box: a corrupted inverse must surface as a NumericalError
        # carrying the condition diagnostic, not as silent NaN propagation
        d = Dictionary(GAUSS, [0.0])
        d.gram_inv = np.array([[np.nan]])
        with pytest.raises(NumericalError, match="cond"):
            d.ald_test([1.0], 0.1)


class TestGrow:
    def test_two_point_gram(self):
        d = Dictionary(GAUSS, [0.0])
        res = d.ald_test([2.0], 0.5)
        d.grow([2.0], res)
        e4 = math.exp(-4.0)
        np.testing.assert_allclose(d.gram, [[1.0, e4], [e4, 1.0]], rtol=1e-15)
        resid = np.linalg.norm(d.gram @ d.gram_inv - np.eye(2), ord=np.inf)
        assert resid <= 1e-10

    def test_inverse_matches_dense_inversion_along_stream(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(-2, 2, (100, 2))
        d = Dictionary(GAUSS, pts[0])
        for u in pts[1:]:
            res = d.ald_test(u, 0.1)
            if res.admitted:
                d.grow(u, res)
                dense = np.linalg.inv(d.gram)
                assert np.abs(d.gram_inv - dense).max() <= 1e-8

    def test_gram_matches_recomputation(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-2, 2, (60, 3))
        d = grown_dictionary(GAUSS, pts, 0.05)
        assert d.size > 3
        np.testing.assert_allclose(d.gram, gram(GAUSS, d.centers), atol=1e-12)

    def test_infinite_delta_keeps_single_center(self):
        rng = np.random.default_rng(4)
        pts = rng.standard_normal((50, 2))
        d = grown_dictionary(GAUSS, pts, math.inf)
        assert d.size == 1

    def test_zero_delta_admits_every_distinct_point(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(-5, 5, (40, 2))
        d = grown_dictionary(GAUSS, pts, 0.0)
        assert d.size == 40

    def test_refuses_near_singular_extension(self):
        d = Dictionary(GAUSS, [0.0])
        res = d.ald_test([1e-7], 1e-15)
        assert res.admitted and res.d2 < GROWTH_FLOOR
        with pytest.raises(NearSingularGrowthError):
            d.grow([1e-7], res)
        assert d.size == 1  # untouched

    def test_rejected_result_refused(self):
        d = Dictionary(GAUSS, [0.0])
        res = d.ald_test([0.1], 10.0)
        assert not res.admitted
        with pytest.raises(ValidationError):
            d.grow([0.1], res)

    def test_stale_result_refused(self):
        d = Dictionary(GAUSS, [0.0])
        res = d.ald_test([2.0], 0.1)
        d.grow([2.0], res)
        with pytest.raises(ValidationError):
            d.grow([4.0], res)


class TestSnapshot:
    def test_round_trip_recompute(self):
        rng = np.random.default_rng(6)
        d = grown_dictionary(GAUSS, rng.uniform(-2, 2, (40, 2)), 0.05)
        d2 = Dictionary.from_snapshot(d.to_snapshot())
        np.testing.assert_array_equal(d2.centers, d.centers)
        np.testing.assert_allclose(d2.gram, d.gram, atol=1e-12)
        assert np.linalg.norm(d2.gram @ d2.gram_inv - np.eye(d2.size), np.inf) <= 1e-8

    def test_round_trip_stored_matrices(self):
        rng = np.random.default_rng(7)
        d = grown_dictionary(GAUSS, rng.uniform(-2, 2, (30, 2)), 0.05)
        snap = d.to_snapshot(store_matrices=True)
        d2 = Dictionary.from_snapshot(snap)
        np.testing.assert_array_equal(d2.gram, d.gram)
        np.testing.assert_array_equal(d2.gram_inv, d.gram_inv)

    def test_checksum_detects_tampering(self):
        d = grown_dictionary(GAUSS, [[0.0], [2.0]], 0.1)
        snap = d.to_snapshot()
        snap["centers"][0][0] += 1.0
        with pytest.raises(ValidationError):
            Dictionary.from_snapshot(snap)
