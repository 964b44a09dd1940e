import math

import numpy as np
import pytest

from kaf import KernelSpec, expansion_inner_product, gram, kernel_eval, kernel_matrix
from kaf.exceptions import DimensionMismatchError, NonFiniteInputError, ValidationError
from kaf.oracle import polynomial_feature_map

GAUSS = KernelSpec("gaussian", sigma=1.0)


class TestEval:
    def test_gaussian_identical_inputs(self):
        assert kernel_eval(GAUSS, [0.3, -2.0], [0.3, -2.0]) == 1.0

    def test_gaussian_unit_distance(self):
        assert kernel_eval(GAUSS, [0.0], [1.0]) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_gaussian_sigma_scales_width(self):
        # width enters as sigma^2 (no factor of 2)
        k = kernel_eval(KernelSpec("gaussian", sigma=2.0), [0.0], [1.0])
        assert k == pytest.approx(math.exp(-0.25), rel=1e-15)

    def test_polynomial(self):
        assert kernel_eval(KernelSpec("polynomial", degree=2), [1.0, 0.0], [1.0, 1.0]) == 4.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kernel_eval(GAUSS, [0.0], [1.0, 2.0])

    def test_non_finite_input(self):
        with pytest.raises(NonFiniteInputError):
            kernel_eval(GAUSS, [np.nan], [1.0])
        with pytest.raises(NonFiniteInputError):
            kernel_eval(GAUSS, [0.0], [np.inf])

    def test_symmetry_exact(self):
        rng = np.random.default_rng(0)
        for spec in (GAUSS, KernelSpec("polynomial", degree=3)):
            for _ in range(50):
                u = rng.standard_normal(4)
                v = rng.standard_normal(4)
                assert kernel_eval(spec, u, v) == kernel_eval(spec, v, u)

    def test_gaussian_range(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            u = rng.standard_normal(3)
            v = rng.standard_normal(3)
            k = kernel_eval(GAUSS, u, v)
            assert 0.0 < k < 1.0
            assert kernel_eval(GAUSS, u, u) == 1.0


class TestKernelTrick:
    @pytest.mark.parametrize("degree", [1, 2])
    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_polynomial_matches_explicit_features(self, degree, dim):
        """(u.v + 1)^p equals the dot product of exact monomial feature vectors."""
        rng = np.random.default_rng(degree * 10 + dim)
        spec = KernelSpec("polynomial", degree=degree)
        for _ in range(25):
            u = rng.uniform(-2, 2, dim)
            v = rng.uniform(-2, 2, dim)
            phi = polynomial_feature_map(np.vstack([u, v]), degree)
            assert kernel_eval(spec, u, v) == pytest.approx(phi[0] @ phi[1], abs=1e-12)


class TestGram:
    def test_single_point_gaussian(self):
        np.testing.assert_allclose(gram(GAUSS, [[0.7]]), [[1.0]])

    def test_two_points_gaussian(self):
        e1 = math.exp(-1.0)
        np.testing.assert_allclose(gram(GAUSS, [[0.0], [1.0]]),
                                   [[1.0, e1], [e1, 1.0]], rtol=1e-15)

    def test_polynomial_values(self):
        # verified by brute-force pairwise evaluation
        spec = KernelSpec("polynomial", degree=1)
        pts = [[1.0], [3.0]]
        expected = [[kernel_eval(spec, a, b) for b in pts] for a in pts]
        assert expected == [[2.0, 4.0], [4.0, 10.0]]
        np.testing.assert_array_equal(gram(spec, pts), expected)

    def test_symmetric_exactly(self):
        rng = np.random.default_rng(2)
        pts = rng.standard_normal((20, 3))
        G = gram(GAUSS, pts)
        assert np.array_equal(G, G.T)

    def test_psd_random_sets(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(2, 51))
            dim = int(rng.integers(1, 5))
            pts = rng.uniform(-2, 2, (n, dim))
            G = gram(KernelSpec("gaussian", sigma=float(rng.uniform(0.5, 2))), pts)
            assert np.linalg.eigvalsh(G)[0] >= -1e-10 * n

    def test_matches_pairwise_eval(self):
        rng = np.random.default_rng(4)
        pts = rng.standard_normal((6, 2))
        for spec in (GAUSS, KernelSpec("polynomial", degree=2)):
            G = gram(spec, pts)
            for i in range(6):
                for j in range(6):
                    assert G[i, j] == pytest.approx(kernel_eval(spec, pts[i], pts[j]),
                                                    abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kernel_matrix(GAUSS, [[0.0, 1.0]], [[0.0]])

    def test_empty_rejected(self):
        with pytest.raises(DimensionMismatchError):
            gram(GAUSS, np.empty((0, 2)))


class TestExpansionInnerProduct:
    def test_single_identical_term(self):
        h = ([1.0], [[0.0]])
        assert expansion_inner_product(GAUSS, h, h) == 1.0

    def test_one_term_bilinearity(self):
        got = expansion_inner_product(GAUSS, ([2.0], [[0.0]]), ([1.0], [[1.0]]))
        assert got == pytest.approx(2.0 * math.exp(-1.0), rel=1e-15)

    def test_matches_double_loop(self):
        rng = np.random.default_rng(5)
        a, ca = rng.standard_normal(3), rng.standard_normal((3, 2))
        b, cb = rng.standard_normal(4), rng.standard_normal((4, 2))
        brute = sum(a[i] * b[j] * kernel_eval(GAUSS, ca[i], cb[j])
                    for i in range(3) for j in range(4))
        assert expansion_inner_product(GAUSS, (a, ca), (b, cb)) == pytest.approx(
            brute, abs=1e-12)

    def test_symmetry_scaling_distributivity(self):
        rng = np.random.default_rng(6)
        a, ca = rng.standard_normal(3), rng.standard_normal((3, 2))
        b, cb = rng.standard_normal(2), rng.standard_normal((2, 2))
        g, cg = rng.standard_normal(4), rng.standard_normal((4, 2))
        ip = lambda x, y: expansion_inner_product(GAUSS, x, y)
        assert ip((a, ca), (b, cb)) == pytest.approx(ip((b, cb), (a, ca)), abs=1e-12)
        # <c f + d g, h> = c <f, h> + d <g, h>, combining f and g center-wise
        c, dd = 1.7, -0.4
        comb = (np.concatenate([c * a, dd * b]), np.vstack([ca, cb]))
        lhs = ip(comb, (g, cg))
        rhs = c * ip((a, ca), (g, cg)) + dd * ip((b, cb), (g, cg))
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_squared_norm_nonnegative(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            a = rng.standard_normal(5)
            ca = rng.standard_normal((5, 3))
            assert expansion_inner_product(GAUSS, (a, ca), (a, ca)) >= -1e-12

    def test_count_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            expansion_inner_product(GAUSS, ([1.0, 2.0], [[0.0]]), ([1.0], [[1.0]]))


class TestKernelSpec:
    def test_json_round_trip(self):
        for spec in (KernelSpec("gaussian", sigma=0.5),
                     KernelSpec("polynomial", degree=3)):
            assert KernelSpec.from_json(spec.to_json()) == spec

    def test_json_schema_keys(self):
        j = KernelSpec("gaussian", sigma=2.0).to_json()
        assert set(j) == {"family", "sigma", "degree"}

    def test_invalid_family(self):
        with pytest.raises(ValidationError):
            KernelSpec("laplacian")

    def test_invalid_sigma(self):
        with pytest.raises(ValidationError):
            KernelSpec("gaussian", sigma=0.0)
        with pytest.raises(ValidationError):
            KernelSpec("gaussian", sigma=float("nan"))

    def test_invalid_degree(self):
        with pytest.raises(ValidationError):
            KernelSpec("polynomial", degree=0)
