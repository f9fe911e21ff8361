import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughpaths.errors import ShapeError
from roughpaths.tensor import anti, euclidean_norm, frobenius_norm, outer, sym

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def vec(dim):
    return st.lists(finite, min_size=dim, max_size=dim).map(np.array)


def test_outer_zero_vector():
    assert np.array_equal(outer([0.0, 0.0], [3.0, 4.0]), np.zeros((2, 2)))


def test_outer_direct_formula():
    np.testing.assert_array_equal(outer([1.0, 2.0], [3.0, 4.0]), [[3.0, 4.0], [6.0, 8.0]])


@given(vec(3), vec(3))
def test_outer_transpose_symmetry(v, w):
    np.testing.assert_array_equal(outer(v, w), outer(w, v).T)


def test_outer_dimension_mismatch():
    with pytest.raises(ShapeError):
        outer([1.0, 2.0], [1.0, 2.0, 3.0])


def test_sym_of_symmetric_matrix():
    M = np.array([[1.0, 2.0], [2.0, 5.0]])
    np.testing.assert_array_equal(sym(M), M)
    np.testing.assert_array_equal(anti(M), np.zeros((2, 2)))


def test_anti_of_antisymmetric_matrix():
    M = np.array([[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_array_equal(sym(M), np.zeros((2, 2)))
    np.testing.assert_array_equal(anti(M), M)


def test_decomposition_identity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = rng.standard_normal((4, 4))
        np.testing.assert_allclose(sym(M) + anti(M), M, atol=1e-14)


def test_sym_anti_are_projections():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((5, 5))
    np.testing.assert_allclose(sym(sym(M)), sym(M), atol=1e-14)
    np.testing.assert_allclose(anti(anti(M)), anti(M), atol=1e-14)
    np.testing.assert_allclose(sym(anti(M)), np.zeros((5, 5)), atol=1e-14)


def test_norms_zero_and_pythagoras():
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    assert frobenius_norm([[3.0, 4.0], [0.0, 0.0]]) == 5.0
    assert euclidean_norm(np.zeros(4)) == 0.0


def test_rank_one_norm_identity():
    rng = np.random.default_rng(2)
    for _ in range(20):
        v = rng.standard_normal(3)
        w = rng.standard_normal(3)
        np.testing.assert_allclose(
            frobenius_norm(outer(v, w)), euclidean_norm(v) * euclidean_norm(w), rtol=1e-13
        )


@settings(max_examples=50)
@given(vec(2), vec(2), vec(2), finite, finite)
def test_outer_bilinearity(v, u, w, a, b):
    lhs = outer(a * v + b * u, w)
    rhs = a * outer(v, w) + b * outer(u, w)
    scale = max(1.0, np.max(np.abs(lhs)))
    np.testing.assert_allclose(lhs, rhs, atol=1e-13 * scale)


def test_sym_requires_square():
    with pytest.raises(ShapeError):
        sym(np.ones((2, 3)))
