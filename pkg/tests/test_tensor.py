import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mixmom.exceptions import ArgumentError
from mixmom.tensor import (
    KruskalFactors,
    as_tensor3,
    fold,
    frobenius_distance,
    khatri_rao,
    kruskal_to_dense,
    outer3,
    unfold,
)

# 2x2x2 tensor with a rank-2 decomposition that needs a negative entry
EXAMPLE_UNFOLD1 = np.array([[1, 3, 2, 2], [2, 2, 2, 2]], dtype=float)
EXAMPLE_A = np.array([[1, 1], [1, 0]], dtype=float)
EXAMPLE_B = np.array([[2, -1], [2, 1]], dtype=float)


def loop_outer(u, v, w):
    out = np.zeros((len(u), len(v), len(w)))
    for i, a in enumerate(u):
        for j, b in enumerate(v):
            for l, c in enumerate(w):
                out[i, j, l] = a * b * c
    return out


def loop_unfold(T, mode):
    """Column index of (i1,i2,i3): remaining modes with the earlier one fastest."""
    d = T.shape
    rest = [m for m in range(3) if m != mode - 1]
    M = np.zeros((d[mode - 1], d[rest[0]] * d[rest[1]]))
    for idx in np.ndindex(*d):
        col = idx[rest[0]] + d[rest[0]] * idx[rest[1]]
        M[idx[mode - 1], col] = T[idx]
    return M


def test_outer3_identity_case():
    e0 = np.array([1.0, 0.0])
    T = outer3(e0, e0, e0)
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 1
    assert np.array_equal(T, expected)


def test_outer3_direct_definition():
    T = outer3([1, 2], [3], [1, 1])
    assert T.shape == (2, 1, 2)
    assert T[0, 0, 0] == 3 and T[0, 0, 1] == 3
    assert T[1, 0, 0] == 6 and T[1, 0, 1] == 6


def test_outer3_norm(rng):
    u, v, w = rng.standard_normal(3), rng.standard_normal(4), rng.standard_normal(5)
    T = outer3(u, v, w)
    assert np.allclose(T, loop_outer(u, v, w))
    assert np.isclose(np.linalg.norm(T), np.linalg.norm(u) * np.linalg.norm(v) * np.linalg.norm(w))


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_unfold_matches_loop_oracle(rng, mode):
    T = rng.standard_normal((2, 3, 4))
    assert np.array_equal(unfold(T, mode), loop_unfold(T, mode))


def test_unfold_rank_one():
    u, v, w = np.array([1.0, 2.0]), np.array([3.0, 5.0, 7.0]), np.array([1.0, -1.0])
    T = outer3(u, v, w)
    assert np.allclose(unfold(T, 1), np.outer(u, np.kron(w, v)))
    assert np.allclose(unfold(T, 2), np.outer(v, np.kron(w, u)))
    assert np.allclose(unfold(T, 3), np.outer(w, np.kron(v, u)))


@pytest.mark.parametrize("mode", [0, 4, "1"])
def test_unfold_bad_mode(mode):
    with pytest.raises(ArgumentError):
        unfold(np.zeros((2, 2, 2)), mode)


@settings(max_examples=50, deadline=None)
@given(
    hnp.arrays(np.float64, hnp.array_shapes(min_dims=3, max_dims=3, max_side=5),
               elements=st.floats(-10, 10)),
    st.sampled_from([1, 2, 3]),
)
def test_fold_inverts_unfold(T, mode):
    assert np.array_equal(fold(unfold(T, mode), mode, T.shape), T)


def test_fold_example_tensor():
    T = fold(EXAMPLE_UNFOLD1, 1, (2, 2, 2))
    # column j + 2 l holds T[:, j, l]
    assert T[0, 0, 0] == 1 and T[0, 1, 0] == 3 and T[0, 0, 1] == 2 and T[0, 1, 1] == 2
    assert np.all(T[1] == 2)


def test_fold_scalar():
    T = fold([[4.5]], 2, (1, 1, 1))
    assert T.shape == (1, 1, 1) and T[0, 0, 0] == 4.5


def test_fold_shape_mismatch():
    with pytest.raises(ArgumentError):
        fold(np.zeros((2, 3)), 1, (2, 2, 2))


def test_khatri_rao_small():
    assert np.array_equal(khatri_rao([[1], [2]], [[3], [4]]).ravel(), [3, 4, 6, 8])


def test_khatri_rao_identity():
    I = np.eye(2)
    K = khatri_rao(I, I)
    assert np.array_equal(K[:, 0], np.kron([1, 0], [1, 0]))
    assert np.array_equal(K[:, 1], np.kron([0, 1], [0, 1]))


def test_khatri_rao_columnwise_kron(rng):
    X, Y = rng.standard_normal((3, 4)), rng.standard_normal((5, 4))
    K = khatri_rao(X, Y)
    for h in range(4):
        assert np.allclose(K[:, h], np.kron(X[:, h], Y[:, h]))


def test_khatri_rao_mismatch():
    with pytest.raises(ArgumentError):
        khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_unfolding_identity_with_khatri_rao(rng, mode):
    A, B, C = rng.random((3, 2)), rng.random((4, 2)), rng.random((5, 2))
    T = kruskal_to_dense(KruskalFactors(A, B, C))
    X, Y1, Y2 = {1: (A, C, B), 2: (B, C, A), 3: (C, B, A)}[mode]
    assert np.allclose(unfold(T, mode), X @ khatri_rao(Y1, Y2).T)


def test_kruskal_example_decomposition():
    F = KruskalFactors(EXAMPLE_A, EXAMPLE_B, EXAMPLE_A, weights=[1, 1])
    T = kruskal_to_dense(F)
    assert np.array_equal(unfold(T, 1), EXAMPLE_UNFOLD1)


def test_kruskal_rank_one_equals_outer(rng):
    u, v, w = rng.random(2), rng.random(3), rng.random(4)
    F = KruskalFactors(u[:, None], v[:, None], w[:, None], weights=[2.0])
    assert np.allclose(kruskal_to_dense(F), 2 * outer3(u, v, w))


def test_kruskal_factor_validation():
    with pytest.raises(ArgumentError):
        KruskalFactors(np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)))
    with pytest.raises(ArgumentError):
        KruskalFactors(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2)), weights=[1.0])


def test_frobenius_distance(rng):
    T = rng.standard_normal((2, 3, 4))
    assert frobenius_distance(T, T) == 0
    assert np.isclose(frobenius_distance(np.zeros((2, 2, 2)), np.ones((2, 2, 2))), np.sqrt(8))
    S = rng.standard_normal((2, 3, 4))
    assert np.isclose(frobenius_distance(T, S), np.sqrt(sum((T - S).ravel() ** 2)))
    with pytest.raises(ArgumentError):
        frobenius_distance(T, np.zeros((2, 2, 2)))


def test_as_tensor3_rejects():
    with pytest.raises(ArgumentError):
        as_tensor3(np.zeros((2, 2)))
    with pytest.raises(ArgumentError):
        as_tensor3(np.full((1, 1, 1), np.nan))
