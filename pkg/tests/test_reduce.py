import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from boolfact.boolmat import BooleanMatrix, Factorization, approximation_error, boolean_product
from boolfact.reduce import WeightedInstance, expand, reduce
from boolfact.solve import brute_force

from conftest import naive_optimum


def matrices(max_side=6):
    shape = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shape.flatmap(lambda s: arrays(np.uint8, s, elements=st.integers(0, 1)))


def test_zero_and_duplicate_rows():
    W = reduce(BooleanMatrix([[1, 0], [1, 0], [0, 0]]))
    assert W.matrix.tolist() == [[1]]
    assert W.alpha.tolist() == [2] and W.beta.tolist() == [1]
    assert W.row_map == (0, 0, None)
    assert W.col_map == (0, None)


def test_distinct_matrix_is_fixed_point(example_matrix):
    W = reduce(example_matrix)
    assert W.matrix == example_matrix
    assert W.alpha.tolist() == [1, 1, 1] and W.beta.tolist() == [1, 1, 1]


def test_all_ones_collapses_both_ways():
    W = reduce(BooleanMatrix.ones(2, 2))
    assert W.matrix.tolist() == [[1]]
    assert W.alpha.tolist() == [2] and W.beta.tolist() == [2]


def test_all_zero_is_empty():
    W = reduce(BooleanMatrix.zeros(3, 4))
    assert W.is_empty and W.shape == (0, 0)
    F = expand(W, None, rank=2)
    assert F.C == BooleanMatrix.zeros(3, 2) and F.R == BooleanMatrix.zeros(2, 4)
    with pytest.raises(ValueError):
        expand(W, None)


def test_representative_is_smallest_index():
    X = BooleanMatrix([[0, 1], [1, 1], [0, 1], [1, 1]])
    W = reduce(X)
    assert W.row_map == (0, 1, 0, 1)
    assert W.matrix.tolist() == [[0, 1], [1, 1]]


def test_expand_copies_rows_and_zero_fills():
    X = BooleanMatrix([[1, 0, 1], [0, 0, 0], [1, 0, 1]])
    W = reduce(X)
    F_r = Factorization(BooleanMatrix([[1]]), BooleanMatrix([[1]]))
    F = expand(W, F_r)
    assert F.C.tolist() == [[1], [0], [1]]
    assert F.R.tolist() == [[1, 0, 1]]


def test_expand_dimension_mismatch():
    W = reduce(BooleanMatrix([[1, 0], [0, 1]]))
    with pytest.raises(ValueError):
        expand(W, Factorization(BooleanMatrix([[1]]), BooleanMatrix([[1]])))


def test_pipeline_zero_error():
    X = BooleanMatrix([[1, 0], [1, 0], [0, 0]])
    W = reduce(X)
    res = brute_force(W, 1)
    F = expand(W, res.incumbent)
    assert approximation_error(X, boolean_product(F.C, F.R)) == 0


@settings(max_examples=200)
@given(matrices(), st.integers(1, 3), st.data())
def test_error_preserved_through_expand(A, k, data):
    X = BooleanMatrix(A)
    W = reduce(X)
    if W.is_empty:
        return
    nr, mr = W.shape
    C = data.draw(arrays(np.uint8, (nr, k), elements=st.integers(0, 1)))
    R = data.draw(arrays(np.uint8, (k, mr), elements=st.integers(0, 1)))
    F_r = Factorization(BooleanMatrix(C), BooleanMatrix(R))
    reduced_err = approximation_error(W.matrix, boolean_product(F_r.C, F_r.R), W.alpha, W.beta)
    F = expand(W, F_r)
    assert approximation_error(X, boolean_product(F.C, F.R)) == reduced_err


@settings(max_examples=200)
@given(matrices(7))
def test_invariants_and_idempotence(A):
    X = BooleanMatrix(A)
    W = reduce(X)
    if W.is_empty:
        assert not A.any()
        return
    R = W.matrix.array
    assert R.any(axis=1).all() and R.any(axis=0).all()
    assert len({r.tobytes() for r in R}) == R.shape[0]
    assert len({c.tobytes() for c in R.T}) == R.shape[1]
    assert W.alpha.sum() == int(A.any(axis=1).sum())
    assert W.beta.sum() == int(A.any(axis=0).sum())
    for i, rep in enumerate(W.row_map):
        if rep is None:
            assert not A[i].any()
        else:
            # the row survives as its representative, restricted to kept columns
            kept = [j for j, c in enumerate(W.col_map) if c is not None]
            firsts = [W.col_map.index(c) for c in range(W.shape[1])]
            assert A[i, firsts].tolist() == R[rep].tolist()
            assert A[i, kept].any()
    again = reduce(W.matrix)
    assert again.matrix == W.matrix
    assert again.alpha.tolist() == [1] * W.shape[0]
    assert again.beta.tolist() == [1] * W.shape[1]


def test_optimum_preserved_small():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n, m = rng.integers(2, 5, size=2)
        A = rng.integers(0, 2, size=(n, m))
        A[rng.integers(n)] = A[0]  # plant a duplicate row
        A[:, rng.integers(m)] = 0  # and a zero column
        X = BooleanMatrix(A) if A.any() else BooleanMatrix.ones(n, m)
        W = reduce(X)
        for k in (1, 2):
            raw = naive_optimum(X.array, k) if n * k + k * m <= 14 else brute_force(WeightedInstance.unreduced(X), k).objective
            red = 0 if W.is_empty else brute_force(W, k).objective
            assert red == raw
