#!/usr/bin/env python3
import numpy as np
import pytest

from burstyrelay.errors import DimensionError, GenericityError
from burstyrelay.field import (
    Matrix,
    Solution,
    Verdict,
    hstack,
    inverse,
    is_full_rank,
    matvec,
    null_space_basis,
    random_matrix_with_property,
    rank,
    rank_at_least,
    solve,
    stack,
)

P = 7


def test_rank_and_inverse() -> None:
    A = Matrix.from_rows([[1, 2], [3, 4]], P)
    assert rank(A) == 2
    assert is_full_rank(A)
    assert A @ inverse(A) == Matrix.identity(2, P)


def test_singular_matrix_has_no_inverse() -> None:
    A = Matrix.from_rows([[1, 2], [2, 4]], P)
    assert rank(A) == 1
    with pytest.raises(ZeroDivisionError):
        inverse(A)


def test_null_space_is_normalized() -> None:
    assert null_space_basis(Matrix.from_rows([[1, 1]], P)) == [[1, 6]]


def test_null_space_vectors_are_annihilated() -> None:
    A = Matrix.from_rows([[1, 2, 3, 4], [0, 1, 5, 2]], P)
    basis = null_space_basis(A)
    assert len(basis) == 2
    for vector in basis:
        assert A.apply(vector) == [0, 0]


def test_null_space_of_zero_matrix_is_everything() -> None:
    basis = null_space_basis(Matrix.zeros(2, 3, P))
    assert basis == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]


def test_solve_verdicts() -> None:
    A = Matrix.from_rows([[2, 1], [1, 1]], P)
    solution = solve(A, [3, 2])
    assert solution.verdict is Verdict.UNIQUE
    assert solution.x == (1, 1)

    singular = Matrix.from_rows([[1, 1], [1, 1]], P)
    assert solve(singular, [1, 2]).verdict is Verdict.NO_SOLUTION
    assert solve(singular, [1, 1]).verdict is Verdict.UNDERDETERMINED


def test_shape_mismatches() -> None:
    A = Matrix.from_rows([[1, 2]], P)
    with pytest.raises(DimensionError):
        A @ A
    with pytest.raises(DimensionError):
        solve(A, [1, 2])
    with pytest.raises(DimensionError):
        matvec(A.entries, [1], P)


def test_stacking() -> None:
    A = Matrix.from_rows([[1, 2]], P)
    B = Matrix.from_rows([[3, 4]], P)
    assert stack([A, B]) == Matrix.from_rows([[1, 2], [3, 4]], P)
    assert hstack([A, B]) == Matrix.from_rows([[1, 2, 3, 4]], P)


def test_empty_shapes_survive_transpose() -> None:
    empty = Matrix.zeros(0, 3, P)
    assert empty.transpose().rows == 3
    assert empty.transpose().cols == 0
    assert rank(empty) == 0


def test_rejection_sampling() -> None:
    rng = np.random.default_rng(0)
    A = random_matrix_with_property(3, 2, rank_at_least(2), rng, P)
    assert rank(A) == 2
    with pytest.raises(GenericityError, match="genericity failure"):
        random_matrix_with_property(2, 2, lambda _: False, rng, P, attempts=3)


def test_rejection_sampling_keeps_empty_shapes() -> None:
    A = random_matrix_with_property(0, 4, lambda _: True, np.random.default_rng(1), P)
    assert (A.rows, A.cols) == (0, 4)


def test_large_default_prime() -> None:
    rng = np.random.default_rng(5)
    A = random_matrix_with_property(3, 3, is_full_rank, rng)
    assert A @ inverse(A) == Matrix.identity(3, A.prime)


def test_rank_is_transpose_invariant() -> None:
    rng = np.random.default_rng(11)
    for rows, cols in [(2, 5), (4, 3), (3, 3), (1, 6)]:
        A = Matrix.from_rows(rng.integers(0, P, size=(rows, cols)).tolist(), P)
        assert rank(A) == rank(A.transpose())


def test_solve_recovers_a_planted_solution() -> None:
    assert solve(Matrix.from_rows([[2]], P), [3]) == Solution(Verdict.UNIQUE, (5,))
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        A = random_matrix_with_property(n, n, is_full_rank, rng, P)
        x = rng.integers(0, P, size=n).tolist()
        assert solve(A, A.apply(x)).x == tuple(x)


def test_null_space_basis_is_independent() -> None:
    rng = np.random.default_rng(8)
    for rows, cols in [(1, 4), (2, 5), (3, 6)]:
        A = Matrix.from_rows(rng.integers(0, P, size=(rows, cols)).tolist(), P)
        basis = null_space_basis(A)
        assert len(basis) == cols - rank(A)
        assert rank(Matrix.from_rows(basis, P)) == len(basis)
