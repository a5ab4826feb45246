#!/usr/bin/env python3
"""
Exact linear algebra over a prime field.

Matrices are immutable grids of Python integers in ``[0, prime)``; elimination
is delegated to ``galois`` field arrays. The per-slot helpers at the bottom
(``matvec``, ``inverse_mod``) stay in plain integers since they run millions of
times per simulation.
"""
import enum
import functools
from dataclasses import dataclass

import galois
import numpy as np
from beartype import beartype
from loguru import logger

from burstyrelay.aliases import List, Tuple, Optional, Callable, Sequence, Vector
from burstyrelay.errors import DimensionError, GenericityError

DEFAULT_PRIME = 2147483647
MAX_ATTEMPTS = 1000


@functools.lru_cache(maxsize=None)
def get_field(prime: int) -> type:
    """The ``galois`` field class for GF(prime), built once per prime."""
    return galois.GF(prime)


@dataclass(frozen=True)
class Matrix:
    rows: int
    cols: int
    entries: Tuple[Tuple[int, ...], ...]
    prime: int = DEFAULT_PRIME

    def __post_init__(self) -> None:
        assert len(self.entries) == self.rows
        for row in self.entries:
            assert len(row) == self.cols
            assert all(0 <= x < self.prime for x in row), "entries must be reduced"

    @classmethod
    @beartype
    def from_rows(cls, rows: Sequence[Sequence[int]], prime: int = DEFAULT_PRIME) -> "Matrix":
        grid = tuple(tuple(int(x) % prime for x in row) for row in rows)
        n_rows = len(grid)
        n_cols = len(grid[0]) if n_rows > 0 else 0
        return cls(n_rows, n_cols, grid, prime)

    @classmethod
    @beartype
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int, prime: int = DEFAULT_PRIME) -> "Matrix":
        if len(columns) == 0:
            return cls(rows, 0, tuple(() for _ in range(rows)), prime)
        return cls.from_rows([list(r) for r in zip(*columns)], prime)

    @classmethod
    @beartype
    def zeros(cls, rows: int, cols: int, prime: int = DEFAULT_PRIME) -> "Matrix":
        return cls(rows, cols, tuple(tuple(0 for _ in range(cols)) for _ in range(rows)), prime)

    @classmethod
    @beartype
    def identity(cls, n: int, prime: int = DEFAULT_PRIME) -> "Matrix":
        return cls.from_rows([[int(i == j) for j in range(n)] for i in range(n)], prime)

    def field_array(self) -> galois.FieldArray:
        GF = get_field(self.prime)
        return GF(np.array(self.entries, dtype=np.int64).reshape(self.rows, self.cols))

    @classmethod
    def from_field_array(cls, array: galois.FieldArray, prime: int) -> "Matrix":
        values = np.asarray(array, dtype=np.int64)
        if values.ndim == 1:
            values = values.reshape(1, -1)
        return cls.from_rows(values.tolist(), prime)

    def transpose(self) -> "Matrix":
        if self.rows == 0:
            return Matrix(self.cols, 0, tuple(() for _ in range(self.cols)), self.prime)
        return Matrix(self.cols, self.rows, tuple(zip(*self.entries)), self.prime)

    def column(self, j: int) -> Vector:
        return [row[j] for row in self.entries]

    def columns(self) -> List[Vector]:
        return [self.column(j) for j in range(self.cols)]

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows or self.prime != other.prime:
            raise DimensionError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        cols = other.columns()
        return Matrix.from_rows(
            [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in self.entries],
            self.prime,
        )

    def apply(self, vector: Sequence[int]) -> Vector:
        return matvec(self.entries, vector, self.prime)


@beartype
def stack(blocks: Sequence[Matrix]) -> Matrix:
    """Vertical concatenation."""
    assert len(blocks) > 0
    cols = blocks[0].cols
    if any(b.cols != cols for b in blocks):
        raise DimensionError("stacked blocks need equal column counts")
    rows = [row for block in blocks for row in block.entries]
    return Matrix(len(rows), cols, tuple(rows), blocks[0].prime)


@beartype
def hstack(blocks: Sequence[Matrix]) -> Matrix:
    return stack([b.transpose() for b in blocks]).transpose()


@beartype
def rank(A: Matrix) -> int:
    if A.rows == 0 or A.cols == 0:
        return 0
    return int(np.linalg.matrix_rank(A.field_array()))


@beartype
def is_full_rank(A: Matrix) -> bool:
    return rank(A) == min(A.rows, A.cols)


@beartype
def null_space_basis(A: Matrix) -> List[Vector]:
    """Basis of ``{v : A v = 0}``, each vector scaled to a leading 1."""
    if A.cols == 0:
        return []
    if A.rows == 0 or rank(A) == 0:
        return [[int(i == j) for i in range(A.cols)] for j in range(A.cols)]
    basis = A.field_array().null_space()
    vectors: List[Vector] = []
    for row in np.asarray(basis, dtype=np.int64).tolist():
        lead = next(x for x in row if x != 0)
        scale = inverse_mod(int(lead), A.prime)
        vectors.append([int(x) * scale % A.prime for x in row])
    assert len(vectors) == A.cols - rank(A)
    return vectors


@beartype
def inverse(A: Matrix) -> Matrix:
    if A.rows != A.cols:
        raise DimensionError(f"cannot invert a {A.rows}x{A.cols} matrix")
    if rank(A) < A.rows:
        raise ZeroDivisionError("matrix is singular")
    return Matrix.from_field_array(np.linalg.inv(A.field_array()), A.prime)


class Verdict(enum.Enum):
    UNIQUE = "unique"
    NO_SOLUTION = "no-solution"
    UNDERDETERMINED = "underdetermined"


@dataclass(frozen=True)
class Solution:
    verdict: Verdict
    x: Optional[Tuple[int, ...]] = None


@beartype
def solve(A: Matrix, b: Sequence[int]) -> Solution:
    if len(b) != A.rows:
        raise DimensionError(f"right-hand side has length {len(b)}, expected {A.rows}")
    augmented = hstack([A, Matrix.from_columns([list(b)], A.rows, A.prime)])
    rank_a, rank_aug = rank(A), rank(augmented)
    if rank_aug > rank_a:
        return Solution(Verdict.NO_SOLUTION)
    if rank_a < A.cols:
        return Solution(Verdict.UNDERDETERMINED)
    reduced = np.asarray(augmented.field_array().row_reduce(), dtype=np.int64)
    return Solution(Verdict.UNIQUE, tuple(int(reduced[i, -1]) for i in range(A.cols)))


@beartype
def random_matrix_with_property(
    rows: int,
    cols: int,
    predicate: Callable[[Matrix], bool],
    rng: np.random.Generator,
    prime: int = DEFAULT_PRIME,
    attempts: int = MAX_ATTEMPTS,
) -> Matrix:
    """Rejection-sample a uniform matrix until ``predicate`` holds."""
    for attempt in range(attempts):
        if rows == 0 or cols == 0:
            candidate = Matrix.zeros(rows, cols, prime)
        else:
            candidate = Matrix.from_rows(rng.integers(0, prime, size=(rows, cols)).tolist(), prime)
        if predicate(candidate):
            if attempt > 0:
                logger.debug(f"Accepted {rows}x{cols} draw after {attempt + 1} attempts")
            return candidate
    raise GenericityError(f"genericity failure: no {rows}x{cols} draw satisfied the predicate in {attempts} attempts")


@beartype
def rank_at_least(k: int) -> Callable[[Matrix], bool]:
    return lambda A: rank(A) >= k


def matvec(entries: Sequence[Sequence[int]], vector: Sequence[int], prime: int) -> Vector:
    if len(entries) > 0 and len(entries[0]) != len(vector):
        raise DimensionError(f"vector of length {len(vector)} does not match {len(entries[0])} columns")
    return [sum(a * x for a, x in zip(row, vector)) % prime for row in entries]


def inverse_mod(value: int, prime: int) -> int:
    return pow(value, -1, prime)
