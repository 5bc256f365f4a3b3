"""
Instance preprocessing: drop all-zero rows and columns, collapse duplicates
into multiplicity weights, and map reduced-space factors back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boolmat import BooleanMatrix, Factorization


@dataclass(frozen=True)
class WeightedInstance:
    """
    A (possibly reduced) Boolean matrix with row/column multiplicities.

    ``row_map[i]`` is the reduced row standing in for original row ``i``, or
    ``None`` if that row was all zeros; ``col_map`` likewise.  ``matrix`` is
    ``None`` when the original matrix had no ones at all.
    """

    matrix: Optional[BooleanMatrix]
    alpha: np.ndarray
    beta: np.ndarray
    row_map: tuple
    col_map: tuple
    original_shape: tuple[int, int]

    @property
    def is_empty(self) -> bool:
        return self.matrix is None

    @property
    def shape(self) -> tuple[int, int]:
        return (0, 0) if self.matrix is None else self.matrix.shape

    @classmethod
    def unreduced(cls, X: BooleanMatrix) -> "WeightedInstance":
        """Wrap ``X`` as-is with unit weights (used to benchmark without preprocessing)."""
        n, m = X.shape
        return cls(
            matrix=X,
            alpha=_frozen(np.ones(n, dtype=np.int64)),
            beta=_frozen(np.ones(m, dtype=np.int64)),
            row_map=tuple(range(n)),
            col_map=tuple(range(m)),
            original_shape=(n, m),
        )

    @classmethod
    def weighted(cls, X: BooleanMatrix, alpha, beta) -> "WeightedInstance":
        """Wrap ``X`` with explicit multiplicities; each row/column maps to itself."""
        n, m = X.shape
        alpha = np.asarray(alpha, dtype=np.int64)
        beta = np.asarray(beta, dtype=np.int64)
        if alpha.shape != (n,) or beta.shape != (m,):
            raise ValueError("weight vectors do not match the matrix shape")
        if np.any(alpha < 1) or np.any(beta < 1):
            raise ValueError("weights must be >= 1")
        return cls(X, _frozen(alpha), _frozen(beta), tuple(range(n)), tuple(range(m)), (n, m))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


def _collapse_rows(A: np.ndarray, weights: np.ndarray):
    """
    One row pass: drop zero rows and merge identical rows.

    Returns the new array, new weights, and for every current row the index
    of its surviving representative (``-1`` for dropped zero rows).  The
    representative of a class is its first occurrence, which keeps the
    smallest original index.
    """
    first_seen: dict[bytes, int] = {}
    keep: list[int] = []
    new_weights: list[int] = []
    target = np.full(A.shape[0], -1, dtype=np.int64)
    for i, row in enumerate(A):
        if not row.any():
            continue
        key = row.tobytes()
        rep = first_seen.get(key)
        if rep is None:
            rep = first_seen[key] = len(keep)
            keep.append(i)
            new_weights.append(0)
        new_weights[rep] += int(weights[i])
        target[i] = rep
    return A[keep], np.array(new_weights, dtype=np.int64), target


def reduce(X: BooleanMatrix) -> WeightedInstance:
    """
    Remove zero rows/columns and duplicates, alternating row and column
    passes until neither changes the matrix.

    :param X:   input Boolean matrix

    :return:    WeightedInstance whose weighted error equals the original
                error for any factorization mapped through ``expand``.  If
                ``X`` has no ones, ``matrix`` is ``None`` (see ``is_empty``).
    """
    n, m = X.shape
    A = np.array(X.array)
    alpha = np.ones(n, dtype=np.int64)
    beta = np.ones(m, dtype=np.int64)
    row_map = np.arange(n)
    col_map = np.arange(m)

    while True:
        before = A.shape
        A, alpha, target = _collapse_rows(A, alpha)
        row_map = np.where(row_map >= 0, target[np.maximum(row_map, 0)], -1)
        if A.shape[0] == 0:
            break
        At, beta, target = _collapse_rows(A.T, beta)
        A = np.ascontiguousarray(At.T)
        col_map = np.where(col_map >= 0, target[np.maximum(col_map, 0)], -1)
        if A.shape == before:
            break

    if A.shape[0] == 0 or A.shape[1] == 0:
        return WeightedInstance(
            matrix=None,
            alpha=_frozen(np.zeros(0)),
            beta=_frozen(np.zeros(0)),
            row_map=(None,) * n,
            col_map=(None,) * m,
            original_shape=(n, m),
        )
    return WeightedInstance(
        matrix=BooleanMatrix(A),
        alpha=_frozen(alpha),
        beta=_frozen(beta),
        row_map=tuple(int(r) if r >= 0 else None for r in row_map),
        col_map=tuple(int(c) if c >= 0 else None for c in col_map),
        original_shape=(n, m),
    )


def expand(W: WeightedInstance, F: Optional[Factorization], rank: Optional[int] = None) -> Factorization:
    """
    Lift a reduced-space factorization to the original matrix.

    Original row ``i`` receives the C-row of its representative, or zeros if
    it was an all-zero row; columns of R are treated the same way.  For an
    empty instance pass ``F=None`` together with ``rank``; the all-zero
    factorization of that rank is returned.
    """
    n, m = W.original_shape
    if W.is_empty:
        if F is not None:
            rank = F.rank
        if rank is None or rank < 1:
            raise ValueError("expanding an empty instance needs a rank >= 1")
        return Factorization(BooleanMatrix.zeros(n, rank), BooleanMatrix.zeros(rank, m))
    if F is None:
        raise ValueError("a factorization is required for a non-empty instance")
    nr, mr = W.matrix.shape
    if F.C.n_rows != nr or F.R.n_cols != mr:
        raise ValueError(
            f"factorization is {F.C.n_rows}x{F.rank} / {F.rank}x{F.R.n_cols}, "
            f"reduced matrix is {nr}x{mr}"
        )
    k = F.rank
    C = np.zeros((n, k), dtype=np.uint8)
    R = np.zeros((k, m), dtype=np.uint8)
    for i, rep in enumerate(W.row_map):
        if rep is not None:
            C[i] = F.C.array[rep]
    for j, rep in enumerate(W.col_map):
        if rep is not None:
            R[:, j] = F.R.array[:, rep]
    return Factorization(BooleanMatrix(C), BooleanMatrix(R))


def reduction_stats(W: WeightedInstance) -> dict:
    n, m = W.original_shape
    nr, mr = W.shape
    return {
        "original_rows": n,
        "original_cols": m,
        "reduced_rows": nr,
        "reduced_cols": mr,
        "sum_alpha": int(W.alpha.sum()),
        "sum_beta": int(W.beta.sum()),
        "zero_rows": sum(r is None for r in W.row_map),
        "zero_cols": sum(c is None for c in W.col_map),
    }
