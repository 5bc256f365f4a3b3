"""Boolean matrices, the Boolean product and the approximation error."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np


class BooleanMatrix:
    """
    Immutable dense 0/1 matrix.

    Entries are held in a read-only ``uint8`` array in row-major order.  Any
    value other than 0 or 1 is rejected at construction, never coerced.
    """

    __slots__ = ("_data", "_hash")

    def __init__(self, entries):
        arr = np.asarray(entries)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d array, got {arr.ndim} dimension(s)")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"empty matrix of shape {arr.shape}")
        if arr.dtype == bool:
            data = arr.astype(np.uint8)
        else:
            if not np.all((arr == 0) | (arr == 1)):
                bad = arr[(arr != 0) & (arr != 1)].ravel()[0]
                raise ValueError(f"entries must be 0 or 1, found {bad!r}")
            data = arr.astype(np.uint8)
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        self._data = data
        self._hash = None

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "BooleanMatrix":
        return cls(np.zeros((n_rows, n_cols), dtype=np.uint8))

    @classmethod
    def ones(cls, n_rows: int, n_cols: int) -> "BooleanMatrix":
        return cls(np.ones((n_rows, n_cols), dtype=np.uint8))

    @property
    def n_rows(self) -> int:
        return self._data.shape[0]

    @property
    def n_cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def array(self) -> np.ndarray:
        """Read-only ``uint8`` view of the entries."""
        return self._data

    def ones_count(self) -> int:
        return int(self._data.sum())

    def transpose(self) -> "BooleanMatrix":
        return BooleanMatrix(self._data.T)

    @property
    def T(self) -> "BooleanMatrix":
        return self.transpose()

    def complement(self) -> "BooleanMatrix":
        return BooleanMatrix(1 - self._data)

    def row_masks(self) -> list[int]:
        """Each row as an integer bitmask, bit ``j`` set iff entry ``(i, j)`` is 1."""
        weights = [1 << j for j in range(self.n_cols)]
        return [sum(w for w, v in zip(weights, row) if v) for row in self._data.tolist()]

    def tolist(self) -> list[list[int]]:
        return self._data.tolist()

    def to_bytes(self) -> bytes:
        """Canonical row-major serialization, used for hashing."""
        return self.n_rows.to_bytes(4, "little") + self.n_cols.to_bytes(4, "little") + self._data.tobytes()

    def __eq__(self, other):
        if not isinstance(other, BooleanMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.to_bytes())
        return self._hash

    def __getitem__(self, idx):
        return self._data[idx]

    def __repr__(self):
        return f"BooleanMatrix({self.tolist()!r})"

    def to_text(self) -> str:
        return format_matrix(self)


@dataclass(frozen=True)
class Factorization:
    """Boolean factor pair ``(C, R)`` with ``C`` of shape n x k and ``R`` of shape k x m."""

    C: BooleanMatrix
    R: BooleanMatrix

    def __post_init__(self):
        if self.C.n_cols != self.R.n_rows:
            raise ValueError(
                f"inner dimensions differ: C has {self.C.n_cols} columns, R has {self.R.n_rows} rows"
            )

    @property
    def rank(self) -> int:
        return self.C.n_cols

    def product(self) -> BooleanMatrix:
        return boolean_product(self.C, self.R)


def boolean_product(C: BooleanMatrix, R: BooleanMatrix) -> BooleanMatrix:
    """
    Boolean matrix product over the semiring ({0,1}, OR, AND).

    :param C:   n x k Boolean matrix
    :param R:   k x m Boolean matrix

    :return:    n x m matrix with entry 1 iff some l has C[i,l] = R[l,j] = 1
    """
    if C.n_cols != R.n_rows:
        raise ValueError(f"cannot multiply {C.shape} by {R.shape}: inner dimensions differ")
    counts = C.array.astype(np.int64) @ R.array.astype(np.int64)
    return BooleanMatrix(counts > 0)


def approximation_error(
    X: BooleanMatrix,
    Z: BooleanMatrix,
    row_weights: Optional[Sequence[int]] = None,
    col_weights: Optional[Sequence[int]] = None,
) -> int:
    """
    Weighted count of disagreeing entries, sum of ``alpha_i * beta_j * |x_ij - z_ij|``.

    Unit weights are used for any weight vector left as ``None``.
    """
    if X.shape != Z.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Z.shape}")
    alpha = _weights(row_weights, X.n_rows, "row")
    beta = _weights(col_weights, X.n_cols, "column")
    diff = (X.array != Z.array).astype(np.int64)
    return int(alpha @ diff @ beta)


def _weights(w, size, what):
    if w is None:
        return np.ones(size, dtype=np.int64)
    arr = np.asarray(w, dtype=np.int64)
    if arr.shape != (size,):
        raise ValueError(f"{what} weights have length {arr.size}, expected {size}")
    if np.any(arr < 1):
        raise ValueError(f"{what} weights must be >= 1")
    return arr


def boolean_rank_upper_bound(X: BooleanMatrix) -> int:
    """
    A rank at which an exact factorization is guaranteed to exist.

    After zero rows/columns and duplicates are removed, one factor per
    remaining row (or column) reproduces the matrix, so the smaller reduced
    dimension suffices.  Returns 0 for an all-zero matrix.
    """
    from .reduce import reduce

    W = reduce(X)
    if W.is_empty:
        return 0
    return min(W.matrix.shape)


def trivial_exact_factorization(X: BooleanMatrix) -> Factorization:
    """Exact factorization with one factor per row of ``X`` (or column, if fewer)."""
    n, m = X.shape
    if n <= m:
        return Factorization(BooleanMatrix(np.eye(n, dtype=np.uint8)), X)
    return Factorization(X, BooleanMatrix(np.eye(m, dtype=np.uint8)))


# -- plain-text format: "n m" header, then n lines of m 0/1 tokens ---------------


def format_matrix(X: BooleanMatrix) -> str:
    lines = [f"{X.n_rows} {X.n_cols}"]
    lines.extend(" ".join(str(v) for v in row) for row in X.tolist())
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> BooleanMatrix:
    """Parse the plain-text matrix format.  Blank lines and ``#`` comments are ignored."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"header must be 'n m', got {lines[0]!r}")
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError(f"header must be 'n m', got {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != n:
        raise ValueError(f"expected {n} rows, found {len(body)}")
    rows = []
    for i, line in enumerate(body, start=1):
        tokens = line.split()
        if len(tokens) != m:
            raise ValueError(f"row {i}: expected {m} entries, found {len(tokens)}")
        if any(t not in ("0", "1") for t in tokens):
            raise ValueError(f"row {i}: entries must be 0 or 1")
        rows.append([int(t) for t in tokens])
    return BooleanMatrix(rows)


def read_matrix(path: Union[str, Path]) -> BooleanMatrix:
    return parse_matrix(Path(path).read_text())


def write_matrix(X: BooleanMatrix, path: Union[str, Path]) -> None:
    Path(path).write_text(format_matrix(X))

