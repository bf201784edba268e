"""Dense matrices over a prime field.

Entries live in a numpy array: ``int64`` when ``q < 2**31`` (every product of
two reduced entries fits in 62 bits), Python-int ``object`` arrays otherwise.
Instances are immutable; every operation returns a new reduced matrix.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AttemptsExhausted,
    DimensionMismatch,
    Inconsistent,
    IndexOutOfRange,
    Singular,
)
from .ff import Field

DEFAULT_ATTEMPTS = 32


def _dtype(field: Field):
    return np.int64 if field.small else object


def _matmul(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    if a.dtype == object:
        if a.shape[1] == 0:
            return np.zeros((a.shape[0], b.shape[1]), dtype=object)
        return a.dot(b) % q
    # split b into 16-bit halves so that no partial sum leaves int64
    lo = b & 0xFFFF
    hi = b >> 16
    return ((a @ lo) % q + (((a @ hi) % q) << 16) % q) % q


def _eliminate(a: np.ndarray, q: int, ncols: int | None = None, full: bool = True):
    """Row-reduce a copy of ``a`` over its first ``ncols`` columns.

    With ``full`` the result is in reduced row echelon form; otherwise only the
    rows below each pivot are cleared (enough for rank).  Pivots are chosen as
    the first nonzero entry in the column.
    """
    m = a.copy()
    rows, cols = m.shape
    ncols = cols if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            m[[r, p]] = m[[p, r]]
        inv = pow(int(m[r, c]), -1, q)
        m[r] = m[r] * inv % q
        col = m[:, c].copy()
        col[r] = 0
        if not full:
            col[:r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            m[hit] = (m[hit] - np.outer(col[hit], m[r])) % q
        pivots.append(c)
        r += 1
    return m, pivots


class Matrix:
    """An immutable ``rows x cols`` matrix over ``field``."""

    __slots__ = ("field", "a")

    def __init__(self, field: Field, data, shape: tuple[int, int] | None = None):
        dtype = _dtype(field)
        if isinstance(data, np.ndarray) and data.dtype != object:
            arr = np.asarray(data, dtype=np.int64) % field.q
            if dtype is object:
                arr = arr.astype(object)
        else:
            raw = np.array(data, dtype=object)
            if raw.size == 0 and shape is not None:
                raw = raw.reshape(shape)
            flat = [
                field.from_rational(x) if isinstance(x, Fraction) else int(x) % field.q
                for x in raw.ravel()
            ]
            arr = np.array(flat, dtype=dtype).reshape(raw.shape)
        if shape is not None and arr.size == 0:
            arr = arr.reshape(shape)
        if arr.ndim != 2:
            raise DimensionMismatch(f"matrix data must be 2-D, got shape {arr.shape}")
        if shape is not None and arr.shape != tuple(shape):
            raise DimensionMismatch(f"expected shape {shape}, got {arr.shape}")
        arr.setflags(write=False)
        self.field = field
        self.a = arr

    @classmethod
    def _wrap(cls, field: Field, arr: np.ndarray) -> "Matrix":
        obj = cls.__new__(cls)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        obj.field = field
        obj.a = arr
        return obj

    # -- constructors --------------------------------------------------------

    @classmethod
    def zeros(cls, field: Field, rows: int, cols: int) -> "Matrix":
        return cls._wrap(field, np.zeros((rows, cols), dtype=_dtype(field)))

    @classmethod
    def identity(cls, field: Field, n: int) -> "Matrix":
        return cls._wrap(field, np.eye(n, dtype=np.int64).astype(_dtype(field)))

    @classmethod
    def random(cls, field: Field, rows: int, cols: int, rng: random.Random) -> "Matrix":
        """I.i.d. uniform entries, drawn in row-major order."""
        vals = [rng.randrange(field.q) for _ in range(rows * cols)]
        return cls._wrap(field, np.array(vals, dtype=_dtype(field)).reshape(rows, cols))

    # -- basic protocol ------------------------------------------------------

    @property
    def rows(self) -> int:
        return self.a.shape[0]

    @property
    def cols(self) -> int:
        return self.a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape

    @property
    def T(self) -> "Matrix":
        return Matrix._wrap(self.field, self.a.T)

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.a]

    def __repr__(self):
        return f"Matrix({self.field!r}, {self.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and bool(
            np.array_equal(self.a, other.a)
        )

    __hash__ = None

    def _check(self, other: "Matrix"):
        if not isinstance(other, Matrix) or other.field != self.field:
            raise DimensionMismatch("operands must be matrices over the same field")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} + {other.shape}")
        return Matrix._wrap(self.field, (self.a + other.a) % self.field.q)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} - {other.shape}")
        return Matrix._wrap(self.field, (self.a - other.a) % self.field.q)

    def __neg__(self) -> "Matrix":
        return Matrix._wrap(self.field, (-self.a) % self.field.q)

    def scale(self, c: int) -> "Matrix":
        return Matrix._wrap(self.field, self.a * (c % self.field.q) % self.field.q)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.cols != other.rows:
            raise DimensionMismatch(f"{self.shape} @ {other.shape}")
        return Matrix._wrap(self.field, _matmul(self.a, other.a, self.field.q))

    def is_zero(self) -> bool:
        return not self.a.any()

    def submatrix(self, rows: Iterable[int] | None = None, cols: Iterable[int] | None = None) -> "Matrix":
        """Rows/columns selected by index lists (``None`` keeps all)."""
        a = self.a
        if rows is not None:
            rows = list(rows)
            if any(not 0 <= r < self.rows for r in rows):
                raise IndexOutOfRange(f"row index out of range for {self.rows} rows")
            a = a[rows, :] if rows else a[:0, :]
        if cols is not None:
            cols = list(cols)
            if any(not 0 <= c < self.cols for c in cols):
                raise IndexOutOfRange(f"column index out of range for {self.cols} columns")
            a = a[:, cols] if cols else a[:, :0]
        return Matrix._wrap(self.field, a)

    def row_block(self, start: int, stop: int) -> "Matrix":
        if not 0 <= start <= stop <= self.rows:
            raise IndexOutOfRange(f"rows [{start}, {stop}) of {self.rows}")
        return Matrix._wrap(self.field, self.a[start:stop])

    # -- linear algebra ------------------------------------------------------

    def rank(self) -> int:
        return rank(self)

    def inverse(self) -> "Matrix":
        return inverse(self)

    def null_space_basis(self) -> "Matrix":
        return null_space_basis(self)

    def solve_particular(self, b: "Matrix") -> "Matrix":
        return solve_particular(self, b)


def _fields(ms: Sequence[Matrix]) -> Field:
    if not ms:
        raise DimensionMismatch("nothing to stack")
    f = ms[0].field
    if any(m.field != f for m in ms):
        raise DimensionMismatch("matrices over different fields")
    return f


def vstack(*ms: Matrix) -> Matrix:
    f = _fields(ms)
    if len({m.cols for m in ms}) > 1:
        raise DimensionMismatch(f"vstack column counts {[m.cols for m in ms]}")
    return Matrix._wrap(f, np.vstack([m.a for m in ms]))


def hstack(*ms: Matrix) -> Matrix:
    f = _fields(ms)
    if len({m.rows for m in ms}) > 1:
        raise DimensionMismatch(f"hstack row counts {[m.rows for m in ms]}")
    return Matrix._wrap(f, np.hstack([m.a for m in ms]))


def mul(a: Matrix, b: Matrix) -> Matrix:
    return a @ b


def submatrix(m: Matrix, rows=None, cols=None) -> Matrix:
    return m.submatrix(rows, cols)


def rank(m: Matrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    # eliminate along the shorter side
    a = m.a if m.rows <= m.cols else m.a.T
    return len(_eliminate(a, m.field.q, full=False)[1])


def inverse(m: Matrix) -> Matrix:
    if m.rows != m.cols:
        raise DimensionMismatch(f"inverse of non-square {m.shape}")
    n = m.rows
    eye = np.eye(n, dtype=np.int64).astype(m.a.dtype)
    red, piv = _eliminate(np.hstack([m.a, eye]), m.field.q, ncols=n)
    if len(piv) < n:
        raise Singular(f"matrix has rank {len(piv)} < {n}")
    return Matrix._wrap(m.field, red[:, n:])


def null_space_basis(m: Matrix) -> Matrix:
    """Columns spanning the right null space; width = cols - rank."""
    q = m.field.q
    red, piv = _eliminate(m.a, q)
    free = [c for c in range(m.cols) if c not in set(piv)]
    basis = np.zeros((m.cols, len(free)), dtype=m.a.dtype)
    for j, f in enumerate(free):
        basis[f, j] = 1
        for i, p in enumerate(piv):
            basis[p, j] = (-red[i, f]) % q
    return Matrix._wrap(m.field, basis)


def solve_particular(a: Matrix, b: Matrix) -> Matrix:
    """Solve ``a @ x = b`` with every free variable set to zero.

    ``b`` may carry several right-hand sides as columns; each is solved
    independently.  Raises :class:`Inconsistent` if any column has no solution.
    """
    a._check(b)
    if b.rows != a.rows:
        raise DimensionMismatch(f"system {a.shape} with right-hand side {b.shape}")
    n = a.cols
    red, piv = _eliminate(np.hstack([a.a, b.a]), a.field.q, ncols=n)
    r = len(piv)
    if red[r:, n:].any():
        raise Inconsistent("right-hand side is not in the column space")
    x = np.zeros((n, b.cols), dtype=a.a.dtype)
    for i, p in enumerate(piv):
        x[p] = red[i, n:]
    return Matrix._wrap(a.field, x)


def random_full_rank(
    field: Field, rows: int, cols: int, rng: random.Random, max_attempts: int = DEFAULT_ATTEMPTS
) -> Matrix:
    """Uniform matrix conditioned on rank ``min(rows, cols)`` (rejection sampling)."""
    target = min(rows, cols)
    for _ in range(max_attempts):
        m = Matrix.random(field, rows, cols, rng)
        if rank(m) == target:
            return m
    raise AttemptsExhausted(f"no full-rank {rows}x{cols} matrix over GF({field.q}) in {max_attempts} draws")
