"""Dense linear algebra over a prime field F_p.

Matrices are small (a few hundred columns at most), so everything here is
plain Gaussian elimination on int64 numpy arrays reduced mod p after every
row operation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# products of two residues must fit in int64
MAX_PRIME = 2**31 - 1


def check_prime(p: int) -> int:
    p = int(p)
    if p < 2 or p > MAX_PRIME or any(p % q == 0 for q in range(2, int(p**0.5) + 1)):
        raise ValueError(f"{p} is not a supported prime")
    return p


def inverse(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {p}")
    return pow(a, -1, p)


def _as_array(rows, p: int, ncols: int | None = None) -> np.ndarray:
    arr = np.array(rows, dtype=np.int64)
    if arr.size == 0:
        n = 0 if arr.ndim < 2 else arr.shape[0]
        return np.zeros((n, ncols or 0), dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr % p


@dataclass(frozen=True, eq=False)
class FpMatrix:
    """An immutable matrix with entries in [0, p)."""

    prime: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise ValueError("FpMatrix data must be two-dimensional")
        arr %= self.prime
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_rows(cls, p: int, rows: Sequence[Sequence[int]], ncols: int | None = None) -> "FpMatrix":
        return cls(p, _as_array(rows, p, ncols))

    @classmethod
    def zeros(cls, p: int, rows: int, cols: int) -> "FpMatrix":
        return cls(p, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, p: int, n: int) -> "FpMatrix":
        return cls(p, np.eye(n, dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def tolist(self) -> list[list[int]]:
        return self.data.tolist()

    def __matmul__(self, other: "FpMatrix") -> "FpMatrix":
        if other.prime != self.prime:
            raise ValueError("prime mismatch")
        return FpMatrix(self.prime, matmul(self.data, other.data, self.prime))

    def __eq__(self, other):
        if not isinstance(other, FpMatrix):
            return NotImplemented
        return self.prime == other.prime and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.prime, self.data.shape, self.data.tobytes()))

    def is_zero(self) -> bool:
        return not self.data.any()

    def transpose(self) -> "FpMatrix":
        return FpMatrix(self.prime, self.data.T)


def matmul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if a.shape[1] == 0 or a.shape[0] == 0 or b.shape[1] == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if p < 3037000499 // max(a.shape[1], 1):
        return (a @ b) % p
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for k in range(a.shape[1]):
        out = (out + np.outer(a[:, k], b[k]) % p) % p
    return out


def rref_array(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Row reduce a copy of ``a``; returns (rref, pivot columns)."""
    a = np.array(a, dtype=np.int64, copy=True) % p
    nrows, ncols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        a[r] = (a[r] * inverse(int(a[r, c]), p)) % p
        col = a[:, c].copy()
        col[r] = 0
        if col.any():
            a = (a - np.outer(col, a[r]) % p) % p
        pivots.append(c)
        r += 1
    return a, pivots


def rref(m: FpMatrix) -> tuple[FpMatrix, list[int]]:
    """Reduced row echelon form and pivot columns; rank is ``len(pivots)``."""
    red, pivots = rref_array(m.data, m.prime)
    return FpMatrix(m.prime, red), pivots


def rank(m: FpMatrix) -> int:
    return len(rref_array(m.data, m.prime)[1])


def row_basis(a: np.ndarray, p: int) -> np.ndarray:
    """Nonzero rows of the rref of ``a``: a canonical basis of its row space."""
    red, pivots = rref_array(a, p)
    return red[: len(pivots)]


def kernel_array(a: np.ndarray, p: int) -> np.ndarray:
    """Rows form a basis of {v : a v = 0}, one per free column, in column order."""
    ncols = a.shape[1]
    red, pivots = rref_array(a, p)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = np.zeros((len(free), ncols), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = (-red[i, f]) % p
    return basis


def kernel_basis(m: FpMatrix) -> list[tuple[int, ...]]:
    """A basis of the null space of ``m``; its size is cols - rank."""
    return [tuple(int(x) for x in row) for row in kernel_array(m.data, m.prime)]


def quotient_array(space_dim: int, subspace: np.ndarray, p: int) -> tuple[list[int], np.ndarray]:
    if subspace.size and subspace.shape[1] != space_dim:
        raise ValueError(f"subspace vectors must have length {space_dim}")
    if subspace.size == 0:
        return list(range(space_dim)), np.eye(space_dim, dtype=np.int64)
    red, pivots = rref_array(subspace, p)
    red = red[: len(pivots)]
    pivot_set = set(pivots)
    reps = [c for c in range(space_dim) if c not in pivot_set]
    # P x = x[reps] - sum_i x[pivot_i] * red[i, reps]
    proj = np.zeros((len(reps), space_dim), dtype=np.int64)
    for j, q in enumerate(reps):
        proj[j, q] = 1
        for i, pc in enumerate(pivots):
            proj[j, pc] = (-red[i, q]) % p
    return reps, proj


def quotient_basis(
    space_dim: int, subspace: Iterable[Sequence[int]], prime: int
) -> tuple[list[int], FpMatrix]:
    """Canonical complement of ``span(subspace)`` in F_p^space_dim.

    Representatives are the standard basis vectors at the non-pivot
    coordinates of the subspace's echelon form. The projection matrix maps a
    vector to its coordinates in the quotient with respect to those
    representatives; it kills the subspace and is the identity on them.
    """
    vectors = [list(v) for v in subspace]
    for v in vectors:
        if len(v) != space_dim:
            raise ValueError(f"subspace vector {v} does not have length {space_dim}")
    arr = _as_array(vectors, prime, space_dim) if vectors else np.zeros((0, space_dim), dtype=np.int64)
    reps, proj = quotient_array(space_dim, arr, prime)
    return reps, FpMatrix(prime, proj)


def in_span(basis: np.ndarray, v: np.ndarray, p: int) -> bool:
    """True if ``v`` lies in the row space of the echelon-form ``basis``."""
    if basis.shape[0] == 0:
        return not (np.asarray(v) % p).any()
    stacked = np.vstack([basis, np.asarray(v, dtype=np.int64).reshape(1, -1)])
    return len(rref_array(stacked, p)[1]) == len(rref_array(basis, p)[1])
