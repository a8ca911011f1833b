"""Exact arithmetic over prime fields F_q and small-matrix linear algebra.

Vectors of F_q^k are plain integer sequences. Elements of F_q^k are also
addressed by a lexicographic integer index (coordinate 0 most significant),
which is how every exhaustive routine in the package walks the space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from secmux import kernels
from secmux.errors import ModulusMismatchError, SingularMatrixError, check_guard

GL_ENUMERATION_LIMIT = 2**24
_BATCH = 1 << 16


@lru_cache(maxsize=None)
def is_prime(q: int) -> bool:
    if q < 2:
        return False
    d = 2
    while d * d <= q:
        if q % d == 0:
            return False
        d += 1
    return True


def check_prime(q: int) -> int:
    if not isinstance(q, (int, np.integer)) or not is_prime(int(q)):
        raise ValueError(f"modulus must be a prime, got {q!r}")
    return int(q)


@dataclass(frozen=True)
class FieldElement:
    """An element of the prime field F_q."""

    value: int
    q: int

    def __post_init__(self):
        check_prime(self.q)
        if not 0 <= self.value < self.q:
            raise ValueError(f"residue {self.value} outside [0, {self.q})")

    def _other(self, other: FieldElement) -> int:
        if not isinstance(other, FieldElement):
            raise TypeError(f"expected FieldElement, got {type(other).__name__}")
        if other.q != self.q:
            raise ModulusMismatchError(f"F_{self.q} vs F_{other.q}")
        return other.value

    def __add__(self, other):
        return FieldElement((self.value + self._other(other)) % self.q, self.q)

    def __sub__(self, other):
        return FieldElement((self.value - self._other(other)) % self.q, self.q)

    def __mul__(self, other):
        return FieldElement((self.value * self._other(other)) % self.q, self.q)

    def __neg__(self):
        return FieldElement((-self.value) % self.q, self.q)

    def inverse(self) -> FieldElement:
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse in F_q")
        return FieldElement(pow(self.value, -1, self.q), self.q)

    def __truediv__(self, other):
        return self * FieldElement(self._other(other), self.q).inverse()


class GFMatrix:
    """Immutable matrix over F_q backed by an int64 array."""

    __slots__ = ("q", "_a")

    def __init__(self, entries, q: int):
        self.q = check_prime(q)
        a = np.array(entries, dtype=np.int64)
        if a.ndim != 2:
            raise ValueError("matrix entries must be two-dimensional")
        if a.size and (a.min() < 0 or a.max() >= self.q):
            raise ValueError(f"entries must be residues in [0, {self.q})")
        a.setflags(write=False)
        self._a = a

    @classmethod
    def identity(cls, k: int, q: int) -> GFMatrix:
        return cls(np.eye(k, dtype=np.int64), q)

    @property
    def array(self) -> np.ndarray:
        return self._a

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    def __eq__(self, other):
        if not isinstance(other, GFMatrix):
            return NotImplemented
        return self.q == other.q and np.array_equal(self._a, other._a)

    def __hash__(self):
        return hash((self.q, self._a.shape, self._a.tobytes()))

    def __repr__(self):
        return f"GFMatrix({self._a.tolist()}, q={self.q})"

    def __matmul__(self, other):
        if isinstance(other, GFMatrix):
            if other.q != self.q:
                raise ModulusMismatchError(f"F_{self.q} vs F_{other.q}")
            if self.shape[1] != other.shape[0]:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            return GFMatrix((self._a @ other._a) % self.q, self.q)
        v = np.asarray(other, dtype=np.int64)
        if v.shape[0] != self.shape[1]:
            raise ValueError(f"vector length {v.shape[0]} != {self.shape[1]} columns")
        return (self._a @ v) % self.q

    def tolist(self) -> list[list[int]]:
        return self._a.tolist()

    def determinant(self) -> int:
        return determinant(self)

    def is_invertible(self) -> bool:
        return self.shape[0] == self.shape[1] and determinant(self) != 0


def determinant(m: GFMatrix) -> int:
    """Determinant over F_q by Gaussian elimination."""
    k, cols = m.shape
    if k != cols:
        raise ValueError("determinant needs a square matrix")
    q = m.q
    a = [list(map(int, row)) for row in m.array]
    det = 1
    for col in range(k):
        piv = next((r for r in range(col, k) if a[r][col] % q), None)
        if piv is None:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det = det * a[col][col] % q
        inv = pow(a[col][col], -1, q)
        for r in range(col + 1, k):
            f = a[r][col] * inv % q
            if f:
                a[r] = [(x - f * y) % q for x, y in zip(a[r], a[col])]
    return det % q


def mat_inverse(m: GFMatrix) -> GFMatrix:
    """Inverse over F_q by Gauss-Jordan elimination.

    Raises
    ------
    SingularMatrixError
        If ``m`` is not invertible, i.e. does not define a bijection.
    """
    k, cols = m.shape
    if k != cols:
        raise ValueError("only square matrices can be inverted")
    q = m.q
    aug = [list(map(int, row)) + [int(i == j) for j in range(k)] for i, row in enumerate(m.array)]
    for col in range(k):
        piv = next((r for r in range(col, k) if aug[r][col] % q), None)
        if piv is None:
            raise SingularMatrixError(f"matrix is singular over F_{q}")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = pow(aug[col][col], -1, q)
        aug[col] = [x * inv % q for x in aug[col]]
        for r in range(k):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [(x - f * y) % q for x, y in zip(aug[r], aug[col])]
    return GFMatrix([row[k:] for row in aug], q)


def gl_order(k: int, q: int) -> int:
    """Order of GL(k, F_q), i.e. prod_{i<k} (q^k - q^i)."""
    order = 1
    for i in range(k):
        order *= q**k - q**i
    return order


def sample_gl(k: int, q: int, rng: np.random.Generator) -> GFMatrix:
    """Uniform draw from GL(k, F_q) by rejection."""
    if k < 1:
        raise ValueError("dimension must be >= 1")
    check_prime(q)
    while True:
        m = rng.integers(0, q, size=(k, k), dtype=np.int64)
        if kernels.invertible_mask(m[None], q)[0]:
            return GFMatrix(m, q)


def _candidates(start: int, stop: int, k: int, q: int) -> np.ndarray:
    """Matrices with lexicographic indices in [start, stop), row-major digits."""
    idx = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((idx.size, k * k), dtype=np.int64)
    for pos in range(k * k - 1, -1, -1):
        digits[:, pos] = idx % q
        idx //= q
    return digits.reshape(-1, k, k)


def enumerate_gl_array(k: int, q: int) -> np.ndarray:
    """All of GL(k, F_q) as an int64 array of shape (|GL|, k, k), lexicographic."""
    if k < 1:
        raise ValueError("dimension must be >= 1")
    check_prime(q)
    total = q ** (k * k)
    check_guard("gl-enumeration", total, GL_ENUMERATION_LIMIT)
    chunks = []
    for start in range(0, total, _BATCH):
        cand = _candidates(start, min(total, start + _BATCH), k, q)
        chunks.append(cand[kernels.invertible_mask(cand, q)])
    return np.concatenate(chunks)


def enumerate_gl(k: int, q: int) -> list[GFMatrix]:
    """Every invertible k x k matrix over F_q, in lexicographic order."""
    return [GFMatrix(m, q) for m in enumerate_gl_array(k, q)]


def group_closure(generators: Iterable[GFMatrix], limit: int = 1 << 16) -> list[GFMatrix]:
    """The subgroup of GL generated by ``generators`` (breadth-first products)."""
    gens = list(generators)
    if not gens:
        raise ValueError("need at least one generator")
    k = gens[0].shape[0]
    q = gens[0].q
    ident = GFMatrix.identity(k, q)
    seen = {ident}
    frontier = [ident]
    order = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                prod = h @ g
                if prod not in seen:
                    seen.add(prod)
                    order.append(prod)
                    nxt.append(prod)
                    check_guard("group-closure", len(seen), limit)
        frontier = nxt
    return order


# -- lexicographic vector indexing ------------------------------------------

def all_vectors(k: int, q: int) -> np.ndarray:
    """Every vector of F_q^k, shape (q^k, k), row i is the vector with index i."""
    idx = np.arange(q**k, dtype=np.int64)
    out = np.empty((q**k, k), dtype=np.int64)
    for pos in range(k - 1, -1, -1):
        out[:, pos] = idx % q
        idx //= q
    return out


def vector_index(v: Sequence[int], q: int) -> int:
    idx = 0
    for x in v:
        x = int(x)
        if not 0 <= x < q:
            raise ValueError(f"coordinate {x} outside [0, {q})")
        idx = idx * q + x
    return idx


def index_vector(idx: int, k: int, q: int) -> tuple[int, ...]:
    if not 0 <= idx < q**k:
        raise ValueError(f"index {idx} outside [0, {q**k})")
    out = []
    for _ in range(k):
        idx, r = divmod(idx, q)
        out.append(r)
    return tuple(reversed(out))


def index_weights(k: int, q: int) -> np.ndarray:
    return q ** np.arange(k - 1, -1, -1, dtype=np.int64)


def permutation_table(m: GFMatrix | np.ndarray, q: int | None = None) -> np.ndarray:
    """The bijection x -> M x of F_q^k as an index table of length q^k."""
    if isinstance(m, GFMatrix):
        q, a = m.q, m.array
    else:
        a = np.asarray(m, dtype=np.int64)
    k = a.shape[0]
    images = (all_vectors(k, q) @ a.T) % q
    return images @ index_weights(k, q)


def permutation_tables(mats: np.ndarray, q: int) -> np.ndarray:
    """Index tables for a batch of matrices, shape (N, q^k)."""
    mats = np.asarray(mats, dtype=np.int64)
    k = mats.shape[1]
    vecs = all_vectors(k, q)
    images = np.einsum("nij,xj->nxi", mats, vecs) % q
    return images @ index_weights(k, q)
