"""Bijections of the message space whose projections are two-universal.

The message space is ``B = S_1 x ... x S_{T+1}`` with ``S_i = F_q^{k_i}``;
``S_{T+1}`` carries the stochastic encoder's randomness. Two families are
provided: every permutation of ``B`` and every invertible linear map of
``F_q^K``. A projection ``alpha_I`` keeps the factors listed in ``I``
(1-based, ascending).

All probabilities in this module are exact :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from secmux import gf, kernels
from secmux.errors import check_guard

PERMUTATION_LIMIT = 8
PAIR_SCAN_LIMIT = 2**32
TABLE_LIMIT = 2**26

ALL_PERMUTATIONS = "all-permutations"
BIJECTIVE_LINEAR = "bijective-linear"
KINDS = (ALL_PERMUTATIONS, BIJECTIVE_LINEAR)


@dataclass(frozen=True)
class MessageLayout:
    """Factorisation of the message space into ``T + 1`` vector spaces.

    ``dims[-1]`` is the randomness factor and may be 0 (deterministic
    encoder); every secret factor needs at least one coordinate.
    """

    q: int
    dims: tuple[int, ...]

    def __post_init__(self):
        gf.check_prime(self.q)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.dims) < 2:
            raise ValueError("layout needs at least one secret factor and the randomness factor")
        if any(d < 1 for d in self.dims[:-1]):
            raise ValueError(f"secret factor dimensions must be >= 1, got {self.dims}")
        if self.dims[-1] < 0:
            raise ValueError("randomness dimension must be >= 0")

    @property
    def T(self) -> int:
        return len(self.dims) - 1

    @property
    def K(self) -> int:
        return sum(self.dims)

    @property
    def size(self) -> int:
        return self.q**self.K

    def factor_size(self, i: int) -> int:
        return self.q ** self.dims[i - 1]

    def subset_size(self, subset: Iterable[int]) -> int:
        return math.prod(self.factor_size(i) for i in subset)

    def coordinates(self, subset: Iterable[int]) -> list[int]:
        """Coordinate positions of the factors in ``subset``, ascending."""
        offsets = np.concatenate([[0], np.cumsum(self.dims)])
        coords: list[int] = []
        for i in sorted(subset):
            coords.extend(range(offsets[i - 1], offsets[i]))
        return coords

    def subsets(self, include_randomness: bool = False) -> list[tuple[int, ...]]:
        """Nonempty subsets of ``{1..T}`` (or ``{1..T+1}``), by size then lexicographic."""
        top = self.T + 1 if include_randomness else self.T
        out = []
        for r in range(1, top + 1):
            out.extend(itertools.combinations(range(1, top + 1), r))
        return out

    def to_json(self) -> dict:
        return {"q": self.q, "dims": list(self.dims)}


def normalize_subset(layout: MessageLayout, subset: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(set(int(i) for i in subset)))
    if not out:
        raise ValueError("subset must be nonempty")
    if out[0] < 1 or out[-1] > layout.T + 1:
        raise ValueError(f"subset {out} outside 1..{layout.T + 1}")
    return out


def project(layout: MessageLayout, subset: Iterable[int], b: Sequence[int]) -> tuple[int, ...]:
    """Coordinates of ``b`` that belong to the factors in ``subset``."""
    subset = normalize_subset(layout, subset)
    if len(b) != layout.K:
        raise ValueError(f"vector has length {len(b)}, layout needs {layout.K}")
    return tuple(int(b[c]) for c in layout.coordinates(subset))


def projection_codes(layout: MessageLayout, subset: Iterable[int]) -> np.ndarray:
    """Index of ``alpha_I(b)`` in ``prod_{i in I} S_i`` for every index ``b``."""
    coords = layout.coordinates(normalize_subset(layout, subset))
    vecs = gf.all_vectors(layout.K, layout.q)[:, coords]
    return vecs @ gf.index_weights(len(coords), layout.q)


@dataclass(frozen=True, eq=False)
class HashFamily:
    """A set of bijections of ``B``.

    Without explicit ``members`` the family is the full construction of its
    kind. Explicit members are matrices for the linear kind and index
    tables (permutations of ``range(|B|)``) for the permutation kind.
    """

    kind: str
    layout: MessageLayout
    members: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.members is None:
            return
        if not self.members:
            raise ValueError("explicit member list is empty")
        if self.kind == BIJECTIVE_LINEAR:
            mats = tuple(
                m if isinstance(m, gf.GFMatrix) else gf.GFMatrix(m, self.layout.q) for m in self.members
            )
            for m in mats:
                if m.shape != (self.layout.K, self.layout.K) or m.q != self.layout.q:
                    raise ValueError(f"member {m!r} does not act on F_{self.layout.q}^{self.layout.K}")
            object.__setattr__(self, "members", mats)
        else:
            perms = tuple(tuple(int(x) for x in p) for p in self.members)
            for p in perms:
                if len(p) != self.layout.size:
                    raise ValueError("permutation member has wrong length")
            object.__setattr__(self, "members", perms)

    @property
    def explicit(self) -> bool:
        return self.members is not None

    def size(self) -> int:
        if self.members is not None:
            return len(self.members)
        if self.kind == ALL_PERMUTATIONS:
            return math.factorial(self.layout.size)
        return gf.gl_order(self.layout.K, self.layout.q)

    def tables(self) -> np.ndarray:
        """Index tables of every member, shape (|family|, |B|)."""
        return self._tables

    @cached_property
    def _tables(self) -> np.ndarray:
        n = self.layout.size
        if self.members is not None:
            if self.kind == ALL_PERMUTATIONS:
                return np.array(self.members, dtype=np.int64)
            return gf.permutation_tables(np.array([m.array for m in self.members]), self.layout.q)
        if self.kind == ALL_PERMUTATIONS:
            check_guard("permutation-family", n, PERMUTATION_LIMIT)
            return np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        check_guard("family-table", self.size() * n, TABLE_LIMIT)
        return gf.permutation_tables(gf.enumerate_gl_array(self.layout.K, self.layout.q), self.layout.q)

    def matrices(self) -> list[gf.GFMatrix]:
        if self.kind != BIJECTIVE_LINEAR:
            raise TypeError("only linear families have matrices")
        if self.members is not None:
            return list(self.members)
        return gf.enumerate_gl(self.layout.K, self.layout.q)

    def sample(self, rng: np.random.Generator):
        """One member drawn uniformly: a GFMatrix or a permutation table."""
        if self.members is not None:
            return self.members[int(rng.integers(len(self.members)))]
        if self.kind == BIJECTIVE_LINEAR:
            return gf.sample_gl(self.layout.K, self.layout.q, rng)
        return tuple(int(x) for x in rng.permutation(self.layout.size))

    def verify_bijective(self) -> bool:
        if self.kind == BIJECTIVE_LINEAR and self.members is not None:
            return all(m.is_invertible() for m in self.members)
        tables = self.tables()
        return bool((np.sort(tables, axis=1) == np.arange(self.layout.size)).all())

    def to_json(self) -> dict:
        out = {"kind": self.kind, **self.layout.to_json()}
        if self.members is not None:
            if self.kind == BIJECTIVE_LINEAR:
                out["members"] = [m.array.ravel().tolist() for m in self.members]
            else:
                out["members"] = [list(p) for p in self.members]
        return out

    @classmethod
    def from_json(cls, doc: dict) -> HashFamily:
        unknown = set(doc) - {"kind", "q", "dims", "members"}
        if unknown:
            raise ValueError(f"unknown family fields: {sorted(unknown)}")
        layout = MessageLayout(doc["q"], tuple(doc["dims"]))
        members = doc.get("members")
        if members is not None and doc["kind"] == BIJECTIVE_LINEAR:
            k = layout.K
            members = [np.array(m, dtype=np.int64).reshape(k, k) for m in members]
        return cls(doc["kind"], layout, None if members is None else tuple(members))


def enumerate_permutation_family(layout: MessageLayout) -> HashFamily:
    check_guard("permutation-family", layout.size, PERMUTATION_LIMIT)
    return HashFamily(ALL_PERMUTATIONS, layout)


def linear_family(layout: MessageLayout, members: Iterable | None = None) -> HashFamily:
    return HashFamily(BIJECTIVE_LINEAR, layout, None if members is None else tuple(members))


# -- two-universality ---------------------------------------------------------

@dataclass(frozen=True)
class TwoUniversalReport:
    subset: tuple[int, ...]
    max_ratio: Fraction
    bound: Fraction
    passed: bool
    worst_pair: tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class OrbitReport:
    subset: tuple[int, ...]
    v: tuple[int, ...]
    orbit_size: int
    intersection: int
    lhs_ratio: Fraction
    bound: Fraction
    passed: bool


def two_universal_bound(layout: MessageLayout, subset: Iterable[int]) -> Fraction:
    return Fraction(1, layout.subset_size(normalize_subset(layout, subset)))


def permutation_collision_closed_form(layout: MessageLayout, subset: Iterable[int]) -> Fraction:
    """``(prod_{i not in I} |S_i| - 1) / (|B| - 1)`` for the full permutation family."""
    subset = normalize_subset(layout, subset)
    rest = layout.size // layout.subset_size(subset)
    return Fraction(rest - 1, layout.size - 1)


def collision_probability(family: HashFamily, subset, x1: Sequence[int], x2: Sequence[int]) -> Fraction:
    """Exact ``Pr_F[alpha_I(F(x1)) = alpha_I(F(x2))]`` over the uniform member."""
    layout = family.layout
    i1, i2 = gf.vector_index(x1, layout.q), gf.vector_index(x2, layout.q)
    if len(x1) != layout.K or len(x2) != layout.K:
        raise ValueError("inputs must be elements of B")
    if i1 == i2:
        raise ValueError("collision probability needs distinct inputs")
    codes = projection_codes(layout, subset)
    tables = family.tables()
    hits = int((codes[tables[:, i1]] == codes[tables[:, i2]]).sum())
    return Fraction(hits, tables.shape[0])


def verify_two_universal(family: HashFamily, subset) -> TwoUniversalReport:
    """Exhaustive check of ``max_{x1 != x2} Pr[collision] <= 1 / |prod_{i in I} S_i|``."""
    layout = family.layout
    subset = normalize_subset(layout, subset)
    n = layout.size
    check_guard("pair-scan", family.size() * n * n, PAIR_SCAN_LIMIT)
    images = projection_codes(layout, subset)[family.tables()]
    counts = kernels.pair_collision_counts(images)
    np.fill_diagonal(counts, -1)
    flat = int(np.argmax(counts))
    x1, x2 = divmod(flat, n)
    max_ratio = Fraction(int(counts[x1, x2]), images.shape[0])
    bound = two_universal_bound(layout, subset)
    return TwoUniversalReport(
        subset,
        max_ratio,
        bound,
        max_ratio <= bound,
        (gf.index_vector(x1, layout.K, layout.q), gf.index_vector(x2, layout.K, layout.q)),
    )


def orbit(family: HashFamily, v: Sequence[int]) -> list[int]:
    """Indices of the orbit of ``v`` under the group generated by the members.

    Breadth-first closure: for a member list that is already a group this is
    exactly ``{L v : L in family}``.
    """
    layout = family.layout
    start = gf.vector_index(v, layout.q)
    tables = family.tables()
    seen = np.zeros(layout.size, dtype=bool)
    seen[start] = True
    frontier = np.array([start])
    while frontier.size:
        images = np.unique(tables[:, frontier])
        frontier = images[~seen[images]]
        seen[frontier] = True
    return np.flatnonzero(seen).tolist()


def orbit_criterion(family: HashFamily, subset, v: Sequence[int]) -> OrbitReport:
    """Compare the share of the orbit of ``v`` that ``alpha_I`` sends to zero with the bound."""
    if family.kind != BIJECTIVE_LINEAR:
        raise TypeError("the orbit criterion applies to linear families")
    layout = family.layout
    subset = normalize_subset(layout, subset)
    v = tuple(int(x) for x in v)
    if len(v) != layout.K:
        raise ValueError("v must be an element of B")
    if not any(v):
        raise ValueError("the orbit criterion needs a nonzero vector")
    members = orbit(family, v)
    codes = projection_codes(layout, subset)
    inter = int((codes[members] == 0).sum())
    ratio = Fraction(inter, len(members))
    bound = two_universal_bound(layout, subset)
    return OrbitReport(subset, v, len(members), inter, ratio, bound, ratio <= bound)


def orbit_criterion_all(family: HashFamily, subset) -> bool:
    """True iff the orbit criterion holds for every nonzero vector."""
    layout = family.layout
    return all(
        orbit_criterion(family, subset, gf.index_vector(i, layout.K, layout.q)).passed
        for i in range(1, layout.size)
    )
