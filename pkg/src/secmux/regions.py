"""Rate regions of the BCC, the BCD and secure multiplex coding.

Membership is certified by a single Markov chain U -> V -> X -> YZ: every
defining inequality is evaluated for that chain and reported as a slack
(right side minus left side). :func:`region_scan` explores a lattice of
chains and is an inner bound only, since no cardinality bounds on U and V
are assumed.
"""

from __future__ import annotations

import bisect
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from secmux import info, kernels
from secmux.channels import Channel, MarkovSpec, joint_uvo
from secmux.errors import check_guard

SLACK_TOL = 1e-9
SCAN_LIMIT = 10**7
SCAN_CHUNK = 1 << 15
RHO_GRID = 64


@dataclass(frozen=True)
class MarkovInformation:
    i_vy_u: float
    i_vz_u: float
    i_uy: float
    i_uz: float

    @property
    def common(self) -> float:
        return min(self.i_uy, self.i_uz)

    @property
    def secrecy(self) -> float:
        return max(0.0, self.i_vy_u - self.i_vz_u)


def markov_information(spec: MarkovSpec, bob: Channel, eve: Channel) -> MarkovInformation:
    vals = []
    for receiver in (bob, eve):
        j = joint_uvo(spec, receiver)  # (u, v, o)
        vals.append(info.conditional_mutual_information(j.transpose(1, 2, 0)))
        vals.append(info.mutual_information(j.sum(axis=1)))
    return MarkovInformation(vals[0], vals[2], vals[1], vals[3])


@dataclass
class RegionCertificate:
    kind: str
    spec: MarkovSpec
    quantities: MarkovInformation
    slacks: dict[str, float]
    tol: float = SLACK_TOL

    @property
    def passed(self) -> bool:
        return all(s >= -self.tol for s in self.slacks.values())

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "slacks": dict(self.slacks),
            "quantities": {
                "I(V;Y|U)": self.quantities.i_vy_u,
                "I(V;Z|U)": self.quantities.i_vz_u,
                "I(U;Y)": self.quantities.i_uy,
                "I(U;Z)": self.quantities.i_uz,
            },
            "spec": self.spec.to_json(),
        }


def _check_rates(*rates: float) -> None:
    if any(r < 0 for r in rates):
        raise ValueError("rates must be nonnegative")


def bcc_membership(rates: Sequence[float], spec: MarkovSpec, bob: Channel, eve: Channel,
                   tol: float = SLACK_TOL) -> RegionCertificate:
    """Certificate for ``(R_1, R_e, R_0)`` in the BCC region.

    The secrecy term is clipped at zero: ``R_e = 0`` is always attainable
    by taking V = U, so a chain with ``I(V;Y|U) < I(V;Z|U)`` does not
    disqualify zero equivocation.
    """
    r1, re, r0 = map(float, rates)
    _check_rates(r1, re, r0)
    q = markov_information(spec, bob, eve)
    slacks = {
        "common": q.common - r0,
        "sum": q.i_vy_u + q.common - (r1 + r0),
        "secrecy": q.secrecy - re,
        "equivocation": r1 - re,
    }
    return RegionCertificate("bcc", spec, q, slacks, tol)


def bcd_membership(rates: Sequence[float], spec: MarkovSpec, bob: Channel, eve: Channel,
                   tol: float = SLACK_TOL) -> RegionCertificate:
    """Certificate for ``(R_0, R'_1)`` in the BCD region; needs ``V = X``."""
    if not spec.p_x_given_v.is_identity():
        raise ValueError("the BCD region needs V = X (identity P_{X|V})")
    r0, r1 = map(float, rates)
    _check_rates(r0, r1)
    q = markov_information(spec, bob, eve)
    slacks = {
        "common": q.common - r0,
        "sum": q.i_vy_u + q.common - (r0 + r1),
    }
    return RegionCertificate("bcd", spec, q, slacks, tol)


def subset_label(subset: Sequence[int]) -> str:
    return "[" + ",".join(str(i) for i in subset) + "]"


@dataclass
class RateTuple:
    """``R_0``, ``(R_1..R_T)`` and the equivocation rate for each nonempty subset."""

    r0: float
    rates: tuple[float, ...]
    re_by_subset: dict[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        self.rates = tuple(float(r) for r in self.rates)
        self.re_by_subset = {tuple(sorted(k)): float(v) for k, v in self.re_by_subset.items()}
        _check_rates(self.r0, *self.rates, *self.re_by_subset.values())

    @property
    def T(self) -> int:
        return len(self.rates)

    def subsets(self) -> list[tuple[int, ...]]:
        out = []
        for r in range(1, self.T + 1):
            out.extend(itertools.combinations(range(1, self.T + 1), r))
        return out


def smc_membership(rates: RateTuple, spec: MarkovSpec, bob: Channel, eve: Channel,
                   tol: float = SLACK_TOL) -> RegionCertificate:
    """Certificate for a rate tuple in the secure multiplex coding region."""
    subsets = rates.subsets()
    missing = [s for s in subsets if s not in rates.re_by_subset]
    extra = set(rates.re_by_subset) - set(subsets)
    if missing or extra:
        raise ValueError(f"equivocation map must cover exactly the nonempty subsets of 1..{rates.T}; "
                         f"missing {missing}, unexpected {sorted(extra)}")
    q = markov_information(spec, bob, eve)
    slacks = {
        "common": q.common - rates.r0,
        "sum": q.i_vy_u + q.common - (rates.r0 + math.fsum(rates.rates)),
    }
    for s in subsets:
        re = rates.re_by_subset[s]
        slacks["secrecy" + subset_label(s)] = q.secrecy - re
        slacks["equivocation" + subset_label(s)] = math.fsum(rates.rates[i - 1] for i in s) - re
    return RegionCertificate("smc", spec, q, slacks, tol)


# -- lattice scan ---------------------------------------------------------------

def simplex_lattice(dim: int, resolution: int) -> np.ndarray:
    """Points of the simplex with coordinates in ``{0, 1/m, ..., 1}``, ``m = resolution - 1``.

    Rows are compositions of ``m`` into ``dim`` parts in lexicographic order.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2 points per edge")
    m = resolution - 1
    rows = []
    for bars in itertools.combinations(range(m + dim - 1), dim - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(m + dim - 2 - prev)
        rows.append(parts)
    return np.array(rows, dtype=np.float64) / m


@dataclass(frozen=True)
class ScanPoint:
    grid_index: int
    i_vy_u: float
    i_vz_u: float
    i_uy: float
    i_uz: float

    @property
    def r0(self) -> float:
        return min(self.i_uy, self.i_uz)

    @property
    def rate_sum(self) -> float:
        return self.i_vy_u + self.r0

    @property
    def re(self) -> float:
        return max(0.0, self.i_vy_u - self.i_vz_u)


class ScanGrid:
    """Mixed-radix enumeration of ``(P_U, P_{V|U}, P_{X|V})`` lattice points.

    The index's most significant digit selects ``P_U``, then the rows of
    ``P_{V|U}`` in order, then the rows of ``P_{X|V}``.
    """

    def __init__(self, u_size: int, v_size: int, x_size: int, resolution: int, v_equals_x: bool = False):
        if v_equals_x and v_size != x_size:
            raise ValueError("V = X needs |V| = |X|")
        if min(u_size, v_size, x_size) < 1:
            raise ValueError("alphabet sizes must be positive")
        self.u_size, self.v_size, self.x_size = u_size, v_size, x_size
        self.resolution = resolution
        self.v_equals_x = v_equals_x
        self.lat_u = simplex_lattice(u_size, resolution)
        self.lat_v = simplex_lattice(v_size, resolution)
        self.lat_x = simplex_lattice(x_size, resolution)
        radices = [len(self.lat_u)] + [len(self.lat_v)] * u_size
        if not v_equals_x:
            radices += [len(self.lat_x)] * v_size
        self.radices = radices
        self.size = math.prod(radices)

    def digits(self, idx: np.ndarray) -> np.ndarray:
        idx = np.array(idx, dtype=np.int64)
        out = np.empty((idx.size, len(self.radices)), dtype=np.int64)
        for pos in range(len(self.radices) - 1, -1, -1):
            out[:, pos] = idx % self.radices[pos]
            idx //= self.radices[pos]
        return out

    def batch(self, start: int, stop: int):
        d = self.digits(np.arange(start, stop))
        pu = self.lat_u[d[:, 0]]
        pvu = self.lat_v[d[:, 1:1 + self.u_size]]
        if self.v_equals_x:
            pxv = np.broadcast_to(np.eye(self.v_size), (d.shape[0], self.v_size, self.v_size))
        else:
            pxv = self.lat_x[d[:, 1 + self.u_size:]]
        return pu, pvu, pxv

    def spec(self, index: int) -> MarkovSpec:
        pu, pvu, pxv = self.batch(index, index + 1)
        return MarkovSpec(pu[0], Channel(pvu[0]), Channel(np.array(pxv[0])))


@dataclass
class ScanResult:
    grid: ScanGrid
    evaluated: int
    boundary: list[ScanPoint]
    best_re: ScanPoint
    best_sum: ScanPoint
    best_r0: ScanPoint

    @property
    def max_re(self) -> float:
        return self.best_re.re


def pareto_front(points: list[ScanPoint]) -> list[ScanPoint]:
    """Points not weakly dominated in ``(r0, rate_sum, re)``; ties keep the lowest index."""
    order = sorted(points, key=lambda p: (-p.r0, -p.rate_sum, -p.re, p.grid_index))
    stair_b: list[float] = []  # ascending rate_sum
    stair_c: list[float] = []  # descending re
    front = []
    for p in order:
        b, c = p.rate_sum, p.re
        pos = bisect.bisect_left(stair_b, b)
        if pos < len(stair_b) and stair_c[pos] >= c:
            continue
        front.append(p)
        lo, hi = pos, pos
        while lo > 0 and stair_c[lo - 1] <= c:
            lo -= 1
        while hi < len(stair_b) and stair_b[hi] == b:
            hi += 1
        stair_b[lo:hi] = [b]
        stair_c[lo:hi] = [c]
    return sorted(front, key=lambda p: p.grid_index)


def _best(values: np.ndarray) -> int:
    return int(np.argmax(values))  # first maximum, i.e. lowest grid index


def region_scan(bob: Channel, eve: Channel, u_size: int = 1, v_size: int | None = None,
                resolution: int = 11, v_equals_x: bool = False, threads: int = 1,
                chunk: int = SCAN_CHUNK) -> ScanResult:
    """Evaluate the corner rates of every chain on a simplex lattice.

    For each chain the corner point is ``R_0 = min[I(U;Y), I(U;Z)]``,
    ``sum R = I(V;Y|U) + R_0`` and ``R_e = [I(V;Y|U) - I(V;Z|U)]^+``. The
    returned boundary is the Pareto front of those corners.
    """
    if bob.inputs != eve.inputs:
        raise ValueError("Bob's and Eve's channels must share the input alphabet")
    x_size = bob.inputs
    v_size = x_size if v_size is None else v_size
    grid = ScanGrid(u_size, v_size, x_size, resolution, v_equals_x)
    check_guard("region-scan", grid.size, SCAN_LIMIT)
    starts = list(range(0, grid.size, chunk))

    def evaluate(start: int):
        stop = min(grid.size, start + chunk)
        pu, pvu, pxv = grid.batch(start, stop)
        vals = kernels.scan_information(pu, pvu, pxv, bob.matrix, eve.matrix)
        # clamp rounding noise below zero
        return start, np.maximum(vals, 0.0)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(evaluate, starts))
    else:
        results = [evaluate(s) for s in starts]

    front: list[ScanPoint] = []
    best = {}
    for start, vals in results:
        r0 = np.minimum(vals[:, 2], vals[:, 3])
        metrics = {
            "re": np.maximum(vals[:, 0] - vals[:, 1], 0.0),
            "sum": vals[:, 0] + r0,
            "r0": r0,
        }
        for name, m in metrics.items():
            i = _best(m)
            if name not in best or m[i] > best[name][0]:
                best[name] = (m[i], ScanPoint(start + i, *map(float, vals[i])))
        chunk_points = [ScanPoint(start + i, *row) for i, row in enumerate(vals.tolist())]
        front = pareto_front(front + chunk_points)
    return ScanResult(grid, grid.size, front, best["re"][1], best["sum"][1], best["r0"][1])


# -- leakage exponent -------------------------------------------------------------

@dataclass(frozen=True)
class ExponentReport:
    rho: float
    r_i: float
    r_p: float
    log_term: float

    @property
    def value(self) -> float:
        return self.rho * (self.r_i - self.r_p) + self.log_term


def exponent_log_term(rho: float, joint_uvz) -> float:
    """``log sum_{u,v,z} P(u,v,z) P(z|v)^rho P(z|u)^-rho`` over the support."""
    p = info.check_joint(joint_uvz, 3)
    p_vz = p.sum(axis=0)
    p_uz = p.sum(axis=1)
    p_v = p_vz.sum(axis=1)
    p_u = p_uz.sum(axis=1)
    live = p > 0
    u, v, z = np.nonzero(live)
    log_zv = np.log(p_vz[v, z]) - np.log(p_v[v])
    log_zu = np.log(p_uz[u, z]) - np.log(p_u[u])
    return float(logsumexp(np.log(p[live]) + rho * (log_zv - log_zu)))


def leakage_exponent(rho: float, r_i: float, r_p: float, joint_uvz) -> ExponentReport:
    """Exponent ``rho (R_I - R_p) + log sum P(u,v,z) P(z|v)^rho P(z|u)^-rho``.

    A negative value certifies that the leakage decays exponentially in the
    block length at rate ``|value|`` per symbol.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    return ExponentReport(float(rho), float(r_i), float(r_p), exponent_log_term(rho, joint_uvz))


@dataclass(frozen=True)
class ExponentOptimum:
    rho: float
    value: float
    grid_rho: tuple[float, ...]
    grid_values: tuple[float, ...]


def _golden_section(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def optimize_exponent(r_i: float, r_p: float, joint_uvz, grid_points: int = RHO_GRID) -> ExponentOptimum:
    """Minimise the exponent over ``0 < rho <= 1``.

    A uniform grid ``rho_k = k / grid_points`` locates the best cell, then
    golden-section search refines it inside the neighbouring grid cells. The
    returned value never exceeds the best grid value.
    """
    p = info.check_joint(joint_uvz, 3)

    def f(rho: float) -> float:
        return leakage_exponent(rho, r_i, r_p, p).value

    rhos = [k / grid_points for k in range(1, grid_points + 1)]
    vals = [f(r) for r in rhos]
    k = int(np.argmin(vals))
    lo = rhos[k - 1] if k > 0 else 1e-9
    hi = rhos[k + 1] if k + 1 < len(rhos) else 1.0
    rho_star, best = rhos[k], vals[k]
    if hi > lo:
        r, v = _golden_section(f, lo, hi)
        if v < best:
            rho_star, best = r, v
    return ExponentOptimum(rho_star, best, tuple(rhos), tuple(vals))


def rates_from_json(doc: Mapping) -> RateTuple:
    unknown = set(doc) - {"r0", "rates", "re"}
    if unknown:
        raise ValueError(f"unknown rate fields: {sorted(unknown)}")
    re = {}
    for key, val in doc.get("re", {}).items():
        re[tuple(int(x) for x in str(key).strip("[]").split(",") if x.strip())] = val
    return RateTuple(float(doc.get("r0", 0.0)), tuple(doc["rates"]), re)
