"""Desk-scale secure multiplex coding with exact information measures.

The encoder takes secrets ``s_1..s_T``, draws the randomness ``s_{T+1}``
uniformly, maps the full tuple through ``f^{-1}`` to a private message
``b`` of the underlying BCD code, and transmits ``v^n(b, e)`` through the
artificial-noise channel ``P_{X|V}``. Bob decodes ``(b, e)`` by maximum
likelihood and applies ``f``.

Everything downstream of the codebook is computed exactly by enumerating
Eve's and Bob's n-fold output alphabets, so block lengths stay tiny.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from secmux import families, gf, info
from secmux.channels import Channel, MarkovSpec, as_distribution, compose, product_extend, uniform
from secmux.errors import check_guard
from secmux.regions import markov_information, subset_label

CODEBOOK_LIMIT = 2**20
LEAKAGE_LIMIT = 2**26


@dataclass(frozen=True, eq=False)
class Codebook:
    """``u_words[e]`` and ``v_words[e, b]``: symbol sequences of length ``n``."""

    u_words: np.ndarray
    v_words: np.ndarray

    def __post_init__(self):
        u = np.array(self.u_words, dtype=np.int64)
        v = np.array(self.v_words, dtype=np.int64)
        if u.ndim != 2 or v.ndim != 3 or v.shape[0] != u.shape[0] or v.shape[2] != u.shape[1]:
            raise ValueError("codebook arrays must have shapes (N_e, n) and (N_e, N_b, n)")
        object.__setattr__(self, "u_words", u)
        object.__setattr__(self, "v_words", v)

    @property
    def n(self) -> int:
        return self.u_words.shape[1]

    @property
    def n_e(self) -> int:
        return self.u_words.shape[0]

    @property
    def n_b(self) -> int:
        return self.v_words.shape[1]

    def v_indices(self, v_size: int) -> np.ndarray:
        """Lexicographic index of every v-codeword in ``V^n``, shape (N_e, N_b)."""
        if self.v_words.max(initial=0) >= v_size:
            raise ValueError("codeword symbol outside the V alphabet")
        return self.v_words @ gf.index_weights(self.n, v_size)

    def to_json(self) -> dict:
        return {"u": self.u_words.tolist(), "v": self.v_words.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> Codebook:
        unknown = set(doc) - {"u", "v"}
        if unknown:
            raise ValueError(f"unknown codebook fields: {sorted(unknown)}")
        v = np.array(doc["v"], dtype=np.int64)
        u = np.array(doc["u"], dtype=np.int64) if "u" in doc else np.zeros(v.shape[::2], dtype=np.int64)
        return cls(u, v)


def _draw(rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling: ``rows[..., :]`` are pmfs, one uniform per draw."""
    cdf = np.cumsum(rows, axis=-1)
    out = (uniforms[..., None] >= cdf).sum(axis=-1)
    return np.minimum(out, rows.shape[-1] - 1)


def build_codebook(n: int, p_u, p_v_given_u: Channel, n_e: int, n_b: int,
                   rng: np.random.Generator) -> Codebook:
    """Random superposition codebook.

    ``n_e`` u-words are drawn i.i.d. from ``P_U^n``; for each, ``n_b``
    v-words are drawn from ``P^n_{V|U}(. | u^n)``.
    """
    p_u = as_distribution(p_u, "P_U")
    if p_v_given_u.inputs != p_u.size:
        raise ValueError("P_{V|U} rows must match |U|")
    if n < 1 or n_e < 1 or n_b < 1:
        raise ValueError("block length and message counts must be positive")
    check_guard("codebook-alphabet", p_v_given_u.outputs**n, CODEBOOK_LIMIT)
    u = _draw(np.broadcast_to(p_u, (n_e, n, p_u.size)), rng.random((n_e, n)))
    rows = p_v_given_u.matrix[u]  # (N_e, n, |V|)
    v = _draw(np.broadcast_to(rows[:, None], (n_e, n_b, n, rows.shape[-1])), rng.random((n_e, n_b, n)))
    return Codebook(u, v)


def _bijection_table(f, layout: families.MessageLayout) -> np.ndarray:
    if isinstance(f, gf.GFMatrix):
        if f.shape != (layout.K, layout.K) or f.q != layout.q:
            raise ValueError("map does not act on the message space")
        if not f.is_invertible():
            raise ValueError("encoder map must be invertible")
        return gf.permutation_table(f)
    table = np.array(f, dtype=np.int64)
    if table.shape != (layout.size,) or not np.array_equal(np.sort(table), np.arange(layout.size)):
        raise ValueError("encoder map must be a permutation of the message space")
    return table


@dataclass(frozen=True, eq=False)
class EncoderConfig:
    """Layout, bijection ``f`` (matrix or permutation table), codebook and ``P_{X|V}``."""

    layout: families.MessageLayout
    f: object
    codebook: Codebook
    p_x_given_v: Channel

    def __post_init__(self):
        if self.codebook.n_b != self.layout.size:
            raise ValueError(f"codebook has {self.codebook.n_b} private messages, layout needs {self.layout.size}")
        table = _bijection_table(self.f, self.layout)
        object.__setattr__(self, "f_table", table)
        object.__setattr__(self, "f_inverse", np.argsort(table))
        self.codebook.v_indices(self.p_x_given_v.inputs)

    @property
    def n(self) -> int:
        return self.codebook.n

    @property
    def r_p(self) -> float:
        return math.log(self.layout.size) / self.n

    def r_subset(self, subset) -> float:
        return math.log(self.layout.subset_size(subset)) / self.n


def message_index(layout: families.MessageLayout, secrets: Sequence[int], randomness: int = 0) -> int:
    """Index in ``B`` of ``(s_1, ..., s_T, s_{T+1})`` given per-factor indices."""
    if len(secrets) != layout.T:
        raise ValueError(f"expected {layout.T} secrets, got {len(secrets)}")
    idx = 0
    for i, s in enumerate([*secrets, randomness], start=1):
        size = layout.factor_size(i)
        if not 0 <= int(s) < size:
            raise ValueError(f"message {s} outside S_{i} of size {size}")
        idx = idx * size + int(s)
    return idx


def split_message(layout: families.MessageLayout, idx: int) -> tuple[int, ...]:
    """Inverse of :func:`message_index`: per-factor indices ``(s_1, ..., s_{T+1})``."""
    parts = []
    for i in range(layout.T + 1, 0, -1):
        idx, r = divmod(idx, layout.factor_size(i))
        parts.append(r)
    return tuple(reversed(parts))


def encode(secrets: Sequence[int], e: int, config: EncoderConfig, rng: np.random.Generator) -> np.ndarray:
    """Channel input ``x^n`` for the secrets and common message ``e``."""
    if not 0 <= e < config.codebook.n_e:
        raise ValueError(f"common message {e} outside [0, {config.codebook.n_e})")
    layout = config.layout
    randomness = int(rng.integers(layout.factor_size(layout.T + 1)))
    s = message_index(layout, secrets, randomness)
    b = config.f_inverse[s]
    v = config.codebook.v_words[e, b]
    return _draw(config.p_x_given_v.matrix[v], rng.random(v.size))


def codeword_likelihoods(config: EncoderConfig, receiver: Channel) -> np.ndarray:
    """``P(o^n | v^n(e, b))`` through ``P_{X|V}`` then ``receiver``, shape (N_e, N_b, |O|^n)."""
    per_symbol = compose(config.p_x_given_v, receiver)
    w = product_extend(per_symbol, config.n).matrix
    return w[config.codebook.v_indices(per_symbol.inputs)]


def decode(y: Sequence[int], config: EncoderConfig, bob: Channel) -> tuple[tuple[int, ...], int]:
    """ML estimate of ``((s_1, ..., s_{T+1}), e)`` from Bob's output sequence."""
    w = codeword_likelihoods(config, bob)
    y_idx = int(np.asarray(y) @ gf.index_weights(config.n, bob.outputs))
    c = int(np.argmax(w[:, :, y_idx].ravel()))
    e, b = divmod(c, config.codebook.n_b)
    return split_message(config.layout, int(config.f_table[b])), e


# -- exact leakage ----------------------------------------------------------------

@dataclass(frozen=True)
class LeakageEntry:
    subset: tuple[int, ...]
    information: float
    conditional_entropy: float
    max_entropy: float
    n: int

    @property
    def equivocation_rate(self) -> float:
        return self.conditional_entropy / self.n

    def to_json(self) -> dict:
        return {
            "subset": list(self.subset),
            "information": self.information,
            "conditional_entropy": self.conditional_entropy,
            "equivocation_rate": self.equivocation_rate,
            "max_entropy": self.max_entropy,
        }


def _e_dist(config: EncoderConfig, e_dist) -> np.ndarray:
    if e_dist is None:
        return uniform(config.codebook.n_e)
    p = as_distribution(e_dist, "P_E")
    if p.size != config.codebook.n_e:
        raise ValueError("common-message distribution has the wrong length")
    return p


def _leakage_from_likelihoods(w: np.ndarray, codes: np.ndarray, m_size: int, p_e: np.ndarray,
                              eve_knows_common: bool, subset, n: int) -> LeakageEntry:
    n_e, n_b, n_z = w.shape
    weighted = w * (p_e[:, None, None] / n_b)  # P(e, b, z)
    onehot = np.zeros((n_b, m_size))
    onehot[np.arange(n_b), codes] = 1.0
    if eve_knows_common:
        joint = np.einsum("bs,ebz->sze", onehot, weighted).reshape(m_size, n_z * n_e)
    else:
        joint = onehot.T @ weighted.sum(axis=0)
    mi = info.mutual_information(joint)
    h_cond = info.entropy(joint) - info.entropy(joint.sum(axis=0))
    return LeakageEntry(tuple(subset), mi, h_cond, math.log(m_size), n)


def exact_leakage(config: EncoderConfig, subset, eve: Channel, e_dist=None,
                  eve_knows_common: bool = False) -> LeakageEntry:
    """Exact ``I(S_I; Z^n)`` and ``H(S_I | Z^n)`` with uniform secrets and randomness.

    With ``eve_knows_common`` the common message is handed to Eve and the
    quantities become ``I(S_I; Z^n, E)`` and ``H(S_I | Z^n, E)``.
    """
    layout = config.layout
    subset = families.normalize_subset(layout, subset)
    n_z = eve.outputs**config.n
    check_guard("exact-leakage", n_z * layout.size * config.codebook.n_e, LEAKAGE_LIMIT)
    w = codeword_likelihoods(config, eve)
    codes = families.projection_codes(layout, subset)[config.f_table]
    return _leakage_from_likelihoods(w, codes, layout.subset_size(subset), _e_dist(config, e_dist),
                                     eve_knows_common, subset, config.n)


@dataclass
class LeakageReport:
    """Exact leakage per subset, Bob's error and the private-message rate ``R_p``."""

    entries: dict[tuple[int, ...], LeakageEntry]
    bob_error: float
    r_p: float
    bounds: dict[tuple[int, ...], float] = field(default_factory=dict)

    def conservation_gap(self) -> float:
        """Largest ``|I + H - log prod |S_i||`` over the entries."""
        return max(abs(e.information + e.conditional_entropy - e.max_entropy) for e in self.entries.values())

    def rows(self) -> list[dict]:
        out = []
        for s, e in self.entries.items():
            row = e.to_json()
            row["subset"] = subset_label(s)
            row["bound"] = self.bounds.get(s)
            row["bob_error"] = self.bob_error
            row["r_p"] = self.r_p
            out.append(row)
        return out

    def to_json(self) -> dict:
        return {
            "r_p": self.r_p,
            "bob_error": self.bob_error,
            "entries": self.rows(),
        }


def information_bound(spec: MarkovSpec, eve: Channel, n: int, r_i: float, r_p: float,
                      grid_points: int = 64) -> float:
    """Ensemble bound on ``I(S_I; Z^n)`` from Jensen: ``min_rho log(RHS(rho)) / rho``.

    ``RHS`` is the single-letter right side used in :func:`bound_check`.
    """
    p_zv = compose(spec.p_x_given_v, eve)
    best = math.inf
    for k in range(1, grid_points + 1):
        rho = k / grid_points
        x = n * (rho * (r_i - r_p) + info.averaged_phi(rho, p_zv, spec.p_u, spec.p_v_given_u))
        best = min(best, np.logaddexp(0.0, x) / rho)
    return float(best)


def leakage_report(config: EncoderConfig, bob: Channel, eve: Channel, subsets=None, e_dist=None,
                   eve_knows_common: bool = False, spec: MarkovSpec | None = None) -> LeakageReport:
    """Exact leakage for every subset (default: nonempty subsets of the secrets) and Bob's error.

    When the generating chain ``spec`` is given, each entry also carries the
    ensemble bound from :func:`information_bound`.
    """
    layout = config.layout
    subsets = layout.subsets() if subsets is None else [families.normalize_subset(layout, s) for s in subsets]
    entries = {s: exact_leakage(config, s, eve, e_dist, eve_knows_common) for s in subsets}
    bounds = {}
    if spec is not None:
        bounds = {s: information_bound(spec, eve, config.n, config.r_subset(s), config.r_p) for s in subsets}
    return LeakageReport(entries, bob_error_probability(config, bob, e_dist), config.r_p, bounds)


# -- decoding error -----------------------------------------------------------------

def _ml_decisions(w: np.ndarray) -> np.ndarray:
    """Decoded flat index ``e * N_b + b`` for every output; ties go to the lowest index."""
    return np.argmax(w.reshape(-1, w.shape[-1]), axis=0)


def _per_message_error(w: np.ndarray, wrong: np.ndarray) -> np.ndarray:
    """``sum_y P(y | c) [wrong[c, y]]`` for every flat codeword index ``c``."""
    flat = w.reshape(-1, w.shape[-1])
    return np.where(wrong, flat, 0.0).sum(axis=1).reshape(w.shape[:2])


def bcd_error_probability(codebook: Codebook, p_x_given_v: Channel, bob: Channel, e_dist=None) -> float:
    """Average ML error of the raw BCD code over uniform ``b`` and ``e ~ e_dist``."""
    per_symbol = compose(p_x_given_v, bob)
    w = product_extend(per_symbol, codebook.n).matrix[codebook.v_indices(per_symbol.inputs)]
    p_e = uniform(codebook.n_e) if e_dist is None else as_distribution(e_dist, "P_E")
    dec = _ml_decisions(w)
    wrong = dec[None, :] != np.arange(codebook.n_e * codebook.n_b)[:, None]
    err = _per_message_error(w, wrong)
    return math.fsum(
        p_e[e] / codebook.n_b * err[e, b] for e in range(codebook.n_e) for b in range(codebook.n_b)
    )


def bob_error_probability(config: EncoderConfig, bob: Channel, e_dist=None, scope: str = "all") -> float:
    """Average ML error of the multiplex scheme, enumerating messages ``s``.

    ``scope="all"`` counts any error in ``(s_1..s_{T+1}, e)``; because ``f``
    only relabels ``b`` this equals :func:`bcd_error_probability` exactly.
    ``scope="secrets"`` counts errors in ``(s_1..s_T, e)`` only.
    """
    if scope not in ("all", "secrets"):
        raise ValueError(f"unknown error scope {scope!r}")
    w = codeword_likelihoods(config, bob)
    p_e = _e_dist(config, e_dist)
    n_e, n_b = config.codebook.n_e, config.codebook.n_b
    dec = _ml_decisions(w)
    dec_e, dec_b = np.divmod(dec, n_b)
    flat = np.arange(n_e * n_b)
    true_e, true_b = np.divmod(flat, n_b)
    if scope == "all":
        wrong = dec[None, :] != flat[:, None]
    else:
        layout = config.layout
        secret_codes = families.projection_codes(layout, range(1, layout.T + 1))[config.f_table]
        wrong = (dec_e[None, :] != true_e[:, None]) | (
            secret_codes[dec_b][None, :] != secret_codes[true_b][:, None]
        )
    err = _per_message_error(w, wrong)
    return math.fsum(
        p_e[e] / n_b * err[e, config.f_inverse[s]] for e in range(n_e) for s in range(config.layout.size)
    )


# -- ensemble experiments -------------------------------------------------------------

@dataclass
class CandidateResult:
    f_index: int
    codebook_index: int
    leakage: dict[tuple[int, ...], LeakageEntry]
    error: float

    def to_json(self) -> dict:
        return {
            "f_index": self.f_index,
            "codebook_index": self.codebook_index,
            "error": self.error,
            "leakage": {subset_label(s): e.to_json() for s, e in self.leakage.items()},
        }


def evaluate_candidates(fs: Sequence, codebooks: Sequence[Codebook], layout: families.MessageLayout,
                        p_x_given_v: Channel, bob: Channel, eve: Channel, subsets=None,
                        e_dist=None, eve_knows_common: bool = False,
                        threads: int = 1) -> list[CandidateResult]:
    """Exact leakage for every subset and Bob's error, for every (f, codebook) pair.

    Pairs are ordered f-major. Per-codebook likelihoods are computed once
    and shared across maps.
    """
    subsets = layout.subsets() if subsets is None else [families.normalize_subset(layout, s) for s in subsets]
    if not fs or not codebooks:
        raise ValueError("need at least one map and one codebook")
    tables = [_bijection_table(f, layout) for f in fs]
    base = [EncoderConfig(layout, tables[0], cb, p_x_given_v) for cb in codebooks]
    n_z = eve.outputs ** codebooks[0].n
    check_guard("exact-leakage", n_z * layout.size * max(cb.n_e for cb in codebooks), LEAKAGE_LIMIT)
    w_eve = [codeword_likelihoods(cfg, eve) for cfg in base]
    errors = [bcd_error_probability(cb, p_x_given_v, bob, e_dist) for cb in codebooks]
    proj = {s: families.projection_codes(layout, s) for s in subsets}

    def run(pair):
        fi, ci = pair
        p_e = _e_dist(base[ci], e_dist)
        leak = {
            s: _leakage_from_likelihoods(w_eve[ci], proj[s][tables[fi]], layout.subset_size(s), p_e,
                                         eve_knows_common, s, codebooks[ci].n)
            for s in subsets
        }
        return CandidateResult(fi, ci, leak, errors[ci])

    pairs = [(fi, ci) for fi in range(len(tables)) for ci in range(len(codebooks))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, pairs))
    return [run(p) for p in pairs]


@dataclass
class SearchResult:
    found: bool
    best: CandidateResult | None
    thresholds: dict[str, float]
    averages: dict[str, float]
    candidates: list[CandidateResult] = field(default_factory=list)

    def to_json(self, verbose: bool = False) -> dict:
        out = {
            "found": self.found,
            "best": None if self.best is None else self.best.to_json(),
            "thresholds": dict(self.thresholds),
            "averages": dict(self.averages),
        }
        if verbose:
            out["candidates"] = [c.to_json() for c in self.candidates]
        return out


def existence_search(candidates: list[CandidateResult], T: int,
                     thresholds: dict[str, float] | None = None) -> SearchResult:
    """Pick a pair whose leakages and error all sit within the thresholds.

    Default thresholds are ``2 * 2^T`` times the candidate averages, which
    by Markov's inequality and a union bound some pair always meets. Among
    qualifying pairs the one with the least total leakage wins, then the
    least error, then the earliest.
    """
    if not candidates:
        raise ValueError("no candidates to search")
    subsets = list(candidates[0].leakage)
    averages = {
        subset_label(s): math.fsum(c.leakage[s].information for c in candidates) / len(candidates)
        for s in subsets
    }
    averages["error"] = math.fsum(c.error for c in candidates) / len(candidates)
    if thresholds is None:
        thresholds = {k: 2 * 2**T * v for k, v in averages.items()}
    missing = set(averages) - set(thresholds)
    if missing:
        raise ValueError(f"thresholds missing for {sorted(missing)}")

    def ok(c: CandidateResult) -> bool:
        return c.error <= thresholds["error"] and all(
            c.leakage[s].information <= thresholds[subset_label(s)] for s in subsets
        )

    eligible = [(math.fsum(c.leakage[s].information for s in subsets), c.error, i)
                for i, c in enumerate(candidates) if ok(c)]
    best = candidates[min(eligible)[2]] if eligible else None
    return SearchResult(best is not None, best, dict(thresholds), averages, list(candidates))


@dataclass
class BoundRow:
    subset: tuple[int, ...]
    rho: float
    n: int
    lhs: float
    rhs_single_letter: float
    rhs_codebook: float
    r_i: float
    r_p: float
    i_vz_u: float
    phi_rate: float
    leakage_rate_bound: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs_single_letter + 1e-10

    @property
    def epsilon(self) -> float:
        """Gap between the averaged-phi rate and ``I(V;Z|U)``; vanishes as rho -> 0."""
        return self.phi_rate - self.i_vz_u

    @property
    def equivocation_rate_bound(self) -> float:
        return self.r_i - self.leakage_rate_bound

    @property
    def bound_applicable(self) -> bool:
        return self.r_i - self.r_p + self.phi_rate >= 0

    @property
    def rate_setting_feasible(self) -> bool:
        """Full secrecy for this subset needs ``0 > R_I - R_p + I(V;Z|U)``."""
        return self.r_i - self.r_p + self.i_vz_u < 0

    def to_json(self) -> dict:
        return {
            "subset": list(self.subset),
            "rho": self.rho,
            "n": self.n,
            "lhs": self.lhs,
            "rhs_single_letter": self.rhs_single_letter,
            "rhs_codebook": self.rhs_codebook,
            "passed": self.passed,
            "r_i": self.r_i,
            "r_p": self.r_p,
            "i_vz_u": self.i_vz_u,
            "phi_rate": self.phi_rate,
            "epsilon": self.epsilon,
            "leakage_rate_bound": self.leakage_rate_bound,
            "equivocation_rate_bound": self.equivocation_rate_bound,
            "bound_applicable": self.bound_applicable,
            "rate_setting_feasible": self.rate_setting_feasible,
        }


def bound_check(candidates: list[CandidateResult], codebooks: Sequence[Codebook],
                layout: families.MessageLayout, spec: MarkovSpec, eve: Channel, subset,
                rhos: Sequence[float], e_dist=None) -> list[BoundRow]:
    """Compare the ensemble average of ``exp(rho I(S_I; Z^n))`` with its bounds.

    ``rhs_single_letter`` is ``1 + [exp(rho (R_I - R_p)) sum_u P_U(u) exp(phi(rho, P_{Z|V}, P_{V|U=u}))]^n``
    and holds on average over the full random-codebook ensemble.
    ``rhs_codebook`` is the per-codebook psi bound averaged over the given
    codebooks; it holds for any codebooks when the maps form a
    two-universal family.
    """
    subset = families.normalize_subset(layout, subset)
    n = codebooks[0].n
    r_i = math.log(layout.subset_size(subset)) / n
    r_p = math.log(layout.size) / n
    m_over_b = layout.subset_size(subset) / layout.size
    p_zv = compose(spec.p_x_given_v, eve)
    w_n = product_extend(p_zv, n)
    i_vz_u = markov_information(spec, eve, eve).i_vz_u
    info_values = np.array([c.leakage[subset].information for c in candidates])
    two_t = 2 * 2**layout.T
    rows = []
    for rho in rhos:
        rho = float(rho)
        if not 0.0 < rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {rho}")
        lhs = math.fsum(np.exp(rho * info_values)) / info_values.size
        avg_phi = info.averaged_phi(rho, p_zv, spec.p_u, spec.p_v_given_u)
        rhs = 1.0 + math.exp(n * (rho * (r_i - r_p) + avg_phi))
        per_codebook = []
        for cb in codebooks:
            p_e = uniform(cb.n_e) if e_dist is None else as_distribution(e_dist, "P_E")
            idx = cb.v_indices(p_zv.inputs)
            terms = []
            for e in range(cb.n_e):
                empirical = np.bincount(idx[e], minlength=w_n.inputs) / cb.n_b
                terms.append(p_e[e] * m_over_b**rho * math.exp(info.psi(rho, w_n, empirical)))
            per_codebook.append(1.0 + math.fsum(terms))
        phi_rate = avg_phi / rho
        rows.append(BoundRow(
            subset, rho, n, lhs, rhs, math.fsum(per_codebook) / len(per_codebook),
            r_i, r_p, i_vz_u, phi_rate,
            (1.0 + math.log(two_t)) / (n * rho) + r_i - r_p + phi_rate,
        ))
    return rows
