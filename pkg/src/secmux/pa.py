"""Strengthened privacy amplification: the bound and its exact left side.

For a two-universal family F from L to M and any 0 < rho <= 1::

    E_f exp(rho I(f(L); Z)) <= 1 + |M|^rho E[P_{L|Z}(L|Z)^rho]

When L is uniform the right side can also be written with
``P_L(L)^(-rho) / |L|^rho`` inside the expectation, and for discrete Z that
equals ``(|M|/|L|)^rho exp(psi(rho, P_{Z|L}, P_L))``. All three forms are
reported so they can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from secmux import families, info
from secmux.channels import Channel
from secmux.errors import check_guard

LHS_LIMIT = 2**26
UNIFORM_TOL = 1e-12


@dataclass
class PABoundReport:
    rho: float
    m_size: int
    rhs_bound: float
    forms: dict[str, float]
    lhs_exact: float | None = None
    member_information: list[float] = field(default_factory=list)

    @property
    def margin(self) -> float | None:
        return None if self.lhs_exact is None else self.rhs_bound - self.lhs_exact

    def passed(self, tol: float = 1e-10) -> bool:
        return self.lhs_exact is None or self.lhs_exact <= self.rhs_bound + tol

    def to_json(self, verbose: bool = False) -> dict:
        out = {
            "rho": self.rho,
            "m_size": self.m_size,
            "rhs_bound": self.rhs_bound,
            "forms": dict(self.forms),
            "lhs_exact": self.lhs_exact,
            "margin": self.margin,
        }
        if verbose:
            out["member_information"] = list(self.member_information)
        return out


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    return rho


def is_uniform(p) -> bool:
    p = np.asarray(p, dtype=np.float64)
    return bool(np.abs(p - 1.0 / p.size).max() <= UNIFORM_TOL)


def pa_rhs(rho: float, m_size: int, joint, forms: tuple[str, ...] | None = None) -> PABoundReport:
    """Right-hand side of the privacy amplification bound for a joint ``P[l, z]``.

    ``forms`` selects among ``"general"``, ``"uniform"`` and ``"discrete"``.
    By default the general form is always computed and the other two are
    added when the L-marginal is uniform; requesting them explicitly on a
    non-uniform L is an error.
    """
    rho = _check_rho(rho)
    if m_size < 1:
        raise ValueError("|M| must be positive")
    p = info.check_joint(joint, 2)
    p_l = p.sum(axis=1)
    p_z = p.sum(axis=0)
    uniform = is_uniform(p_l)
    if forms is None:
        forms = ("general", "uniform", "discrete") if uniform else ("general",)
    elif not uniform and set(forms) & {"uniform", "discrete"}:
        raise ValueError("uniform and discrete forms need a uniformly distributed L")
    live = p > 0
    cond = np.divide(p, p_z[None, :], out=np.zeros_like(p), where=p_z[None, :] > 0)
    n_l = p.shape[0]
    values: dict[str, float] = {}
    if "general" in forms:
        expect = float((p[live] * cond[live] ** rho).sum())
        values["general"] = 1.0 + m_size**rho * expect
    if "uniform" in forms:
        p_l_grid = np.broadcast_to(p_l[:, None], p.shape)
        weighted = float((p[live] * cond[live] ** rho * p_l_grid[live] ** -rho).sum())
        values["uniform"] = 1.0 + m_size**rho * weighted / n_l**rho
    if "discrete" in forms:
        keep = p_l > 0
        w = Channel(p[keep] / p_l[keep, None])
        values["discrete"] = 1.0 + (m_size / n_l) ** rho * math.exp(info.psi(rho, w, p_l[keep]))
    rhs = values.get("general", next(iter(values.values())))
    return PABoundReport(rho, m_size, rhs, values)


def member_information(family: families.HashFamily, joint, subset) -> np.ndarray:
    """``I(alpha_I(f(L)); Z)`` for every member ``f``, from the exact pushforward."""
    p = info.check_joint(joint, 2)
    layout = family.layout
    if p.shape[0] != layout.size:
        raise ValueError(f"L alphabet has {p.shape[0]} symbols, family acts on {layout.size}")
    subset = families.normalize_subset(layout, subset)
    m_size = layout.subset_size(subset)
    n_f = family.size()
    check_guard("pa-lhs", n_f * m_size * p.shape[1], LHS_LIMIT)
    codes = families.projection_codes(layout, subset)[family.tables()]  # (F, |L|)
    pushed = np.zeros((codes.shape[0], m_size, p.shape[1]))
    rows = np.repeat(np.arange(codes.shape[0]), p.shape[0])
    np.add.at(pushed, (rows, codes.ravel()), np.tile(p, (codes.shape[0], 1)))
    outer = pushed.sum(axis=2, keepdims=True) * p.sum(axis=0)[None, None, :]
    return (xlogy(pushed, pushed) - xlogy(pushed, outer)).sum(axis=(1, 2))


def pa_lhs_exact(family: families.HashFamily, rho: float, joint, subset) -> float:
    """``E_f exp(rho I(alpha_I(f(L)); Z))`` averaged over every member."""
    rho = _check_rho(rho)
    mi = member_information(family, joint, subset)
    return math.fsum(np.exp(rho * mi)) / mi.size


def pa_check(family: families.HashFamily, rho: float, joint, subset) -> PABoundReport:
    """Bound and exact left side for one projection of ``family``."""
    rho = _check_rho(rho)
    subset = families.normalize_subset(family.layout, subset)
    report = pa_rhs(rho, family.layout.subset_size(subset), joint)
    mi = member_information(family, joint, subset)
    report.lhs_exact = math.fsum(np.exp(rho * mi)) / mi.size
    report.member_information = mi.tolist()
    return report
