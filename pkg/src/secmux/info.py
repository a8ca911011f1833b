"""Shannon functionals in nats and the Renyi-type functionals psi and phi.

``psi(rho, W, P)`` is ``log sum_z sum_l P(l) W(z|l)^(1+rho) P_Z(z)^(-rho)`` and
``phi(rho, W, P)`` is ``log sum_z (sum_l P(l) W(z|l)^(1/(1-rho)))^(1-rho)``,
the latter being Gallager's E_0 up to sign. Both are evaluated as
log-sum-exp over the nonzero terms only, so impossible outcomes never meet
a negative power.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp, xlogy

from secmux.channels import Channel, as_distribution

JOINT_TOL = 1e-10


def check_joint(p, ndim: int) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D joint distribution, got {p.ndim}-D")
    if (p < 0).any() or abs(p.sum() - 1.0) > JOINT_TOL:
        raise ValueError("joint distribution is not on the probability simplex")
    return p


def entropy(p) -> float:
    """Shannon entropy in nats of a pmf of any shape (0 log 0 = 0)."""
    p = np.asarray(p, dtype=np.float64).ravel()
    if (p < 0).any() or abs(p.sum() - 1.0) > JOINT_TOL:
        raise ValueError("entropy needs a probability vector")
    return float(-xlogy(p, p).sum())


def binary_entropy(p: float) -> float:
    return entropy([p, 1.0 - p])


def mutual_information(joint) -> float:
    """``I(A;B)`` for a 2-D joint ``P[a, b]``."""
    p = check_joint(joint, 2)
    pa = p.sum(axis=1, keepdims=True)
    pb = p.sum(axis=0, keepdims=True)
    return float((xlogy(p, p) - xlogy(p, pa * pb)).sum())


def conditional_mutual_information(joint) -> float:
    """``I(A;B|C)`` for a 3-D joint ``P[a, b, c]``."""
    p = check_joint(joint, 3)
    pac = p.sum(axis=1, keepdims=True)
    pbc = p.sum(axis=0, keepdims=True)
    pc = p.sum(axis=(0, 1), keepdims=True)
    return float((xlogy(p, p) + xlogy(p, pc) - xlogy(p, pac) - xlogy(p, pbc)).sum())


def joint_from_channel(p_in, channel: Channel) -> np.ndarray:
    """``P(l, z) = P_L(l) W(z|l)``."""
    p_in = as_distribution(p_in)
    if p_in.size != channel.inputs:
        raise ValueError("prior length does not match channel inputs")
    return p_in[:, None] * channel.matrix


def _inputs(channel: Channel, p_l):
    p_l = as_distribution(p_l, "P_L")
    if p_l.size != channel.inputs:
        raise ValueError("prior length does not match channel inputs")
    return channel.matrix, p_l


def psi(rho: float, channel: Channel, p_l) -> float:
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"psi needs 0 < rho <= 1, got {rho}")
    w, p_l = _inputs(channel, p_l)
    p_z = p_l @ w
    live = (p_l[:, None] > 0) & (w > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.log(p_l)[:, None] + (1.0 + rho) * np.log(w) - rho * np.log(p_z)[None, :]
    return float(logsumexp(terms[live]))


def phi(rho: float, channel: Channel, p_l) -> float:
    if not 0.0 < rho < 1.0:
        raise ValueError(f"phi needs 0 < rho < 1, got {rho}")
    w, p_l = _inputs(channel, p_l)
    live = (p_l[:, None] > 0) & (w > 0)
    with np.errstate(divide="ignore"):
        terms = np.log(p_l)[:, None] + np.log(w) / (1.0 - rho)
    terms = np.where(live, terms, -np.inf)
    reachable = live.any(axis=0)
    inner = logsumexp(terms[:, reachable], axis=0)
    return float(logsumexp((1.0 - rho) * inner))


def phi_at_one(channel: Channel, p_l) -> float:
    """The rho -> 1 limit of phi: ``log sum_z max_{l : P(l) > 0} W(z|l)``."""
    w, p_l = _inputs(channel, p_l)
    return float(math.log(w[p_l > 0].max(axis=0).sum()))


def phi_closed(rho: float, channel: Channel, p_l) -> float:
    """phi on ``(0, 1]``, using the limit form at ``rho = 1``."""
    if rho == 1.0:
        return phi_at_one(channel, p_l)
    return phi(rho, channel, p_l)


def averaged_phi(rho: float, channel: Channel, p_u, p_v_given_u: Channel) -> float:
    """``log sum_u P_U(u) exp(phi(rho, W, P_{V|U=u}))``."""
    p_u = as_distribution(p_u, "P_U")
    vals = np.array([phi_closed(rho, channel, row) for row in p_v_given_u.matrix])
    live = p_u > 0
    return float(logsumexp(vals[live], b=p_u[live]))
