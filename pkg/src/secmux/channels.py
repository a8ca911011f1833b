"""Discrete memoryless channels and the Markov chain U -> V -> X -> YZ.

A channel is a row-stochastic matrix ``W[input, output]``. Distributions are
plain 1-D float arrays; :func:`as_distribution` validates them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from secmux.errors import check_guard

SIMPLEX_TOL = 1e-12
IDENTITY_TOL = 1e-10
PRODUCT_LIMIT = 2**20


def as_distribution(p, name: str = "distribution") -> np.ndarray:
    p = np.array(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a nonempty vector")
    if (p < 0).any() or abs(p.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"{name} is not on the probability simplex (sum={p.sum()!r})")
    return p


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


@dataclass(frozen=True, eq=False)
class Channel:
    """Conditional distribution ``P(out | in)`` stored as a matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        w = np.array(self.matrix, dtype=np.float64)
        if w.ndim != 2 or 0 in w.shape:
            raise ValueError("channel matrix must be two-dimensional and nonempty")
        if (w < 0).any() or np.abs(w.sum(axis=1) - 1.0).max() > SIMPLEX_TOL:
            raise ValueError("channel rows must be probability distributions")
        w.setflags(write=False)
        object.__setattr__(self, "matrix", w)

    @property
    def inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def outputs(self) -> int:
        return self.matrix.shape[1]

    def output_distribution(self, p_in) -> np.ndarray:
        return np.asarray(p_in, dtype=np.float64) @ self.matrix

    def is_identity(self) -> bool:
        return self.inputs == self.outputs and np.allclose(
            self.matrix, np.eye(self.inputs), atol=IDENTITY_TOL, rtol=0
        )

    def to_json(self) -> dict:
        return {"inputs": self.inputs, "outputs": self.outputs, "rows": self.matrix.tolist()}

    def __repr__(self):
        return f"Channel({self.matrix.tolist()})"


def bsc(p: float) -> Channel:
    """Binary symmetric channel with crossover probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("crossover probability must lie in [0, 1]")
    return Channel([[1 - p, p], [p, 1 - p]])


def bec(eps: float) -> Channel:
    """Binary erasure channel; output 2 is the erasure symbol."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    return Channel([[1 - eps, 0.0, eps], [0.0, 1 - eps, eps]])


def identity_channel(k: int) -> Channel:
    return Channel(np.eye(k))


def constant_channel(inputs: int, p_out) -> Channel:
    """Every input produces ``p_out``: the output is independent of the input."""
    p_out = as_distribution(p_out)
    return Channel(np.tile(p_out, (inputs, 1)))


def compose(a: Channel, b: Channel) -> Channel:
    """Cascade ``a`` then ``b``: ``P(c|a_in) = sum_m a(m|a_in) b(c|m)``."""
    if a.outputs != b.inputs:
        raise ValueError(f"cannot cascade: {a.outputs} outputs into {b.inputs} inputs")
    return Channel(a.matrix @ b.matrix)


def product_extend(c: Channel, n: int) -> Channel:
    """Memoryless n-fold extension, sequences indexed lexicographically."""
    if n < 1:
        raise ValueError("block length must be >= 1")
    check_guard("product-channel", (c.inputs * c.outputs) ** n, PRODUCT_LIMIT)
    if n == 1:
        return c
    return Channel(reduce(np.kron, [c.matrix] * n))


def product_distribution(p, n: int) -> np.ndarray:
    p = as_distribution(p)
    return reduce(np.kron, [p] * n)


def channel_from_json(doc, named: dict | None = None) -> Channel:
    """Build a channel from its JSON form.

    Accepted forms: ``{"inputs", "outputs", "rows"}``, ``{"type": "bsc", "p"}``,
    ``{"type": "bec", "e"}``, ``{"type": "identity", "size"}``,
    ``{"type": "constant", "inputs", "output"}``, or a string naming an
    entry of ``named``.
    """
    if isinstance(doc, str):
        if not named or doc not in named:
            raise ValueError(f"unknown channel name {doc!r}")
        return named[doc]
    if not isinstance(doc, dict):
        raise ValueError(f"channel spec must be an object or a name, got {type(doc).__name__}")
    kind = doc.get("type", "matrix")
    fields = {
        "matrix": {"inputs", "outputs", "rows"},
        "bsc": {"p"},
        "bec": {"e"},
        "identity": {"size"},
        "constant": {"inputs", "output"},
    }
    if kind not in fields:
        raise ValueError(f"unknown channel type {kind!r}")
    unknown = set(doc) - fields[kind] - {"type"}
    if unknown:
        raise ValueError(f"unknown channel fields: {sorted(unknown)}")
    if kind == "bsc":
        return bsc(float(doc["p"]))
    if kind == "bec":
        return bec(float(doc["e"]))
    if kind == "identity":
        return identity_channel(int(doc["size"]))
    if kind == "constant":
        return constant_channel(int(doc["inputs"]), doc["output"])
    ch = Channel(doc["rows"])
    if "inputs" in doc and ch.inputs != doc["inputs"] or "outputs" in doc and ch.outputs != doc["outputs"]:
        raise ValueError("declared channel dimensions do not match rows")
    return ch


@dataclass(frozen=True, eq=False)
class MarkovSpec:
    """``P_U``, ``P_{V|U}`` and ``P_{X|V}`` of a chain U -> V -> X."""

    p_u: np.ndarray
    p_v_given_u: Channel
    p_x_given_v: Channel

    def __post_init__(self):
        object.__setattr__(self, "p_u", as_distribution(self.p_u, "P_U"))
        if self.p_v_given_u.inputs != self.p_u.size:
            raise ValueError("P_{V|U} rows must match |U|")
        if self.p_x_given_v.inputs != self.p_v_given_u.outputs:
            raise ValueError("P_{X|V} rows must match |V|")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.p_u.size, self.p_v_given_u.outputs, self.p_x_given_v.outputs

    @property
    def p_v(self) -> np.ndarray:
        return self.p_u @ self.p_v_given_u.matrix

    @classmethod
    def trivial_u(cls, p_v, p_x_given_v: Channel | None = None) -> MarkovSpec:
        """Chain with ``|U| = 1``; ``V = X`` unless ``p_x_given_v`` is given."""
        p_v = as_distribution(p_v, "P_V")
        if p_x_given_v is None:
            p_x_given_v = identity_channel(p_v.size)
        return cls(np.ones(1), Channel(p_v[None, :]), p_x_given_v)

    def to_json(self) -> dict:
        return {
            "p_u": self.p_u.tolist(),
            "p_v_given_u": self.p_v_given_u.to_json(),
            "p_x_given_v": self.p_x_given_v.to_json(),
        }


def markov_from_json(doc: dict, named: dict | None = None) -> MarkovSpec:
    unknown = set(doc) - {"p_u", "p_v_given_u", "p_x_given_v"}
    if unknown:
        raise ValueError(f"unknown markov fields: {sorted(unknown)}")
    pvu = channel_from_json(doc["p_v_given_u"], named)
    if "p_x_given_v" in doc:
        pxv = channel_from_json(doc["p_x_given_v"], named)
    else:
        pxv = identity_channel(pvu.outputs)
    return MarkovSpec(np.array(doc["p_u"], dtype=float), pvu, pxv)


def joint_from_spec(spec: MarkovSpec, bob: Channel, eve: Channel) -> np.ndarray:
    """Joint pmf ``P(u, v, x, y, z)`` as a 5-D array."""
    nx = spec.p_x_given_v.outputs
    if bob.inputs != nx or eve.inputs != nx:
        raise ValueError("receiver channels must take X as input")
    return np.einsum(
        "u,uv,vx,xy,xz->uvxyz",
        spec.p_u,
        spec.p_v_given_u.matrix,
        spec.p_x_given_v.matrix,
        bob.matrix,
        eve.matrix,
    )


def joint_uvo(spec: MarkovSpec, receiver: Channel) -> np.ndarray:
    """Joint pmf ``P(u, v, o)`` for one receiver output ``o``."""
    p_ov = compose(spec.p_x_given_v, receiver).matrix
    return np.einsum("u,uv,vo->uvo", spec.p_u, spec.p_v_given_u.matrix, p_ov)
