"""Finite distributions, channels and information measures (natural logs).

Channels are row-stochastic matrices: ``rows[x, y] = W(y|x)``.  Everything is
immutable after construction; arrays are exposed read-only.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .errors import BudgetError, DimensionError, ValidationError

NORM_TOL = 1e-12
PRODUCT_GUARD = 2**26


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class Dist:
    """Probability vector over ``range(size)``."""

    __slots__ = ("probs",)

    def __init__(self, probs: Sequence[float] | np.ndarray):
        p = _frozen(probs)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("distribution must be a non-empty vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("distribution has negative or non-finite entries")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValidationError(f"distribution sums to {p.sum()!r}, not 1")
        self.probs = p

    @classmethod
    def normalized(cls, weights) -> "Dist":
        """Explicit renormalization of non-negative weights."""
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0) or w.sum() <= 0:
            raise ValidationError("weights must be non-negative with positive sum")
        return cls(w / w.sum())

    @classmethod
    def uniform(cls, size: int) -> "Dist":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point(cls, size: int, index: int) -> "Dist":
        p = np.zeros(size)
        p[index] = 1.0
        return cls(p)

    @property
    def size(self) -> int:
        return self.probs.size

    def __len__(self):
        return self.probs.size

    def __repr__(self):
        return f"Dist({self.probs.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, Dist) and np.array_equal(self.probs, other.probs)

    __hash__ = None


class Channel:
    """Row-stochastic matrix from an input alphabet to an output alphabet."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        r = _frozen(rows)
        if r.ndim != 2 or r.shape[0] == 0 or r.shape[1] == 0:
            raise ValidationError("channel must be a non-empty matrix")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValidationError("channel has negative or non-finite entries")
        bad = np.abs(r.sum(axis=1) - 1.0) > NORM_TOL
        if np.any(bad):
            raise ValidationError(
                f"channel rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        self.rows = r

    @classmethod
    def normalized(cls, weights) -> "Channel":
        w = np.asarray(weights, dtype=np.float64)
        s = w.sum(axis=1, keepdims=True)
        if np.any(w < 0) or np.any(s <= 0):
            raise ValidationError("weights must be non-negative with positive row sums")
        return cls(w / s)

    @classmethod
    def identity(cls, size: int) -> "Channel":
        return cls(np.eye(size))

    @classmethod
    def bsc(cls, p: float) -> "Channel":
        return cls([[1.0 - p, p], [p, 1.0 - p]])

    @classmethod
    def constant(cls, n_inputs: int, output: Dist | Sequence[float]) -> "Channel":
        out = output.probs if isinstance(output, Dist) else np.asarray(output, float)
        return cls(np.tile(out, (n_inputs, 1)))

    @property
    def n_inputs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.rows.shape[1]

    def row(self, x: int) -> Dist:
        return Dist(self.rows[x])

    def output_dist(self, p: Dist) -> Dist:
        _check_input(p, self)
        out = p.probs @ self.rows
        # float drift from the product stays far below NORM_TOL
        return Dist(out / out.sum())

    def to_json(self) -> dict:
        return {"input": self.n_inputs, "output": self.n_outputs,
                "rows": self.rows.tolist()}

    @classmethod
    def from_json(cls, obj) -> "Channel":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            k, m, rows = int(obj["input"]), int(obj["output"]), obj["rows"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"channel JSON missing field: {exc}") from None
        ch = cls(rows)
        if ch.rows.shape != (k, m):
            raise ValidationError(
                f"channel JSON declares {k}x{m} but rows are {ch.rows.shape}")
        return ch

    def __repr__(self):
        return f"Channel({self.rows.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, Channel) and np.array_equal(self.rows, other.rows)

    __hash__ = None


class JointDist:
    """Probability matrix over a product alphabet ``U x V``."""

    __slots__ = ("probs",)

    def __init__(self, probs):
        p = _frozen(probs)
        if p.ndim != 2 or p.size == 0:
            raise ValidationError("joint distribution must be a non-empty matrix")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("joint distribution has negative entries")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValidationError(f"joint distribution sums to {p.sum()!r}, not 1")
        self.probs = p

    @classmethod
    def from_conditional(cls, q_u: Dist, q_v_given_u: Channel) -> "JointDist":
        _check_input(q_u, q_v_given_u)
        return cls(q_u.probs[:, None] * q_v_given_u.rows)

    @property
    def shape(self):
        return self.probs.shape

    def marginal_u(self) -> Dist:
        return Dist.normalized(self.probs.sum(axis=1))

    def marginal_v(self) -> Dist:
        return Dist.normalized(self.probs.sum(axis=0))

    def conditional_v_given_u(self) -> Channel:
        """Q_{V|U}; rows with zero U-mass are set to uniform (never used)."""
        rows = self.probs.copy()
        s = rows.sum(axis=1)
        rows[s == 0] = 1.0
        return Channel.normalized(rows)

    def __repr__(self):
        return f"JointDist({self.probs.tolist()!r})"


def _check_input(p: Dist, ch: Channel):
    if p.size != ch.n_inputs:
        raise DimensionError(
            f"input distribution has {p.size} symbols, channel expects {ch.n_inputs}")


def _xlogx(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


def entropy(p: Dist | np.ndarray) -> float:
    """Shannon entropy in nats, with ``0 ln 0 = 0``."""
    probs = p.probs if isinstance(p, Dist) else np.asarray(p, dtype=np.float64)
    return float(max(0.0, -_xlogx(probs).sum()))


def mutual_info(p: Dist, ch: Channel) -> float:
    """I(X;Y) = H(Y) - H(Y|X) for input ``p`` through ``ch``."""
    _check_input(p, ch)
    h_out = -_xlogx(p.probs @ ch.rows).sum()
    h_cond = -(p.probs * _xlogx(ch.rows).sum(axis=1)).sum()
    return float(max(0.0, h_out - h_cond))


def cond_mutual_info(q_u: Dist, q_v_given_u: Channel, ch: Channel) -> float:
    """I(V;Z|U) for the chain U -> V -> Z."""
    _check_input(q_u, q_v_given_u)
    if q_v_given_u.n_outputs != ch.n_inputs:
        raise DimensionError(
            f"V alphabet {q_v_given_u.n_outputs} != channel input {ch.n_inputs}")
    z_given_u = q_v_given_u.rows @ ch.rows
    h_z_u = -_xlogx(z_given_u).sum(axis=1)
    h_z_v = -_xlogx(ch.rows).sum(axis=1)
    per_u = h_z_u - q_v_given_u.rows @ h_z_v
    return float(max(0.0, q_u.probs @ per_u))


def compose(first: Channel, second: Channel) -> Channel:
    """Channel that applies ``first`` then ``second``.

    ``compose(xi, w)`` is the channel written W∘Ξ elsewhere: V -> X -> Y with
    ``(W∘Ξ)(y|v) = sum_x W(y|x) Ξ(x|v)``.
    """
    if first.n_outputs != second.n_inputs:
        raise DimensionError(
            f"cannot compose: {first.n_outputs} outputs into {second.n_inputs} inputs")
    rows = first.rows @ second.rows
    return Channel(rows / rows.sum(axis=1, keepdims=True))


def product_extension(ch: Channel, n: int, guard: int = PRODUCT_GUARD) -> Channel:
    """Memoryless n-fold extension ``W^n``.

    Sequences are indexed in base-|alphabet| with the first symbol most
    significant, i.e. the ordering of ``itertools.product``.
    """
    if n < 1:
        raise ValidationError("blocklength must be positive")
    k, m = ch.n_inputs, ch.n_outputs
    if float(k) ** n * float(m) ** n > guard:
        raise BudgetError(f"{k}^{n} x {m}^{n} table exceeds the {guard} entry guard")
    rows = ch.rows
    for _ in range(n - 1):
        rows = np.kron(rows, ch.rows)
    return Channel(rows)


def binary_entropy(p: float) -> float:
    """h_e(p) in nats."""
    return entropy(np.array([p, 1.0 - p]))


def kl_divergence(p, q) -> float:
    """D(p||q) in nats; ``inf`` when p is not absolutely continuous wrt q."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    nz = p > 0
    if np.any(q[nz] == 0):
        return float("inf")
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))
