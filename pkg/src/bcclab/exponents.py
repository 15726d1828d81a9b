"""Gallager-style functionals and the leakage exponents built from them.

psi(rho, W, P)  = log sum_{z,l} P(l) W(z|l)^(1+rho) P_Z(z)^(-rho)
phi(rho, W, P)  = log sum_z ( sum_l P(l) W(z|l)^(1/(1-rho)) )^(1-rho)
phi_avg         = log sum_u Q_U(u) exp(phi(rho, W, Q_{V|U}(.|u)))

phi at rho = 1 is its limit, log sum_z max_{l in supp P} W(z|l).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import DimensionError, ValidationError
from .prob import (Channel, Dist, _check_input, compose, cond_mutual_info,
                   product_extension)

RHO_MIN = 1e-6
RHO_XTOL = 1e-9


def _check_rho(rho, closed_top=True):
    ok = 0.0 < rho <= 1.0 if closed_top else 0.0 < rho < 1.0
    if not ok:
        raise ValidationError(f"rho={rho!r} outside (0, 1]")


def _logs(w: Channel, p: Dist):
    _check_input(p, w)
    with np.errstate(divide="ignore"):
        return np.log(p.probs), np.log(w.rows)


def psi(rho: float, w: Channel, p: Dist) -> float:
    _check_rho(rho)
    logp, logw = _logs(w, p)
    p_z = p.probs @ w.rows
    with np.errstate(divide="ignore"):
        log_pz = np.log(p_z)
    # zero-mass z columns carry W(z|l) = 0 for every l in supp(P)
    terms = logp[:, None] + (1.0 + rho) * logw - rho * np.where(p_z > 0, log_pz, 0.0)
    return float(logsumexp(terms))


def _phi_terms(rho: float, logp: np.ndarray, logw: np.ndarray) -> np.ndarray:
    """Per-output log of (sum_l P(l) W(z|l)^(1/(1-rho)))^(1-rho)."""
    if rho == 1.0:
        masked = np.where(np.isfinite(logp)[:, None], logw, -np.inf)
        return masked.max(axis=0)
    inner = logsumexp(logp[:, None] + logw / (1.0 - rho), axis=0)
    return (1.0 - rho) * inner


def phi(rho: float, w: Channel, p: Dist) -> float:
    _check_rho(rho)
    logp, logw = _logs(w, p)
    with np.errstate(invalid="ignore"):
        return float(logsumexp(_phi_terms(rho, logp, logw)))


def phi_avg(rho: float, w: Channel, q_v_given_u: Channel, q_u: Dist) -> float:
    _check_rho(rho)
    _check_input(q_u, q_v_given_u)
    if q_v_given_u.n_outputs != w.n_inputs:
        raise DimensionError(
            f"V alphabet {q_v_given_u.n_outputs} != channel input {w.n_inputs}")
    with np.errstate(divide="ignore"):
        logw = np.log(w.rows)
        logqv = np.log(q_v_given_u.rows)
        logqu = np.log(q_u.probs)
    per_u = np.array([logsumexp(_phi_terms(rho, logqv[u], logw))
                      for u in range(q_u.size)])
    return float(logsumexp(logqu + per_u))


@dataclass
class InequalityRecord:
    lhs: float
    rhs: float
    slack: float
    holds: bool


def scaling_inequality_check(rho: float, w: Channel, p: Dist, p_tilde: Dist,
                             c1: float, tol: float = 1e-12) -> InequalityRecord:
    """exp(phi(P)) <= c1 exp(phi(P~)) whenever P <= c1 P~ entrywise."""
    if c1 < 1.0:
        raise ValidationError("c1 must be at least 1")
    if np.any(p.probs > c1 * p_tilde.probs * (1 + 1e-15)):
        raise ValidationError("precondition P <= c1 * P~ violated")
    lhs = math.exp(phi(rho, w, p))
    rhs = c1 * math.exp(phi(rho, w, p_tilde))
    slack = rhs - lhs
    return InequalityRecord(lhs, rhs, slack, slack >= -tol * max(1.0, rhs))


# ------------------------------------------------------------------ exponents


@dataclass
class ExponentQuery:
    """Rates are in nats per symbol; ``xi`` is folded into Eve's channel."""

    w_z: Channel
    q_u: Dist
    q_v_given_u: Channel
    r_s: float
    r_p: float
    r_c: float
    xi: Channel | None = None
    w_y: Channel | None = None

    def __post_init__(self):
        if not (0.0 < self.r_s <= self.r_p):
            raise ValidationError("rates must satisfy 0 < R_s <= R_p")
        if self.r_c <= 0.0:
            raise ValidationError("R_c must be positive")
        _check_input(self.q_u, self.q_v_given_u)
        n_v = self.q_v_given_u.n_outputs
        first = self.xi if self.xi is not None else self.w_z
        if first.n_inputs != n_v:
            raise DimensionError(f"V alphabet {n_v} does not feed the channel chain")
        self.eve_channel()
        if self.w_y is not None:
            self.bob_channel()

    def eve_channel(self) -> Channel:
        return self.w_z if self.xi is None else compose(self.xi, self.w_z)

    def bob_channel(self) -> Channel:
        if self.w_y is None:
            raise ValidationError("query carries no channel to Bob")
        return self.w_y if self.xi is None else compose(self.xi, self.w_y)

    @property
    def rate_gap(self) -> float:
        return self.r_p - self.r_s


@dataclass
class ExponentReport:
    f_s: float | None
    f_c: float | None
    f_i_plus: float
    f_i_minus: float
    rho_star: float
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"f_s": self.f_s, "f_c": self.f_c, "f_i_plus": self.f_i_plus,
                "f_i_minus": self.f_i_minus, "rho_star": self.rho_star,
                "provenance": self.provenance}


def log_epsilon(n: int, rho: float, query: ExponentQuery, nfold: bool = False) -> float:
    """log eps_{n,rho} = n rho (R_s - R_p) + phi_avg.

    With ``nfold`` phi_avg is evaluated on the n-fold product channel and
    inputs; otherwise the single-letter value is scaled by n.
    """
    if n < 1:
        raise ValidationError("n must be positive")
    w = query.eve_channel()
    if not nfold:
        return n * (rho * (query.r_s - query.r_p)
                    + phi_avg(rho, w, query.q_v_given_u, query.q_u))
    q_u_n = query.q_u.probs
    for _ in range(n - 1):
        q_u_n = np.kron(q_u_n, query.q_u.probs)
    val = phi_avg(rho, product_extension(w, n), product_extension(query.q_v_given_u, n),
                  Dist(q_u_n / q_u_n.sum()))
    return n * rho * (query.r_s - query.r_p) + val


def epsilon_n_rho(n: int, rho: float, query: ExponentQuery, nfold: bool = False) -> float:
    return math.exp(log_epsilon(n, rho, query, nfold))


def rho_sweep(query: ExponentQuery, points: int = 101) -> list[dict]:
    w = query.eve_channel()
    rows = []
    for rho in np.linspace(RHO_MIN, 1.0, points):
        rho = float(rho)
        pa = phi_avg(rho, w, query.q_v_given_u, query.q_u)
        rows.append({"rho": rho, "phi_avg": pa,
                     "integrand": rho * query.rate_gap - pa,
                     "log_eps1": rho * (query.r_s - query.r_p) + pa})
    return rows


def _maximize_concave(g, lo, hi):
    grid = np.linspace(lo, hi, 33)
    vals = np.array([g(r) for r in grid])
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    if np.all(second <= 1e-10 * (1 + np.abs(vals[1:-1]))):
        res = minimize_scalar(lambda r: -g(r), bounds=(lo, hi), method="bounded",
                              options={"xatol": RHO_XTOL})
        cands = [(float(-res.fun), float(res.x))]
    else:
        dense = np.linspace(lo, hi, 2**12)
        dvals = np.array([g(r) for r in dense])
        i = int(np.argmax(dvals))
        a, b = dense[max(i - 1, 0)], dense[min(i + 1, dense.size - 1)]
        res = minimize_scalar(lambda r: -g(r), bounds=(a, b), method="bounded",
                              options={"xatol": RHO_XTOL})
        cands = [(float(dvals[i]), float(dense[i])), (float(-res.fun), float(res.x))]
    cands += [(float(g(lo)), lo), (float(g(hi)), hi)]
    # prefer the larger value; ties go to the larger rho
    return max(cands, key=lambda c: (c[0], c[1]))


def leakage_exponent(w: Channel, q_v_given_u: Channel, q_u: Dist,
                     rate_gap: float) -> tuple[float, float]:
    """sup over 0 < rho <= 1 of rho * rate_gap - phi_avg(rho), clamped at 0.

    Returns ``(value, rho_star)``.
    """
    value, rho_star = _maximize_concave(
        lambda r: r * rate_gap - phi_avg(r, w, q_v_given_u, q_u), RHO_MIN, 1.0)
    return max(0.0, value), rho_star


def f_i_plus(query: ExponentQuery) -> tuple[float, float]:
    """F_+ for the query: the leakage exponent at gap R_p - R_s."""
    return leakage_exponent(query.eve_channel(), query.q_v_given_u, query.q_u,
                            query.rate_gap)


def f_i_minus(query: ExponentQuery) -> float:
    """I(V;Z|U) - R_p + R_s, signed."""
    return cond_mutual_info(query.q_u, query.q_v_given_u, query.eve_channel()) \
        - query.r_p + query.r_s


# --------------------------------------------------- error exponent stand-in


def _min_divergence_plus_info(q: Dist, w: Channel, rho: float,
                              iters: int = 5000, tol: float = 1e-13):
    """min_V D(V||W|Q) + rho I(Q,V) by alternating minimization.

    Uses I(Q,V) = min_{q_y} D(V||q_y|Q); for fixed q_y the optimal row is
    V(.|x) ∝ W(.|x)^(1/(1+rho)) q_y^(rho/(1+rho)).
    """
    support = q.probs > 0
    wr = w.rows[support]
    qx = q.probs[support]
    qx = qx / qx.sum()
    q_y = qx @ wr
    prev = np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(iters):
            v = wr ** (1.0 / (1.0 + rho)) * q_y[None, :] ** (rho / (1.0 + rho))
            v /= v.sum(axis=1, keepdims=True)
            q_y = qx @ v
            logratio_w = np.where(v > 0, np.log(v / np.where(wr > 0, wr, 1)), 0.0)
            logratio_y = np.where(v > 0, np.log(v / np.where(q_y > 0, q_y, 1)[None, :]), 0.0)
            div = float(qx @ (v * logratio_w).sum(axis=1))
            info = float(qx @ (v * logratio_y).sum(axis=1))
            obj = div + rho * info
            if abs(prev - obj) < tol:
                break
            prev = obj
    return obj, div, info


def cc_random_coding_exponent(q: Dist, w: Channel, rate: float) -> float:
    """min_V [ D(V||W|Q) + |I(Q,V) - R|^+ ] for constant-composition codes.

    Evaluated through its dual, max over 0 <= rho <= 1 of
    min_V [D(V||W|Q) + rho I(Q,V)] - rho R.
    """
    _check_input(q, w)

    def g(rho):
        return _min_divergence_plus_info(q, w, rho)[0] - rho * rate

    value, _ = _maximize_concave(g, 0.0, 1.0)
    return max(0.0, value)


def ks_error_exponents(query: ExponentQuery, w_y: Channel | None = None):
    """Constant-composition random-coding exponents used as F^s, F^c stand-ins.

    Satellite (Bob): input Q_V through W_Y∘Ξ at rate R_p.
    Cloud (Eve): input Q_U through W_Z∘Ξ∘Q_{V|U} at rate R_c.
    These are not the exponents of the cited superposition-code analysis.
    """
    if w_y is not None:
        query = ExponentQuery(query.w_z, query.q_u, query.q_v_given_u, query.r_s,
                              query.r_p, query.r_c, query.xi, w_y)
    q_v = query.q_v_given_u.output_dist(query.q_u)
    f_s = cc_random_coding_exponent(q_v, query.bob_channel(), query.r_p)
    cloud = compose(query.q_v_given_u, query.eve_channel())
    f_c = cc_random_coding_exponent(query.q_u, cloud, query.r_c)
    return f_s, f_c


def evaluate(query: ExponentQuery) -> ExponentReport:
    fip, rho_star = f_i_plus(query)
    fim = f_i_minus(query)
    f_s = f_c = None
    prov = {"f_i_plus": "sup_rho", "f_i_minus": "closed_form"}
    if query.w_y is not None:
        f_s, f_c = ks_error_exponents(query)
        prov.update(f_s="stand-in", f_c="stand-in")
    return ExponentReport(f_s, f_c, fip, fim, rho_star, prov)
