"""Exact leakage by enumeration, and the privacy-amplification bound.

Everything here is computed exactly from the joint law of the secret, the
common message and Eve's output; nothing is estimated from samples except the
ensemble averages in :func:`existence_search`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .codec import CodeSpec, Codebook, make_code_spec, sample_codebook
from .errors import BudgetError, DimensionError, ValidationError
from .exponents import leakage_exponent, phi_avg, psi
from .hashing import HashFamily, fiber_table, sample_hash
from .prob import Channel, Dist, compose, cond_mutual_info
from .seeding import derive, derive_int
from .typeclasses import (TypeSpec, all_sequences, conditional_class_array,
                          count_vshells)

LEAKAGE_BUDGET = 2**26
PA_MAX_L = 2**12


def _xlogy_ratio(p, q):
    """sum p log(p / q) over p > 0."""
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


# ------------------------------------------------------ privacy amplification


@dataclass
class PaRecord:
    lhs: float
    rhs: float
    holds: bool
    members: int
    mean_info: float
    jensen_lhs: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds,
                "members": self.members, "mean_info": self.mean_info,
                "jensen_lhs": self.jensen_lhs, **self.extra}


def pa_rhs(p_l: Dist, w: Channel, m_size: int, rho: float) -> float:
    """1 + |M|^rho E[P_{L|Z}(L|Z)^rho]."""
    joint = p_l.probs[:, None] * w.rows
    p_z = joint.sum(axis=0)
    nz = joint > 0
    post = np.zeros_like(joint)
    with np.errstate(divide="ignore", invalid="ignore"):
        post[nz] = (joint / np.broadcast_to(p_z, joint.shape))[nz]
    return 1.0 + m_size**rho * float(np.sum(joint[nz] * post[nz] ** rho))


def member_informations(p_l: Dist, w: Channel, family: HashFamily, backend=None):
    """I(f(L); Z) for every member f of the family, in enumeration order."""
    if p_l.size != 1 << family.k or w.n_inputs != p_l.size:
        raise DimensionError(f"|L| must be 2^k = {1 << family.k} and match the channel")
    joint = p_l.probs[:, None] * w.rows
    values = family.value_table()
    return kernels.family_info(values, joint, 1 << family.m, backend=backend)


def verify_pa_bound(p_l: Dist, w: Channel, family: HashFamily, rho: float,
                    precision: str = "float", tol: float = 1e-12,
                    backend=None) -> PaRecord:
    """E_f exp(rho I(f(L); Z)) <= 1 + |M|^rho E[P_{L|Z}^rho] over the full family.

    ``precision="mp"`` recomputes both sides with 50-digit mpmath arithmetic
    (|L| <= 64) to rule out float artefacts near equality.
    """
    if not 0.0 < rho <= 1.0:
        raise ValidationError("rho must lie in (0, 1]")
    if p_l.size > PA_MAX_L:
        raise BudgetError(f"|L| = {p_l.size} exceeds {PA_MAX_L}")
    infos = member_informations(p_l, w, family, backend)
    lhs = float(np.mean(np.exp(rho * infos)))
    rhs = pa_rhs(p_l, w, 1 << family.m, rho)
    jensen = math.exp(rho * float(infos.mean()))
    extra = {"rho": rho, "m": family.m, "k": family.k}
    if precision == "mp":
        lhs_mp, rhs_mp = _pa_mpmath(p_l, w, family, rho)
        extra.update(lhs_mp=str(lhs_mp), rhs_mp=str(rhs_mp), holds_mp=bool(lhs_mp <= rhs_mp))
    elif precision != "float":
        raise ValidationError(f"unknown precision {precision!r}")
    return PaRecord(lhs, rhs, lhs <= rhs * (1 + tol), int(infos.size),
                    float(infos.mean()), jensen, extra)


def _pa_mpmath(p_l, w, family, rho):
    import mpmath

    if p_l.size > 64:
        raise BudgetError("mpmath mode supports |L| <= 64")
    with mpmath.workdps(50):
        rho_m = mpmath.mpf(rho)
        joint = [[mpmath.mpf(float(p)) * mpmath.mpf(float(x)) for x in row]
                 for p, row in zip(p_l.probs, w.rows)]
        n_l, n_z = len(joint), len(joint[0])
        p_z = [mpmath.fsum(joint[l][z] for l in range(n_l)) for z in range(n_z)]
        values = family.value_table()
        n_m = 1 << family.m
        acc = mpmath.mpf(0)
        for row in values:
            pm = [[mpmath.mpf(0)] * n_z for _ in range(n_m)]
            for l in range(n_l):
                for z in range(n_z):
                    pm[row[l]][z] += joint[l][z]
            info = mpmath.mpf(0)
            for s in range(n_m):
                ps = mpmath.fsum(pm[s])
                for z in range(n_z):
                    if pm[s][z] > 0:
                        info += pm[s][z] * mpmath.log(pm[s][z] / (ps * p_z[z]))
            acc += mpmath.exp(rho_m * info)
        lhs = acc / len(values)
        post_sum = mpmath.mpf(0)
        for l in range(n_l):
            for z in range(n_z):
                if joint[l][z] > 0:
                    post_sum += joint[l][z] * (joint[l][z] / p_z[z]) ** rho_m
        rhs = 1 + mpmath.mpf(n_m) ** rho_m * post_sum
        return lhs, rhs


@dataclass
class IdentityRecord:
    direct: float
    weighted: float
    closed_form: float
    max_rel_err: float
    holds: bool


def check_uniform_identity(p_l: Dist, w: Channel, m_size: int, rho: float,
                           tol: float = 1e-12) -> IdentityRecord:
    """For uniform L, |M|^rho E[P_{L|Z}^rho] three ways.

    direct:      |M|^rho E[P_{L|Z}(L|Z)^rho]
    weighted:    |M|^rho E[P_{L|Z}^rho P_L^-rho] / |L|^rho
    closed_form: (|M| / |L|)^rho exp(psi(rho, W, P_L))
    """
    n_l = p_l.size
    if not np.allclose(p_l.probs, 1.0 / n_l, rtol=0, atol=1e-15):
        raise ValidationError("identity requires a uniform distribution on L")
    joint = p_l.probs[:, None] * w.rows
    p_z = joint.sum(axis=0)
    nz = joint > 0
    post = (joint / np.broadcast_to(p_z, joint.shape))[nz]
    p_lrep = np.broadcast_to(p_l.probs[:, None], joint.shape)[nz]
    direct = m_size**rho * float(np.sum(joint[nz] * post**rho))
    weighted = m_size**rho * float(np.sum(joint[nz] * post**rho * p_lrep**-rho)) / n_l**rho
    closed = (m_size / n_l) ** rho * math.exp(psi(rho, w, p_l))
    vals = np.array([direct, weighted, closed])
    err = float(np.max(np.abs(vals - direct)) / abs(direct))
    return IdentityRecord(direct, weighted, closed, err, err <= tol)


# ------------------------------------------------------------- exact leakage


@dataclass
class LeakageReport:
    leakage: float
    equivocation: float
    leakage_without_e: float
    ln_s: float
    n: int
    rho_used: float | None = None
    bound_rhs: float = float("nan")
    bound_stripped: float = float("nan")

    def to_json(self) -> dict:
        return {"n": self.n, "leakage_nats": self.leakage,
                "equivocation_nats": self.equivocation,
                "leakage_without_e_nats": self.leakage_without_e,
                "ln_s": self.ln_s, "rho": self.rho_used,
                "bound_rhs": self.bound_rhs, "bound_stripped": self.bound_stripped}


def _eve_channel(spec: CodeSpec, w_z: Channel) -> Channel:
    if w_z.n_inputs != spec.xi.n_outputs:
        raise DimensionError("Eve's channel input must match Ξ outputs")
    return compose(spec.xi, w_z)


def secret_joint(spec: CodeSpec, codebook: Codebook, w_z: Channel,
                 p_e: Dist | None = None, budget: int = LEAKAGE_BUDGET) -> np.ndarray:
    """P(s, e, z^n) as an (|S|, |E|, |Z|^n) array."""
    wbar = _eve_channel(spec, w_z)
    n_z = wbar.n_outputs**spec.n
    n_s, n_b, n_e = spec.n_s, spec.n_b, codebook.n_e
    if n_s * n_b * n_e * n_z > budget:
        raise BudgetError(f"|S||B||E||Z|^n = {n_s * n_b * n_e * n_z} exceeds {budget}")
    if p_e is None:
        p_e = Dist.uniform(n_e)
    if p_e.size != n_e:
        raise DimensionError(f"p_e has {p_e.size} entries, code has {n_e} common messages")
    fib = fiber_table(spec.hash)
    out = np.zeros((n_s, n_e, n_z))
    for e in range(n_e):
        if p_e.probs[e] == 0:
            continue
        lik = kernels.likelihood_table(wbar.rows, codebook.satellites[e])
        out[:, e, :] = lik[fib].sum(axis=1) * (p_e.probs[e] / n_b)
    return out


def default_p_n(spec: CodeSpec, n_outputs: int) -> int:
    """4 * (16/13) * |W_n(Q_V)|, rounded up."""
    shells = count_vshells(TypeSpec(tuple(spec.counts.sum(axis=0))), n_outputs)
    return math.ceil(4 * 16 * shells / 13)


def _single_letter(spec: CodeSpec):
    counts = spec.counts.astype(np.float64)
    q_u = Dist.normalized(counts.sum(axis=1))
    rows = np.where(counts.sum(axis=1, keepdims=True) > 0, counts, 1.0)
    return q_u, Channel.normalized(rows)


def log_epsilon_code(spec: CodeSpec, wbar: Channel, rho: float) -> float:
    """Single-letter log eps_{1,rho} at the code's realized rates.

    The realized gap uses |S|/|B| exactly: n (R_s - R_p) = (m - k) ln 2.
    """
    q_u, q_vu = _single_letter(spec)
    gap = (spec.m - spec.k) * math.log(2) / spec.n
    return rho * gap + phi_avg(rho, wbar, q_vu, q_u)


def exact_leakage(spec: CodeSpec, codebook: Codebook, w_z: Channel,
                  p_e: Dist | None = None, rho: float | None = None,
                  p_n: int | None = None, budget: int = LEAKAGE_BUDGET) -> LeakageReport:
    """I(S; Z^n, E) and H(S | Z^n, E) for uniform S, by enumeration.

    With ``rho`` set, also reports the finite-n bound
    p(n) (n+1)^{|U|^2 |V|} |W_n(Q_V)| / rho * eps_{1,rho}^n and the same with
    the polynomial prefactors removed, (1/rho) log(1 + eps_{1,rho}^n).
    """
    joint = secret_joint(spec, codebook, w_z, p_e, budget)
    p_s = joint.sum(axis=(1, 2))
    p_ez = joint.sum(axis=0)
    nz = joint > 0
    ez = np.broadcast_to(p_ez, joint.shape)
    h_cond = -float(np.sum(joint[nz] * np.log(joint[nz] / ez[nz])))
    indep = p_s[:, None, None] * p_ez[None, :, :]
    leak = _xlogy_ratio(joint, indep)
    sz = joint.sum(axis=1)
    leak_z = _xlogy_ratio(sz, p_s[:, None] * sz.sum(axis=0)[None, :])
    rep = LeakageReport(max(leak, 0.0), max(h_cond, 0.0), max(leak_z, 0.0),
                        spec.m * math.log(2), spec.n)
    if rho is not None:
        wbar = _eve_channel(spec, w_z)
        if p_n is None:
            p_n = default_p_n(spec, wbar.n_outputs)
        log_eps_n = spec.n * log_epsilon_code(spec, wbar, rho)
        card_u, card_v = spec.counts.shape
        shells = count_vshells(TypeSpec(tuple(spec.counts.sum(axis=0))), wbar.n_outputs)
        log_pbar = (math.log(p_n) + card_u**2 * card_v * math.log(spec.n + 1)
                    + math.log(shells))
        rep.rho_used = rho
        rep.bound_rhs = math.exp(log_pbar + log_eps_n) / rho
        rep.bound_stripped = math.log1p(math.exp(log_eps_n)) / rho
    return rep


def ensemble_epsilon(spec: CodeSpec, w_z: Channel, rho: float) -> float:
    """eps_{n,rho} under the actual constant-composition ensemble law.

    phi is evaluated with V^n | U^n = u uniform on the conditional type class
    and U^n uniform on its type class; by permutation symmetry of the
    memoryless channel every u in the class contributes equally, so the
    sorted representative is used.
    """
    if not 0.0 < rho < 1.0:
        raise ValidationError("ensemble epsilon needs 0 < rho < 1")
    wbar = _eve_channel(spec, w_z)
    counts = spec.counts
    u = np.repeat(np.arange(counts.shape[0]), counts.sum(axis=1))
    vs = conditional_class_array(u, counts)
    lik = kernels.likelihood_table(wbar.rows, vs)          # (|class|, |Z|^n)
    with np.errstate(divide="ignore"):
        inner = np.log(np.mean(lik ** (1.0 / (1.0 - rho)), axis=0))
    val = np.exp((1.0 - rho) * inner).sum()
    return math.exp(rho * (spec.m - spec.k) * math.log(2)) * float(val)


@dataclass
class SearchResult:
    best_index: int
    best_spec: CodeSpec
    best_codebook: Codebook
    best_report: LeakageReport
    leakages: np.ndarray
    exp_leakages: np.ndarray
    reference_mean: float
    reference_mean_exp: float
    p_n: int
    rho: float
    frac_exceed_info: float
    frac_exceed_exp: float
    frac_within_both: float
    avg_bound_info: float
    avg_bound_exp: float

    def to_json(self) -> dict:
        return {"best_index": self.best_index, "best_leakage": self.best_report.leakage,
                "mean_leakage": float(self.leakages.mean()),
                "reference_mean": self.reference_mean,
                "reference_mean_exp": self.reference_mean_exp,
                "p_n": self.p_n, "rho": self.rho,
                "frac_exceed_info": self.frac_exceed_info,
                "frac_exceed_exp": self.frac_exceed_exp,
                "frac_within_both": self.frac_within_both,
                "avg_bound_info": self.avg_bound_info,
                "avg_bound_exp": self.avg_bound_exp,
                "best_hash": self.best_spec.hash.to_json(),
                "pairs": int(self.leakages.size)}


def _draw_pair(spec: CodeSpec, seed: int, label: str, i: int):
    rng = derive(seed, label, i)
    if spec.m == 0:
        h = spec.hash
    else:
        h = sample_hash(spec.k, spec.m, rng)
    s2 = CodeSpec(spec.n, spec.r_p, spec.r_s, spec.r_c, h, spec.xi, spec.joint_type)
    return s2, sample_codebook(s2, rng)


def existence_search(spec: CodeSpec, w_z: Channel, p_e: Dist | None = None,
                     num_pairs: int = 8, rho: float = 0.5, p_n: int | None = None,
                     seed: int = 0, reference_pairs: int | None = None,
                     workers: int = 1, budget: int = LEAKAGE_BUDGET) -> SearchResult:
    """Sample (hash, codebook) pairs and keep the one leaking least.

    The ensemble averages of I and exp(rho I) are estimated from an
    independent batch of ``reference_pairs`` pairs; the reported fractions are
    over the searched pairs.  Markov's inequality bounds each exceedance
    fraction by 1/p(n) in expectation.
    """
    if num_pairs < 1:
        raise ValidationError("num_pairs must be at least 1")
    wbar = _eve_channel(spec, w_z)
    if p_n is None:
        p_n = default_p_n(spec, wbar.n_outputs)

    def run(job):
        label, i = job
        s2, book = _draw_pair(spec, seed, label, i)
        return s2, book, exact_leakage(s2, book, w_z, p_e, budget=budget)

    ref_n = num_pairs if reference_pairs is None else reference_pairs
    jobs = [("pair", i) for i in range(num_pairs)] + [("reference", j) for j in range(ref_n)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(run, jobs))
    else:
        done = [run(j) for j in jobs]
    pairs = [(d[0], d[1]) for d in done[:num_pairs]]
    reports = [d[2] for d in done[:num_pairs]]
    leaks = np.array([r.leakage for r in reports])
    exps = np.exp(rho * leaks)
    ref = np.array([d[2].leakage for d in done[num_pairs:]]) if ref_n else leaks
    ref_mean, ref_exp = float(ref.mean()), float(np.exp(rho * ref).mean())
    over_i = leaks > p_n * ref_mean
    over_e = exps > p_n * ref_exp
    best = int(np.lexsort((np.arange(num_pairs), leaks))[0])
    avg_eps = ensemble_epsilon(spec, w_z, rho) if rho < 1.0 else float("nan")
    return SearchResult(best, pairs[best][0], pairs[best][1], reports[best], leaks, exps,
                        ref_mean, ref_exp, p_n, rho, float(over_i.mean()),
                        float(over_e.mean()), float((~over_i & ~over_e).mean()),
                        math.log1p(avg_eps) / rho, 1.0 + avg_eps)


def leakage_decay_curve(n_list, r_p: float, r_s: float, r_c: float, q_uv, xi: Channel,
                        w_z: Channel, p_e: Dist | None = None, pairs: int = 8,
                        seed: int = 0, delta: float = 0.05, workers: int = 1,
                        budget: int = LEAKAGE_BUDGET) -> list[dict]:
    """Best-of-``pairs`` exact leakage per blocklength, next to the exponent curves.

    bound_plus = exp(-n (F_+ - delta)), bound_minus = n (F_- + delta), with
    F_+ and F_- evaluated at the realized rates of each code.
    """
    rows = []
    for n in n_list:
        spec = make_code_spec(n, r_p, r_s, r_c, q_uv, xi, seed=derive(seed, "spec", n))
        res = existence_search(spec, w_z, p_e, num_pairs=pairs, rho=0.5,
                               seed=derive_int(seed, "pairs", n), reference_pairs=0,
                               workers=workers, budget=budget)
        wbar = _eve_channel(spec, w_z)
        q_u, q_vu = _single_letter(spec)
        gap = (spec.k - spec.m) * math.log(2) / n
        f_plus, rho_star = leakage_exponent(wbar, q_vu, q_u, gap)
        f_minus = cond_mutual_info(q_u, q_vu, wbar) - gap
        rows.append({"n": n, "rho": rho_star, "leakage_nats": res.best_report.leakage,
                     "equivocation_nats": res.best_report.equivocation,
                     "bound_plus": math.exp(-n * (f_plus - delta)),
                     "bound_minus": n * (f_minus + delta), "seed": seed,
                     "ln_s": spec.m * math.log(2), "f_plus": f_plus, "f_minus": f_minus})
    return rows
