"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in pytest's terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest

from bcclab.cli import run as cli_run
from bcclab.codec import decode_bob, encode_detailed, estimate_errors, make_code_spec, sample_codebook
from bcclab.exponents import ExponentQuery, f_i_minus, f_i_plus, phi, phi_avg, psi, \
    scaling_inequality_check
from bcclab.hashing import HashFamily
from bcclab.leakage import (default_p_n, existence_search, leakage_decay_curve,
                            verify_pa_bound)
from bcclab.prob import Channel, Dist, binary_entropy, cond_mutual_info, mutual_info, \
    product_extension
from bcclab.region import RegionQuery, region_boundary
from bcclab.typeclasses import (TypeSpec, all_sequences, all_types, decompose_over_vshells,
                                exhaustive_bound_sweep, type_class_array)

from conftest import random_channel, random_dist

LN2 = math.log(2)
RESULTS = []

# leakage-decay instance shared by criteria 7 and 9
DECAY_W_Z = Channel.bsc(0.3)
DECAY_Q = np.array([[0.5, 0.5]])
DECAY_R_P = 1.75 * LN2
DECAY_R_S = 0.5 * LN2


def report(num, ok, detail, elapsed, limit):
    within = elapsed < limit
    line = (f"criterion {num}: {'PASS' if ok and within else 'FAIL'} "
            f"({detail}; {elapsed:.2f} s of {limit:g} s)")
    print(line)
    RESULTS.append(line)
    assert within, line
    assert ok, line


def test_criterion_1_privacy_amplification(rng):
    t0 = time.perf_counter()
    rhos = np.round(np.arange(0.1, 1.01, 0.1), 1)
    checks = violations = jensen_bad = 0
    for _ in range(120):
        k = int(rng.integers(1, 5))               # |L| <= 16
        m = int(rng.integers(1, k + 1))
        p_l = random_dist(rng, 1 << k, sparse=True)
        w = random_channel(rng, 1 << k, int(rng.integers(1, 9)), sparse=True)
        fam = HashFamily(k, m)
        for rho in rhos:
            rec = verify_pa_bound(p_l, w, fam, float(rho))
            checks += 1
            violations += not rec.holds
            jensen_bad += rec.jensen_lhs > rec.lhs * (1 + 1e-12)
    hand = verify_pa_bound(Dist.uniform(4), Channel.identity(4), HashFamily(2, 1), 1.0)
    hand_ok = abs(hand.lhs - 2) <= 1e-12 and abs(hand.rhs - 3) <= 1e-12
    ok = violations == 0 and jensen_bad == 0 and hand_ok
    report(1, ok, f"{checks} checks on 120 instances, {violations} violations, "
                  f"hand instance LHS={hand.lhs:.12g} RHS={hand.rhs:.12g}",
           time.perf_counter() - t0, 60)


def test_criterion_2_psi_phi_and_scaling(rng):
    t0 = time.perf_counter()
    bad_order = bad_scale = 0
    for _ in range(1000):
        n_l, n_z = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        w = random_channel(rng, n_l, n_z, sparse=True)
        p = random_dist(rng, n_l, sparse=True)
        rho = float(rng.uniform(1e-3, 1.0))
        bad_order += psi(rho, w, p) > phi(rho, w, p) + 1e-12
    for _ in range(1000):
        n_l, n_z = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        w = random_channel(rng, n_l, n_z, sparse=True)
        p_t = random_dist(rng, n_l)
        c1 = float(1 + 4 * rng.random())
        p = Dist.normalized(p_t.probs * rng.uniform(0, 1, n_l))
        c1 = max(c1, float(np.max(p.probs / p_t.probs)))
        rec = scaling_inequality_check(float(rng.uniform(1e-3, 1.0)), w, p, p_t, c1, tol=1e-12)
        bad_scale += not rec.holds
    report(2, bad_order == 0 and bad_scale == 0,
           f"psi<=phi violations {bad_order}/1000, scaling violations {bad_scale}/1000",
           time.perf_counter() - t0, 60)


def test_criterion_3_limits(rng):
    t0 = time.perf_counter()
    rho = 1e-4
    worst_phi = worst_minus = 0.0
    positive = 0
    for _ in range(50):
        card_u, card_v, n_z = (int(x) for x in rng.integers(1, 4, size=3) + [0, 1, 1])
        q_u = random_dist(rng, card_u)
        q_vu = random_channel(rng, card_u, card_v)
        w = random_channel(rng, card_v, n_z, alpha=0.4)
        info = cond_mutual_info(q_u, q_vu, w)
        worst_phi = max(worst_phi, abs(phi_avg(rho, w, q_vu, q_u) / rho - info))
        r_s = float(rng.uniform(0.01, 0.3))
        gap = float(rng.uniform(0.0, 1.5 * info + 1e-3))
        q = ExponentQuery(w, q_u, q_vu, r_s, r_s + gap, 0.1)
        fm = f_i_minus(q)
        if fm > 0:
            positive += 1
            log_eps = rho * (q.r_s - q.r_p) + phi_avg(rho, w, q_vu, q_u)
            worst_minus = max(worst_minus, abs(max(log_eps, 0.0) / rho - fm))
    ok = worst_phi <= 1e-3 and worst_minus <= 1e-3 and positive > 0
    report(3, ok, f"max |phi/rho - I| = {worst_phi:.2e}, max |F- - limit| = {worst_minus:.2e} "
                  f"over {positive} positive cases", time.perf_counter() - t0, 60)


def test_criterion_4_closed_form_exponent():
    t0 = time.perf_counter()
    q = ExponentQuery(w_z=Channel.identity(2), q_u=Dist([1.0]),
                      q_v_given_u=Channel([[0.5, 0.5]]), r_s=0.5, r_p=1.5, r_c=0.1)
    val, rho_star = f_i_plus(q)
    ok = abs(val - 0.306853) <= 1e-6 and abs(rho_star - 1.0) <= 1e-4
    report(4, ok, f"F+ = {val:.7f}, rho* = {rho_star:.6f}", time.perf_counter() - t0, 1)


def test_criterion_5_region():
    t0 = time.perf_counter()
    bsc1, bsc2 = Channel.bsc(0.1), Channel.bsc(0.2)
    q = RegionQuery(bsc1, bsc2, card_u=1, card_v=2, resolution=64, mode="bcc_equal")
    max_rs = max(p.r_s for p in region_boundary(q))
    q_sym = RegionQuery(bsc1, bsc1, card_u=1, card_v=2, resolution=64, mode="bcc")
    max_re = max(p.r_e for p in region_boundary(q_sym))
    oracle = binary_entropy(0.2) - binary_entropy(0.1)
    ok = 0.175 <= max_rs <= 0.1754 and max_re == 0.0
    report(5, ok, f"max R_s = {max_rs:.10f} (oracle {oracle:.6f}), symmetric max R_e = {max_re!r}",
           time.perf_counter() - t0, 300)


def test_criterion_6_type_bounds():
    t0 = time.perf_counter()
    summary = exhaustive_bound_sweep(8, (2, 3))
    viol = len(summary["uniform_violations"]) + len(summary["conditional_violations"])
    w = Channel.bsc(0.2)
    n = 4
    wn = product_extension(w, n).rows
    zs = all_sequences(n, 2)
    worst = 0.0
    for t in all_types(n, 2):
        vs = type_class_array(t)
        idx = vs.astype(np.int64) @ (1 << np.arange(n - 1, -1, -1))
        rec = decompose_over_vshells(w, t).reconstruct(vs, zs)
        worst = max(worst, float(np.abs(rec - wn[idx]).max()))
    ok = viol == 0 and worst <= 1e-9
    report(6, ok, f"{summary['uniform_checked']} uniform + {summary['conditional_checked']} "
                  f"conditional checks, {viol} violations; shell error {worst:.1e}",
           time.perf_counter() - t0, 120)


def test_criterion_7_leakage_decay():
    t0 = time.perf_counter()
    info = mutual_info(Dist.uniform(2), DECAY_W_Z)
    assert DECAY_R_P - DECAY_R_S >= info + 0.2
    rows = leakage_decay_curve([2, 4, 6, 8], DECAY_R_P, DECAY_R_S, 0.0, DECAY_Q,
                               Channel.identity(2), DECAY_W_Z, pairs=8, seed=0)
    leak = [r["leakage_nats"] for r in rows]
    identity_err = max(abs(r["leakage_nats"] + r["equivocation_nats"] - r["ln_s"]) for r in rows)
    monotone = all(b <= a for a, b in zip(leak, leak[1:]))
    halved = leak[3] <= 0.5 * leak[0]
    ok = monotone and halved and identity_err <= 1e-9
    report(7, ok, "best-of-8 leakage " + ", ".join(f"n={r['n']}: {r['leakage_nats']:.3e}"
                                                   for r in rows)
           + f"; non-increasing={monotone}, n=8 <= n=2/2: {halved}, "
             f"identity error {identity_err:.1e}", time.perf_counter() - t0, 600)


ROUND_TRIP_CASES = [
    (3, 1, 1, 0.0, [[1 / 3, 2 / 3]]),
    (4, 2, 1, 0.0, [[0.25, 0.75]]),
    (5, 3, 1, 0.0, [[0.4, 0.6]]),
    (5, 2, 2, 0.0, [[0.2, 0.8]]),
    (6, 2, 1, 0.1, [[1 / 6, 1 / 3], [1 / 6, 1 / 3]]),
    (6, 3, 2, 0.0, [[1 / 3, 2 / 3]]),
    (6, 1, 1, 0.3, [[1 / 6, 1 / 6], [1 / 6, 0.5]]),
]


def test_criterion_8_codec_round_trip(tmp_path):
    t0 = time.perf_counter()
    ident = Channel.identity(2)
    messages = failures = 0
    for i, (n, k, m, r_c, q) in enumerate(ROUND_TRIP_CASES):
        spec = make_code_spec(n, k * LN2 / n, m * LN2 / n, r_c, np.asarray(q), ident, seed=i)
        book = sample_codebook(spec, 100 + i, distinct=True)
        book.check_constant_composition()
        for s in range(spec.n_s):
            for e in range(book.n_e):
                for b in range(spec.n_b):
                    if spec.hash(b) != s:
                        continue
                    messages += 1
                    b_hat, e_hat = decode_bob(book, book.codeword(b, e), 2)
                    failures += (spec.hash(b_hat), e_hat) != (s, e)
        failures += estimate_errors(spec, book, ident, ident).e_s != 0.0
    csvs = []
    cfg = tmp_path / "code.json"
    cfg.write_text(json.dumps({"n": 6, "r_p": 2 * LN2 / 6, "r_s": LN2 / 6, "r_c": 0.1,
                               "q_uv": [[1 / 6, 1 / 3], [1 / 6, 1 / 3]],
                               "xi": [[0.9, 0.1], [0.1, 0.9]], "w_y": [[0.95, 0.05], [0.05, 0.95]],
                               "w_z": [[0.8, 0.2], [0.2, 0.8]]}))
    for workers in (1, 8):
        out = tmp_path / f"w{workers}.csv"
        assert cli_run(["simulate", str(cfg), "--format", "csv", "--force-mc", "--trials", "200",
                        "--seed", "7", "--workers", str(workers), "-o", str(out)]) == 0
        csvs.append(out.read_bytes())
    identical = csvs[0] == csvs[1]
    ok = failures == 0 and identical
    report(8, ok, f"{messages} (s, b, e) messages over {len(ROUND_TRIP_CASES)} codes, "
                  f"{failures} decoding failures; CSV identical across 1/8 workers: {identical}",
           time.perf_counter() - t0, 60)


def test_criterion_9_markov_fraction():
    t0 = time.perf_counter()
    spec = make_code_spec(4, DECAY_R_P, DECAY_R_S, 0.0, DECAY_Q, Channel.identity(2), seed=0)
    num = 240
    res = existence_search(spec, DECAY_W_Z, num_pairs=num, rho=0.5, seed=9,
                           reference_pairs=240, workers=4)
    p_n = default_p_n(spec, 2)
    q = 1.0 / p_n
    sigma = math.sqrt(q * (1 - q) / num)
    limit = q + 3 * sigma
    ok = res.frac_exceed_info <= limit and res.frac_exceed_exp <= limit
    report(9, ok, f"p(n)={p_n}, exceed fractions {res.frac_exceed_info:.4f} (I) and "
                  f"{res.frac_exceed_exp:.4f} (exp) vs limit {limit:.4f} over {num} pairs",
           time.perf_counter() - t0, 300)
