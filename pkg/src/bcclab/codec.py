"""Hash-plus-superposition code for the confidential broadcast channel.

Encoder: secret s -> uniform b in f^{-1}(s) -> satellite codeword v^n(b, e)
around cloud centre u^n(e) -> artificial noise Ξ^n -> x^n.
Bob decodes (b, e) with the MMI rule and outputs (f(b), e); Eve decodes e from
the cloud centres with the same rule.  Codewords are drawn uniformly from the
joint type class of Q_UV, so every pair (u^n(e), v^n(b, e)) has exactly that
joint type.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BudgetError, DimensionError, ValidationError
from .hashing import LinearHash, apply_array, fiber_table, sample_hash, sizes_for_rates
from .prob import Channel, Dist, JointDist, compose
from .seeding import as_generator, derive
from .typeclasses import all_sequences, joint_counts, multinomial, round_to_type

CODEBOOK_BUDGET = 2**26
EXACT_LIMIT = 2**20
WILSON_Z = 1.96


def common_size(n: int, r_c: float) -> int:
    """|E_n| = ceil(e^{n R_c}) (1e-9 slack for exact integers)."""
    return max(1, math.ceil(math.exp(n * r_c) - 1e-9))


@dataclass(frozen=True)
class CodeSpec:
    n: int
    r_p: float
    r_s: float
    r_c: float
    hash: LinearHash
    xi: Channel
    joint_type: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        jt = tuple(tuple(int(c) for c in row) for row in self.joint_type)
        object.__setattr__(self, "joint_type", jt)
        counts = np.asarray(jt)
        if counts.ndim != 2 or np.any(counts < 0) or counts.sum() != self.n:
            raise ValidationError(f"joint type is not realizable at n={self.n}")
        if self.xi.n_inputs != counts.shape[1]:
            raise DimensionError("Ξ input alphabet must match the V alphabet")
        if self.r_s < 0 or self.r_p < self.r_s or self.r_c < 0:
            raise ValidationError("rates must satisfy 0 <= R_s <= R_p and R_c >= 0")
        k, m = sizes_for_rates(self.n, self.r_p, self.r_s)
        if (self.hash.k, self.hash.m) != (k, m):
            raise ValidationError(
                f"hash is {self.hash.m}x{self.hash.k}, rates require {m}x{k}")

    @property
    def counts(self) -> np.ndarray:
        return np.asarray(self.joint_type, dtype=np.int64)

    @property
    def card_u(self) -> int:
        return len(self.joint_type)

    @property
    def card_v(self) -> int:
        return len(self.joint_type[0])

    @property
    def k(self) -> int:
        return self.hash.k

    @property
    def m(self) -> int:
        return self.hash.m

    @property
    def n_b(self) -> int:
        return 1 << self.k

    @property
    def n_s(self) -> int:
        return 1 << self.m

    @property
    def n_e(self) -> int:
        return common_size(self.n, self.r_c)

    def realized_rates(self) -> dict:
        return {"r_p": self.k * math.log(2) / self.n,
                "r_s": self.m * math.log(2) / self.n,
                "r_c": math.log(self.n_e) / self.n}

    def to_json(self) -> dict:
        return {"n": self.n, "R_p": self.r_p, "R_s": self.r_s, "R_c": self.r_c,
                "hash": self.hash.to_json(), "xi": self.xi.to_json(),
                "joint_type": [list(r) for r in self.joint_type]}


def make_code_spec(n: int, r_p: float, r_s: float, r_c: float, q_uv, xi: Channel,
                   seed=None, hash_fn: LinearHash | None = None) -> CodeSpec:
    """Round Q_UV to a joint type at n and draw a hash of the right shape."""
    probs = q_uv.probs if isinstance(q_uv, JointDist) else np.asarray(q_uv, float)
    if probs.ndim == 1:
        probs = probs[None, :]
    counts = round_to_type(probs, n)
    k, m = sizes_for_rates(n, r_p, r_s)
    if hash_fn is None:
        hash_fn = LinearHash.trivial(k) if m == 0 else sample_hash(k, m, seed)
    return CodeSpec(n, r_p, r_s, r_c, hash_fn, xi, tuple(map(tuple, counts.tolist())))


@dataclass(frozen=True)
class Codebook:
    n: int
    joint_type: tuple[tuple[int, ...], ...]
    cloud: np.ndarray          # (|E|, n)
    satellites: np.ndarray     # (|E|, |B|, n)

    @property
    def n_e(self) -> int:
        return self.cloud.shape[0]

    @property
    def n_b(self) -> int:
        return self.satellites.shape[1]

    @property
    def card_u(self) -> int:
        return len(self.joint_type)

    @property
    def card_v(self) -> int:
        return len(self.joint_type[0])

    def codeword(self, b: int, e: int) -> np.ndarray:
        return self.satellites[e, b]

    def flat_codewords(self) -> np.ndarray:
        """Satellites in (e, b) lexicographic order, shape (|E||B|, n)."""
        return self.satellites.reshape(-1, self.n)

    def check_constant_composition(self):
        target = np.asarray(self.joint_type)
        for e in range(self.n_e):
            for b in range(self.n_b):
                jt = joint_counts(self.cloud[e], self.satellites[e, b],
                                  self.card_u, self.card_v)
                if not np.array_equal(jt, target):
                    raise AssertionError(f"codeword ({b}, {e}) has joint type {jt.tolist()}")


def _draw_distinct(draw, seen: set, what: str, attempts: int = 10_000):
    for _ in range(attempts):
        x = draw()
        key = x.tobytes()
        if key not in seen:
            seen.add(key)
            return x
    raise ValidationError(f"could not draw a distinct {what} in {attempts} attempts")


def sample_codebook(spec: CodeSpec, seed=None, budget: int = CODEBOOK_BUDGET,
                    distinct: bool = False) -> Codebook:
    """Clouds uniform on T_n(Q_U); satellites uniform on the conditional class.

    With ``distinct`` the draws are rejection-sampled so that all cloud
    centres are different and all |E||B| satellites are different; this is
    the injective codebook needed for error-free decoding over noiseless
    channels.
    """
    n_e, n_b, n = spec.n_e, spec.n_b, spec.n
    if n_e * n_b * n > budget:
        raise BudgetError(f"codebook of {n_e}x{n_b}x{n} symbols exceeds budget {budget}")
    rng = as_generator(seed)
    counts = spec.counts
    base_u = np.repeat(np.arange(spec.card_u), counts.sum(axis=1)).astype(np.int8)
    cloud = np.empty((n_e, n), dtype=np.int8)
    sats = np.empty((n_e, n_b, n), dtype=np.int8)
    if distinct:
        n_clouds = multinomial(counts.sum(axis=1))
        n_cond = math.prod(multinomial(row) for row in counts)
        n_v = multinomial(counts.sum(axis=0))
        if n_e > n_clouds or n_b > n_cond or n_e * n_b > n_v:
            raise ValidationError(
                f"type classes hold {n_clouds} clouds, {n_cond} satellites per cloud and "
                f"{n_v} in total; need {n_e}, {n_b} and {n_e * n_b} distinct")
    seen_u, seen_v = set(), set()
    for e in range(n_e):
        if distinct:
            u = _draw_distinct(lambda: rng.permutation(base_u), seen_u, "cloud centre")
        else:
            u = rng.permutation(base_u)
        cloud[e] = u
        blocks = [(np.flatnonzero(u == a),
                   np.repeat(np.arange(spec.card_v), counts[a]).astype(np.int8))
                  for a in range(spec.card_u)]
        blocks = [(pos, blk) for pos, blk in blocks if pos.size]

        def draw_one():
            v = np.empty(n, dtype=np.int8)
            for pos, blk in blocks:
                v[pos] = rng.permutation(blk)
            return v

        if distinct:
            for b in range(n_b):
                sats[e, b] = _draw_distinct(draw_one, seen_v, "satellite codeword")
        else:
            for pos, blk in blocks:
                sats[e][:, pos] = rng.permuted(np.tile(blk, (n_b, 1)), axis=1)
    cloud.setflags(write=False)
    sats.setflags(write=False)
    book = Codebook(n, spec.joint_type, cloud, sats)
    book.check_constant_composition()
    return book


def _sample_rows(rows: np.ndarray, inputs: np.ndarray, rng) -> np.ndarray:
    """Draw one output per input symbol through a row-stochastic matrix."""
    cum = np.cumsum(rows, axis=1)
    cum[:, -1] = 1.0
    draws = rng.random(inputs.shape)
    return (cum[inputs] <= draws[..., None]).sum(axis=-1).astype(np.int8)


def transmit(ch: Channel, x, seed=None) -> np.ndarray:
    """Memoryless channel use on every symbol of ``x`` (any shape)."""
    return _sample_rows(ch.rows, np.asarray(x, dtype=np.int64), as_generator(seed))


def encode_detailed(spec: CodeSpec, codebook: Codebook, s: int, e: int, seed=None):
    """Returns (b, v^n, x^n)."""
    if not (0 <= s < spec.n_s and 0 <= e < codebook.n_e):
        raise ValidationError(f"message (s={s}, e={e}) out of range")
    rng = as_generator(seed)
    preimages = fiber_table(spec.hash)[s]
    b = int(preimages[rng.integers(preimages.size)])
    v = codebook.codeword(b, e)
    x = _sample_rows(spec.xi.rows, v.astype(np.int64), rng)
    return b, v, x


def encode(spec: CodeSpec, codebook: Codebook, s: int, e: int, seed=None) -> np.ndarray:
    return encode_detailed(spec, codebook, s, e, seed)[2]


def _n_out(seqs, n_out):
    return int(np.max(seqs)) + 1 if n_out is None else int(n_out)


def decode_bob_many(codebook: Codebook, ys, n_out=None, backend=None) -> np.ndarray:
    """MMI decisions for a batch of received words; returns (Y, 2) of (b, e)."""
    ys = np.atleast_2d(ys)
    scores = kernels.mmi_scores(codebook.flat_codewords(), ys, codebook.card_v,
                                _n_out(ys, n_out), backend=backend)
    idx = kernels.argmax_first(scores)
    return np.stack([idx % codebook.n_b, idx // codebook.n_b], axis=1)


def decode_bob(codebook: Codebook, y, n_out=None) -> tuple[int, int]:
    """(b, e) maximizing the empirical MI between v^n(b, e) and y^n."""
    b, e = decode_bob_many(codebook, np.asarray(y)[None, :], n_out)[0]
    return int(b), int(e)


def decode_eve_many(codebook: Codebook, zs, n_out=None, backend=None) -> np.ndarray:
    zs = np.atleast_2d(zs)
    scores = kernels.mmi_scores(codebook.cloud, zs, codebook.card_u,
                                _n_out(zs, n_out), backend=backend)
    return kernels.argmax_first(scores)


def decode_eve_common(codebook: Codebook, z, n_out=None) -> int:
    return int(decode_eve_many(codebook, np.asarray(z)[None, :], n_out)[0])


def wilson_radius(errors: int, trials: int, z: float = WILSON_Z) -> float:
    if trials <= 0:
        return float("nan")
    p = errors / trials
    denom = 1.0 + z * z / trials
    return float(z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials**2)))


@dataclass
class ErrorEstimate:
    e_s: float
    e_c: float
    radius_s: float
    radius_c: float
    exact: bool
    per_message_s: np.ndarray = field(repr=False)
    per_message_c: np.ndarray = field(repr=False)
    trials: int = 0


def _exact_errors(spec, codebook, ch_y, ch_z):
    n = spec.n
    fib = fiber_table(spec.hash)                        # (S, B/S)
    weight = 1.0 / fib.shape[1]
    ys = all_sequences(n, ch_y.n_outputs)
    zs = all_sequences(n, ch_z.n_outputs)
    bob = decode_bob_many(codebook, ys, ch_y.n_outputs)
    bob_s = apply_array(spec.hash, bob[:, 0])
    eve = decode_eve_many(codebook, zs, ch_z.n_outputs)
    err_s = np.zeros((spec.n_s, codebook.n_e))
    err_c = np.zeros((spec.n_s, codebook.n_e))
    for e in range(codebook.n_e):
        lik_y = kernels.likelihood_table(ch_y.rows, codebook.satellites[e])
        lik_z = kernels.likelihood_table(ch_z.rows, codebook.satellites[e])
        miss_z = (eve != e).astype(np.float64)
        for s in range(spec.n_s):
            miss_y = ((bob_s != s) | (bob[:, 1] != e)).astype(np.float64)
            err_s[s, e] = weight * float((lik_y[fib[s]] @ miss_y).sum())
            err_c[s, e] = weight * float((lik_z[fib[s]] @ miss_z).sum())
    # summation error can push a certain event a few ulps past 1
    return np.clip(err_s, 0.0, 1.0), np.clip(err_c, 0.0, 1.0)


def _mc_message(spec, codebook, ch_y, ch_z, fib, s, e, trials, rng):
    b = fib[s][rng.integers(fib.shape[1], size=trials)]
    v = codebook.satellites[e][b].astype(np.int64)
    x = _sample_rows(spec.xi.rows, v, rng)
    # ch_y, ch_z are the raw channels here; x already carries Ξ
    y = _sample_rows(ch_y.rows, x.astype(np.int64), rng)
    z = _sample_rows(ch_z.rows, x.astype(np.int64), rng)
    bob = decode_bob_many(codebook, y, ch_y.n_outputs)
    bad_s = (apply_array(spec.hash, bob[:, 0]) != s) | (bob[:, 1] != e)
    bad_c = decode_eve_many(codebook, z, ch_z.n_outputs) != e
    return int(bad_s.sum()), int(bad_c.sum())


def estimate_errors(spec: CodeSpec, codebook: Codebook, w_y: Channel, w_z: Channel,
                    trials: int = 1000, seed: int = 0, workers: int = 1,
                    mode: str = "auto", exact_limit: int = EXACT_LIMIT) -> ErrorEstimate:
    """Maximum per-message error probabilities for Bob (s, e) and Eve (e).

    ``mode="auto"`` enumerates every output sequence when both output spaces
    have at most ``exact_limit`` elements, otherwise it simulates ``trials``
    transmissions per message.  Message (s, e) uses the stream
    ``derive(seed, "errors", s * |E| + e)`` so results do not depend on
    ``workers``.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    if w_y.n_inputs != spec.xi.n_outputs or w_z.n_inputs != spec.xi.n_outputs:
        raise DimensionError("channel inputs must match Ξ outputs")
    exact = mode == "exact" or (
        mode == "auto" and w_y.n_outputs**spec.n <= exact_limit
        and w_z.n_outputs**spec.n <= exact_limit)
    if exact:
        err_s, err_c = _exact_errors(spec, codebook, compose(spec.xi, w_y),
                                     compose(spec.xi, w_z))
        return ErrorEstimate(float(err_s.max()), float(err_c.max()), 0.0, 0.0, True,
                             err_s, err_c, 0)
    fib = fiber_table(spec.hash)
    messages = [(s, e) for s in range(spec.n_s) for e in range(codebook.n_e)]

    def run(i):
        s, e = messages[i]
        rng = derive(seed, "errors", i)
        return _mc_message(spec, codebook, w_y, w_z, fib, s, e, trials, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(run, range(len(messages))))
    else:
        counts = [run(i) for i in range(len(messages))]
    cs = np.array([c[0] for c in counts]).reshape(spec.n_s, codebook.n_e)
    cc = np.array([c[1] for c in counts]).reshape(spec.n_s, codebook.n_e)
    i_s = np.unravel_index(np.argmax(cs), cs.shape)
    i_c = np.unravel_index(np.argmax(cc), cc.shape)
    return ErrorEstimate(float(cs[i_s] / trials), float(cc[i_c] / trials),
                         wilson_radius(int(cs[i_s]), trials),
                         wilson_radius(int(cc[i_c]), trials), False,
                         cs / trials, cc / trials, trials)
