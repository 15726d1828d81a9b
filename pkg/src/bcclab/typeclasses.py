"""Method of types: types, type classes, conditional types (V-shells).

Sequences are numpy integer vectors over ``range(alphabet)``.  A joint or
conditional type is an integer matrix ``counts[a, b]`` giving how often input
symbol ``a`` is paired with output symbol ``b``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import BudgetError, DimensionError, ValidationError
from .prob import Channel

CLASS_GUARD = 2**22
SHELL_GUARD = 2**20


@dataclass(frozen=True)
class TypeSpec:
    """Type of a length-n sequence: ``counts[a]`` occurrences of symbol ``a``."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or any(c < 0 for c in counts):
            raise ValidationError("type counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def alphabet(self) -> int:
        return len(self.counts)

    @property
    def dist(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.n

    def class_size(self) -> int:
        return multinomial(self.counts)


@dataclass(frozen=True)
class VShell:
    """Conditional type: ``counts[a]`` is the output type on positions of symbol a."""

    counts: tuple[tuple[int, ...], ...]
    base_type: TypeSpec

    def __post_init__(self):
        rows = tuple(tuple(int(c) for c in r) for r in self.counts)
        object.__setattr__(self, "counts", rows)
        if len(rows) != self.base_type.alphabet:
            raise ValidationError("shell needs one row per base symbol")
        if tuple(sum(r) for r in rows) != self.base_type.counts:
            raise ValidationError("shell row sums must equal the base type")

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    def fiber_size(self) -> int:
        """Number of output sequences z^n in this shell for a fixed v^n."""
        return math.prod(multinomial(r) for r in self.counts)


@dataclass(frozen=True)
class ShellDecomposition:
    """Convex decomposition of ``w^n`` restricted to a type class."""

    base_type: TypeSpec
    n_outputs: int
    components: tuple[tuple[float, VShell], ...] = field(default=())

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    def shell_matrix(self, shell: VShell, v_seqs, z_seqs) -> np.ndarray:
        """Uniform-within-shell conditional law as a dense |v| x |z| matrix."""
        target = shell.matrix
        out = np.zeros((len(v_seqs), len(z_seqs)))
        fiber = shell.fiber_size()
        for i, v in enumerate(v_seqs):
            for j, z in enumerate(z_seqs):
                if np.array_equal(joint_counts(v, z, self.base_type.alphabet,
                                               self.n_outputs), target):
                    out[i, j] = 1.0 / fiber
        return out

    def reconstruct(self, v_seqs, z_seqs) -> np.ndarray:
        """sum_k weight_k * shell_k(z|v) over the given sequences."""
        total = np.zeros((len(v_seqs), len(z_seqs)))
        for w, shell in self.components:
            total += w * self.shell_matrix(shell, v_seqs, z_seqs)
        return total


def multinomial(counts) -> int:
    n = 0
    out = 1
    for c in counts:
        n += c
        out *= math.comb(n, c)
    return out


def type_of(seq, alphabet: int | None = None) -> TypeSpec:
    s = np.asarray(seq, dtype=np.int64)
    if alphabet is None:
        alphabet = int(s.max()) + 1 if s.size else 1
    if s.size and (s.min() < 0 or s.max() >= alphabet):
        raise ValidationError(f"sequence has symbols outside range({alphabet})")
    return TypeSpec(tuple(np.bincount(s, minlength=alphabet).tolist()))


def joint_counts(u, v, card_u: int, card_v: int) -> np.ndarray:
    """Joint type counts of two aligned sequences."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    return np.bincount(u * card_v + v, minlength=card_u * card_v).reshape(card_u, card_v)


@lru_cache(maxsize=4096)
def _class_array(counts: tuple[int, ...]) -> np.ndarray:
    n = sum(counts)
    k = len(counts)
    if k == 1 or n == 0:
        return np.zeros((1, n), dtype=np.int8)
    if counts[0] == 0:
        return _class_array(counts[1:]) + 1
    rest = _class_array(counts[1:])
    blocks = []
    for pos in itertools.combinations(range(n), counts[0]):
        others = np.setdiff1d(np.arange(n), pos)
        block = np.empty((rest.shape[0], n), dtype=np.int8)
        block[:, list(pos)] = 0
        block[:, others] = rest + 1
        blocks.append(block)
    return np.concatenate(blocks)


def type_class_array(t: TypeSpec, guard: int = CLASS_GUARD) -> np.ndarray:
    """All sequences of type ``t`` as rows of an int8 array, lexicographic order."""
    size = t.class_size()
    if size > guard:
        raise BudgetError(f"type class has {size} sequences (guard {guard})")
    arr = _class_array(t.counts)
    order = np.lexsort(arr.T[::-1])
    out = arr[order]
    out.setflags(write=False)
    return out


def type_class(t: TypeSpec, guard: int = CLASS_GUARD) -> Iterator[tuple[int, ...]]:
    """Yield every sequence of type ``t`` exactly once."""
    for row in type_class_array(t, guard):
        yield tuple(int(x) for x in row)


def all_types(n: int, alphabet: int) -> Iterator[TypeSpec]:
    """Every type of length ``n`` over ``alphabet`` symbols (stars and bars)."""
    for cuts in itertools.combinations(range(n + alphabet - 1), alphabet - 1):
        prev = -1
        counts = []
        for c in cuts + (n + alphabet - 1,):
            counts.append(c - prev - 1)
            prev = c
        yield TypeSpec(tuple(counts))


def count_types(n: int, alphabet: int) -> int:
    return math.comb(n + alphabet - 1, alphabet - 1)


def round_to_type(probs, n: int) -> np.ndarray:
    """Largest-remainder rounding of a (joint) distribution to counts summing to n.

    Ties among remainders go to the lexicographically smallest flat index.
    """
    p = np.asarray(probs, dtype=np.float64)
    if np.any(p < 0) or not np.isclose(p.sum(), 1.0, atol=1e-9):
        raise ValidationError("can only round a probability vector/matrix")
    scaled = p.ravel() * n
    base = np.floor(scaled + 1e-12).astype(np.int64)
    base = np.minimum(base, n)
    short = n - int(base.sum())
    if short > 0:
        rem = scaled - base
        order = np.lexsort((np.arange(rem.size), -rem))
        base[order[:short]] += 1
    elif short < 0:  # floor guard overshot on values within 1e-12 of an integer
        rem = scaled - base
        order = np.lexsort((np.arange(rem.size), rem))
        base[order[:-short]] -= 1
    return base.reshape(p.shape)


# ---------------------------------------------------------------- bound checks


@dataclass
class BoundRecord:
    name: str
    counts: list
    n: int
    constant_exponent: int
    max_ratio: float
    checked: int
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "counts": self.counts, "n": self.n,
                "constant_exponent": self.constant_exponent,
                "max_ratio": self.max_ratio, "checked": self.checked,
                "passed": self.passed, **self.extra}


def _log_iid_prob(seqs: np.ndarray, dist: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logd = np.log(dist)
    return logd[seqs.astype(np.int64)].sum(axis=1)


def uniform_type_bound_check(t: TypeSpec, guard: int = CLASS_GUARD) -> BoundRecord:
    """Check 1/|T(t)| <= (n+1)^k Q^n(u) over every u in the class, Q = t/n.

    The returned ``max_ratio`` is the largest value of the left side over the
    right side; the bound holds when it is at most one.
    """
    seqs = type_class_array(t, guard)
    n, k = t.n, t.alphabet
    log_q = _log_iid_prob(seqs, t.dist) if n else np.zeros(1)
    log_ratio = -math.log(seqs.shape[0]) - (k * math.log(n + 1) + log_q)
    max_ratio = float(np.exp(log_ratio.max()))
    return BoundRecord("uniform_type", list(t.counts), n, k, max_ratio,
                       int(seqs.shape[0]), bool(max_ratio <= 1.0))


def conditional_class_array(u, joint, guard: int = CLASS_GUARD) -> np.ndarray:
    """All v^n whose joint type with ``u`` equals ``joint`` (|U| x |V| counts)."""
    u = np.asarray(u, dtype=np.int64)
    joint = np.asarray(joint, dtype=np.int64)
    card_u, card_v = joint.shape
    if not np.array_equal(np.bincount(u, minlength=card_u), joint.sum(axis=1)):
        raise ValidationError("u does not have the joint type's U-marginal")
    size = math.prod(multinomial(r) for r in joint.tolist())
    if size > guard:
        raise BudgetError(f"conditional class has {size} sequences (guard {guard})")
    out = np.zeros((1, u.size), dtype=np.int8)
    for a in range(card_u):
        pos = np.flatnonzero(u == a)
        if pos.size == 0:
            continue
        block = _class_array(tuple(int(c) for c in joint[a]))
        rep = np.repeat(out, block.shape[0], axis=0)
        rep[:, pos] = np.tile(block, (out.shape[0], 1))
        out = rep
    return out


def _canonical_u(joint: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(joint.shape[0]), joint.sum(axis=1))


def conditional_type_bound_check(joint, guard: int = CLASS_GUARD) -> BoundRecord:
    """Check P_{V^n|U^n=u}(v) <= (n+1)^{|U||V|} Q^n_{V|U}(v|u).

    ``u`` is fixed to the sorted sequence with the joint type's U-marginal and
    v ranges over its whole conditional type class; the law of V^n given u is
    uniform over that class.  The printed constant (n+1)^{|U|^2 |V|} used when
    both bounds are combined is evaluated too and reported in ``extra``.
    """
    joint = np.asarray(joint, dtype=np.int64)
    card_u, card_v = joint.shape
    n = int(joint.sum())
    u = _canonical_u(joint)
    seqs = conditional_class_array(u, joint, guard)
    row = joint.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(row > 0, joint / np.where(row > 0, row, 1), 0.0)
        logc = np.log(cond)
    log_q = logc[u[None, :], seqs.astype(np.int64)].sum(axis=1)
    log_p = -math.log(seqs.shape[0])
    exponent = card_u * card_v
    log_ratio = log_p - (exponent * math.log(n + 1) + log_q)
    max_ratio = float(np.exp(log_ratio.max()))
    printed = card_u * card_u * card_v
    printed_ratio = float(np.exp((log_p - (printed * math.log(n + 1) + log_q)).max()))
    return BoundRecord(
        "conditional_type", joint.tolist(), n, exponent, max_ratio,
        int(seqs.shape[0]), bool(max_ratio <= 1.0),
        extra={"printed_exponent": printed, "printed_ratio": printed_ratio,
               "printed_passed": bool(printed_ratio <= 1.0)})


def all_joint_types(n: int, card_u: int, card_v: int) -> Iterator[np.ndarray]:
    for t in all_types(n, card_u * card_v):
        yield np.asarray(t.counts, dtype=np.int64).reshape(card_u, card_v)


def exhaustive_bound_sweep(n_max: int = 8, alphabets=(2, 3)) -> dict:
    """Run both type bounds over every type with n <= n_max.

    Unconditional bounds: every alphabet in ``alphabets``.  Conditional bounds:
    every joint type over U x V with |U|, |V| drawn from ``(1,) + alphabets``.
    """
    summary = {"uniform_checked": 0, "uniform_violations": [],
               "conditional_checked": 0, "conditional_violations": [],
               "printed_violations": [], "uniform_max_ratio": 0.0,
               "conditional_max_ratio": 0.0}
    for k in alphabets:
        for n in range(1, n_max + 1):
            for t in all_types(n, k):
                rec = uniform_type_bound_check(t)
                summary["uniform_checked"] += 1
                summary["uniform_max_ratio"] = max(summary["uniform_max_ratio"],
                                                   rec.max_ratio)
                if not rec.passed:
                    summary["uniform_violations"].append(rec.to_json())
    cards = (1,) + tuple(alphabets)
    for cu in cards:
        for cv in alphabets:
            for n in range(1, n_max + 1):
                for joint in all_joint_types(n, cu, cv):
                    rec = conditional_type_bound_check(joint)
                    summary["conditional_checked"] += 1
                    summary["conditional_max_ratio"] = max(
                        summary["conditional_max_ratio"], rec.max_ratio)
                    if not rec.passed:
                        summary["conditional_violations"].append(rec.to_json())
                    if not rec.extra["printed_passed"]:
                        summary["printed_violations"].append(rec.to_json())
    summary["passed"] = not (summary["uniform_violations"]
                             or summary["conditional_violations"])
    return summary


# ---------------------------------------------------------------------- shells


def count_vshells(t: TypeSpec, n_outputs: int) -> int:
    return math.prod(math.comb(c + n_outputs - 1, n_outputs - 1) for c in t.counts)


def enumerate_vshells(t: TypeSpec, n_outputs: int,
                      guard: int = SHELL_GUARD) -> list[VShell]:
    """Every conditional type from sequences of type ``t`` to ``n_outputs`` symbols."""
    total = count_vshells(t, n_outputs)
    if total > guard:
        raise BudgetError(f"{total} V-shells exceed guard {guard}")
    per_row = [list(all_types(c, n_outputs)) if c else [TypeSpec((0,) * n_outputs)]
               for c in t.counts]
    return [VShell(tuple(r.counts for r in combo), t)
            for combo in itertools.product(*per_row)]


def shell_weight(w: Channel, shell: VShell) -> float:
    """w^n-probability that the output lands in ``shell`` for any fixed v^n."""
    logw = 0.0
    for a, row in enumerate(shell.counts):
        for b, c in enumerate(row):
            if c == 0:
                continue
            if w.rows[a, b] == 0:
                return 0.0
            logw += c * math.log(w.rows[a, b])
    return math.exp(logw) * shell.fiber_size()


def decompose_over_vshells(w: Channel, t: TypeSpec, n: int | None = None,
                           guard: int = SHELL_GUARD) -> ShellDecomposition:
    """Write ``w^n`` on the type class of ``t`` as a mixture of shell channels.

    Each shell channel is uniform over the output sequences whose conditional
    type with the input is that shell; its weight is the ``w^n`` mass of the
    shell.  Zero-weight shells are dropped.
    """
    if n is not None and n != t.n:
        raise DimensionError(f"blocklength {n} does not match type length {t.n}")
    if w.n_inputs != t.alphabet:
        raise DimensionError("channel input alphabet differs from the type alphabet")
    comps = []
    for shell in enumerate_vshells(t, w.n_outputs, guard):
        lam = shell_weight(w, shell)
        if lam > 0:
            comps.append((lam, shell))
    return ShellDecomposition(t, w.n_outputs, tuple(comps))


def all_sequences(n: int, alphabet: int) -> np.ndarray:
    """Every length-n sequence in ``itertools.product`` order (first symbol slowest)."""
    idx = np.arange(alphabet**n)
    out = np.empty((idx.size, n), dtype=np.int8)
    for i in range(n - 1, -1, -1):
        out[:, i] = idx % alphabet
        idx //= alphabet
    return out
