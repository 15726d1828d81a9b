"""Surjective linear hash functions over GF(2).

A k-bit private index ``b`` is an integer with bit j holding coordinate j.
A hash is an m x k full-rank binary matrix stored as m row bitmasks; output
bit i is the parity of ``rows[i] & b``.

The uniform distribution over full-rank matrices is a two-universal family:
for b1 != b2 the collision probability is (2^(k-m) - 1) / (2^k - 1), which is
strictly below 2^-m.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import BudgetError, ValidationError
from .seeding import as_generator

MAX_BITS = 30
FAMILY_GUARD = 2**20


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def gf2_rank(rows, k: int) -> int:
    """Rank of the row bitmasks over GF(2)."""
    pivots = {}
    rank = 0
    for r in rows:
        r = int(r)
        for bit in range(k - 1, -1, -1):
            if not (r >> bit) & 1:
                continue
            if bit in pivots:
                r ^= pivots[bit]
            else:
                pivots[bit] = r
                rank += 1
                break
    return rank


@dataclass(frozen=True)
class LinearHash:
    rows: tuple[int, ...]
    k: int

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if self.k < 0 or self.k > MAX_BITS:
            raise ValidationError(f"k must be in [0, {MAX_BITS}]")
        if len(rows) > self.k:
            raise ValidationError("a surjective hash needs m <= k")
        if any(r < 0 or r >> self.k for r in rows):
            raise ValidationError("row mask wider than k bits")
        if gf2_rank(rows, self.k) != len(rows):
            raise ValidationError("hash matrix is not full rank")

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def matrix(self) -> np.ndarray:
        out = np.zeros((self.m, self.k), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.k):
                out[i, j] = (r >> j) & 1
        return out

    @classmethod
    def from_matrix(cls, matrix) -> "LinearHash":
        mat = np.asarray(matrix, dtype=np.int64) & 1
        if mat.ndim != 2:
            raise ValidationError("hash matrix must be 2-D")
        rows = tuple(int(sum(int(x) << j for j, x in enumerate(row))) for row in mat)
        return cls(rows, mat.shape[1])

    @classmethod
    def trivial(cls, k: int) -> "LinearHash":
        """The m = 0 hash onto a single secret."""
        return cls((), k)

    def __call__(self, b: int) -> int:
        return apply(self, b)

    def to_json(self) -> dict:
        width = max(1, math.ceil(self.k / 4))
        return {"k": self.k, "m": self.m,
                "rows": [f"{r:0{width}x}" for r in self.rows]}

    @classmethod
    def from_json(cls, obj) -> "LinearHash":
        try:
            k, m, rows = int(obj["k"]), int(obj["m"]), obj["rows"]
            masks = tuple(int(r, 16) for r in rows)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad hash JSON: {exc}") from None
        if len(masks) != m:
            raise ValidationError(f"hash JSON declares m={m} but has {len(masks)} rows")
        return cls(masks, k)


def apply(f: LinearHash, b: int) -> int:
    b = int(b)
    if b < 0 or b >> f.k:
        raise ValidationError(f"index {b} out of range for {f.k} bits")
    s = 0
    for i, r in enumerate(f.rows):
        s |= _parity(r & b) << i
    return s


def apply_array(f: LinearHash, b) -> np.ndarray:
    """Vectorized :func:`apply` over an integer array."""
    b = np.asarray(b, dtype=np.uint64)
    out = np.zeros(b.shape, dtype=np.int64)
    for i, r in enumerate(f.rows):
        out |= (np.bitwise_count(b & np.uint64(r)).astype(np.int64) & 1) << i
    return out


def _check_dims(k: int, m: int):
    if not (1 <= m <= k <= MAX_BITS):
        raise ValidationError(f"need 1 <= m <= k <= {MAX_BITS}, got k={k}, m={m}")


def sample_hash(k: int, m: int, seed=None) -> LinearHash:
    """Uniformly random full-rank m x k matrix (rejection sampling)."""
    _check_dims(k, m)
    rng = as_generator(seed)
    while True:
        rows = tuple(int(x) for x in rng.integers(0, 1 << k, size=m, dtype=np.int64))
        if gf2_rank(rows, k) == m:
            return LinearHash(rows, k)


def _rref(f: LinearHash):
    """Row-reduce [rows | e_i]; returns pivot columns and reduced augmented rows."""
    rows = [(r, 1 << i) for i, r in enumerate(f.rows)]
    pivots = []
    rank = 0
    for col in range(f.k):
        sel = next((i for i in range(rank, len(rows)) if (rows[i][0] >> col) & 1), None)
        if sel is None:
            continue
        rows[rank], rows[sel] = rows[sel], rows[rank]
        pr, pa = rows[rank]
        for i in range(len(rows)):
            if i != rank and (rows[i][0] >> col) & 1:
                rows[i] = (rows[i][0] ^ pr, rows[i][1] ^ pa)
        pivots.append(col)
        rank += 1
    return pivots, rows


def kernel_basis(f: LinearHash) -> list[int]:
    pivots, rows = _rref(f)
    free = [c for c in range(f.k) if c not in pivots]
    basis = []
    for c in free:
        vec = 1 << c
        for (r, _), p in zip(rows, pivots):
            if (r >> c) & 1:
                vec |= 1 << p
        basis.append(vec)
    return basis


def particular_preimage(f: LinearHash, s: int) -> int:
    if s < 0 or s >> f.m:
        raise ValidationError(f"secret {s} out of range for {f.m} bits")
    pivots, rows = _rref(f)
    b = 0
    for (_, aug), p in zip(rows, pivots):
        if _parity(aug & s):
            b |= 1 << p
    return b


def sample_preimage(f: LinearHash, s: int, seed=None) -> int:
    """Uniform element of ``f^-1(s)``: a particular solution plus a random kernel vector."""
    rng = as_generator(seed)
    b = particular_preimage(f, s)
    basis = kernel_basis(f)
    if basis:
        coins = rng.integers(0, 2, size=len(basis))
        for c, v in zip(coins, basis):
            if c:
                b ^= v
    return b


def fiber(f: LinearHash, s: int) -> list[int]:
    """Every preimage of ``s``, sorted."""
    b0 = particular_preimage(f, s)
    basis = kernel_basis(f)
    out = []
    for coins in itertools.product((0, 1), repeat=len(basis)):
        b = b0
        for c, v in zip(coins, basis):
            if c:
                b ^= v
        out.append(b)
    return sorted(out)


def fiber_table(f: LinearHash) -> np.ndarray:
    """``table[s]`` lists the 2^(k-m) preimages of s (sorted)."""
    vals = apply_array(f, np.arange(1 << f.k))
    order = np.lexsort((np.arange(vals.size), vals))
    return order.reshape(1 << f.m, 1 << (f.k - f.m))


@dataclass(frozen=True)
class HashFamily:
    """All full-rank m x k binary matrices, drawn uniformly."""

    k: int
    m: int

    def __post_init__(self):
        _check_dims(self.k, self.m)

    def size(self) -> int:
        return math.prod((1 << self.k) - (1 << i) for i in range(self.m))

    def sample(self, seed=None) -> LinearHash:
        return sample_hash(self.k, self.m, seed)

    def members(self, guard: int = FAMILY_GUARD) -> Iterator[LinearHash]:
        """Enumerate every member (ordered row tuples with independent rows)."""
        if self.size() > guard:
            raise BudgetError(f"family has {self.size()} members (guard {guard})")
        yield from (LinearHash(rows, self.k) for rows in self._row_tuples())

    def _row_tuples(self):
        k, m = self.k, self.m

        def rec(prefix, span):
            if len(prefix) == m:
                yield tuple(prefix)
                return
            for r in range(1, 1 << k):
                if r in span:
                    continue
                new_span = span | {x ^ r for x in span}
                yield from rec(prefix + [r], new_span)

        yield from rec([], {0})

    def member_rows(self, guard: int = FAMILY_GUARD) -> np.ndarray:
        """Row masks of every member as an (F, m) int64 array."""
        if self.size() > guard:
            raise BudgetError(f"family has {self.size()} members (guard {guard})")
        return np.array(list(self._row_tuples()), dtype=np.int64).reshape(-1, self.m)

    def value_table(self, guard: int = FAMILY_GUARD) -> np.ndarray:
        """``table[f, b]`` = hash of b under member f."""
        rows = self.member_rows(guard).astype(np.uint64)
        b = np.arange(1 << self.k, dtype=np.uint64)
        out = np.zeros((rows.shape[0], b.size), dtype=np.int64)
        for i in range(self.m):
            bits = np.bitwise_count(rows[:, i:i + 1] & b[None, :]).astype(np.int64) & 1
            out |= bits << i
        return out


def collision_probability(family: HashFamily, b1: int, b2: int,
                          mode: str = "auto") -> Fraction:
    """Exact Pr_F[F(b1) = F(b2)] for the uniform full-rank family.

    ``enumerate`` walks every member (feasible for m*k up to about 16 bits);
    ``count`` enumerates the subspace orthogonal to ``b1 ^ b2`` and counts
    ordered independent m-tuples inside it.
    """
    k = family.k
    for b in (b1, b2):
        if b < 0 or b >> k:
            raise ValidationError(f"index {b} out of range for {k} bits")
    if b1 == b2:
        raise ValidationError("collision probability needs distinct inputs")
    d = b1 ^ b2
    if mode == "auto":
        mode = "enumerate" if family.size() <= 2**16 else "count"
    if mode == "enumerate":
        hits = total = 0
        for f in family.members():
            total += 1
            hits += all(_parity(r & d) == 0 for r in f.rows)
        return Fraction(hits, total)
    if mode == "count":
        orth = sum(1 for r in range(1 << k) if _parity(r & d) == 0)
        hits = math.prod(orth - (1 << i) for i in range(family.m))
        return Fraction(max(hits, 0), family.size())
    raise ValidationError(f"unknown mode {mode!r}")


def sizes_for_rates(n: int, r_p: float, r_s: float) -> tuple[int, int]:
    """(k, m) with k = ceil(n R_p / ln 2), m = floor(n R_s / ln 2).

    A 1e-9 slack absorbs float error when n R / ln 2 is an integer.
    """
    x_p = n * r_p / math.log(2)
    x_s = n * r_s / math.log(2)
    k = max(0, math.ceil(x_p - 1e-9))
    m = max(0, math.floor(x_s + 1e-9))
    return k, min(m, k)
