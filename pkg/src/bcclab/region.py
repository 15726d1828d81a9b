"""Achievable rate regions by grid search over auxiliary distributions.

Modes:
    bcc        Rs + Rc <= I(V;Y|U) + min[I(U;Y), I(U;Z)],  Rc <= min[...],
               Re <= I(V;Y|U) - I(V;Z|U),  Re <= Rs
    bcc_equal  Rs = Re <= I(V;Y|U) - I(V;Z|U),  Rc <= min[...]
    bcd        Re = 0,  Rc <= min[...],  Rc + Rs <= I(V;Y|U) + min[...]
    no_split   the bcc system plus Rs <= I(V;Y|U)

A negative secrecy margin I(V;Y|U) - I(V;Z|U) is clamped to 0: the rate
triple with Re = 0 is still achievable by plain superposition coding, so the
clamp never reports an unattainable point.

Every reported region is an inner bound: a finite lattice of auxiliary
choices is searched.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BudgetError, DimensionError, ValidationError
from .prob import Channel, Dist, _check_input
from .typeclasses import all_types

MODES = ("bcc", "bcc_equal", "bcd", "no_split")
DEFAULT_BUDGET = 10**8
CHUNK = 1 << 16
FEAS_TOL = 1e-12


@dataclass
class RegionQuery:
    w_y: Channel
    w_z: Channel
    card_u: int | None = None
    card_v: int | None = None
    resolution: int = 16
    mode: str = "bcc"
    xi: Channel | None = None
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.w_y.n_inputs != self.w_z.n_inputs:
            raise DimensionError("Bob's and Eve's channels need the same input alphabet")
        n_x = self.w_y.n_inputs
        # heuristic caps; no cardinality bound is derived here
        if self.card_u is None:
            self.card_u = n_x + 3
        if self.card_v is None:
            self.card_v = n_x + 1 if self.xi is None else self.xi.n_inputs
        if self.card_u < 1 or self.card_v < 1:
            raise ValidationError("auxiliary cardinalities must be at least 1")
        if self.resolution < 2:
            raise ValidationError("grid resolution must be at least 2")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.xi is not None and (self.xi.n_inputs != self.card_v
                                    or self.xi.n_outputs != n_x):
            raise DimensionError("fixed Ξ must map card_v symbols to the channel input")

    @property
    def n_x(self) -> int:
        return self.w_y.n_inputs


@dataclass
class RegionPoint:
    r_s: float
    r_e: float
    r_c: float
    q_u: Dist
    q_v_given_u: Channel
    xi: Channel
    mode: str = "bcc"

    @property
    def rates(self) -> tuple[float, float, float]:
        return (self.r_s, self.r_e, self.r_c)

    def certificate_json(self) -> dict:
        return {"q_u": self.q_u.probs.tolist(),
                "q_v_given_u": self.q_v_given_u.rows.tolist(),
                "xi": self.xi.rows.tolist()}


@dataclass
class Feasibility:
    feasible: bool
    slacks: dict
    violated: list = field(default_factory=list)


def _informations(q_u, q_v_given_u, xi, w_y, w_z):
    _check_input(q_u, q_v_given_u)
    if q_v_given_u.n_outputs != xi.n_inputs or xi.n_outputs != w_y.n_inputs \
            or w_y.n_inputs != w_z.n_inputs:
        raise DimensionError("U -> V -> X -> (Y, Z) alphabets do not chain")
    out = kernels.region_batch(q_u.probs[None], q_v_given_u.rows[None], xi.rows[None],
                               w_y.rows, w_z.rows)
    return out[0]


def _vertices(info: np.ndarray, mode: str) -> np.ndarray:
    """Pareto vertices (k, N, 3) of each certificate's polytope."""
    i_uy, i_uz, a, i_vz = info[:, 0], info[:, 1], info[:, 2], info[:, 3]
    m = np.minimum(i_uy, i_uz)
    d = np.maximum(a - i_vz, 0.0)
    zero = np.zeros_like(a)
    if mode == "bcc":
        return np.stack([np.stack([a, d, m], -1), np.stack([a + m, d, zero], -1)])
    if mode == "bcc_equal":
        return np.stack([np.stack([d, d, m], -1)])
    if mode == "bcd":
        return np.stack([np.stack([a, zero, m], -1), np.stack([a + m, zero, zero], -1)])
    if mode == "no_split":
        return np.stack([np.stack([a, d, m], -1)])
    raise ValidationError(f"unknown mode {mode!r}")


def evaluate_point(q_u: Dist, q_v_given_u: Channel, xi: Channel, w_y: Channel,
                   w_z: Channel, mode: str = "bcc") -> RegionPoint:
    """Corner of the certificate's rate polytope with the largest common rate."""
    info = _informations(q_u, q_v_given_u, xi, w_y, w_z)
    rs, re, rc = _vertices(info[None], mode)[0, 0]
    return RegionPoint(float(rs), float(re), float(rc), q_u, q_v_given_u, xi, mode)


def point_vertices(q_u, q_v_given_u, xi, w_y, w_z, mode="bcc") -> list[RegionPoint]:
    info = _informations(q_u, q_v_given_u, xi, w_y, w_z)
    return [RegionPoint(float(v[0]), float(v[1]), float(v[2]), q_u, q_v_given_u, xi, mode)
            for v in _vertices(info[None], mode)[:, 0]]


def check_point_feasible(point: RegionPoint, query: RegionQuery | None = None,
                         tol: float = FEAS_TOL) -> Feasibility:
    """Re-evaluate the mode's inequalities at the point's certificate."""
    mode = query.mode if query is not None else point.mode
    w_y = query.w_y if query is not None else None
    w_z = query.w_z if query is not None else None
    if w_y is None:
        raise ValidationError("feasibility check needs the query's channels")
    i_uy, i_uz, a, i_vz = _informations(point.q_u, point.q_v_given_u, point.xi, w_y, w_z)
    m = min(i_uy, i_uz)
    d = max(a - i_vz, 0.0)
    rs, re, rc = point.rates
    slacks = {"rs_nonneg": rs, "re_nonneg": re, "rc_nonneg": rc,
              "common": m - rc}
    if mode in ("bcc", "no_split"):
        slacks.update(sum=a + m - rs - rc, secrecy=d - re, re_le_rs=rs - re)
        if mode == "no_split":
            slacks["private"] = a - rs
    elif mode == "bcc_equal":
        slacks.update(secrecy=d - rs, re_eq_rs=-abs(rs - re))
    elif mode == "bcd":
        slacks.update(sum=a + m - rs - rc, no_secrecy=-abs(re))
    violated = sorted(k for k, v in slacks.items() if v < -tol)
    return Feasibility(not violated, slacks, violated)


# ------------------------------------------------------------------ grid search


def simplex_lattice(dim: int, resolution: int) -> np.ndarray:
    """All probability vectors with entries in {0, 1/r, ..., 1}."""
    if dim == 1:
        return np.ones((1, 1))
    pts = np.array([t.counts for t in all_types(resolution, dim)], dtype=np.float64)
    return pts / resolution


@dataclass
class _Grid:
    lu: np.ndarray
    lv: np.ndarray
    lx: np.ndarray | None
    shape: tuple
    card_u: int
    card_v: int
    fixed_xi: np.ndarray | None

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def gather(self, flat):
        idx = np.unravel_index(flat, self.shape)
        qu = self.lu[idx[0]]
        qvu = np.stack([self.lv[i] for i in idx[1:1 + self.card_u]], axis=1)
        if self.fixed_xi is not None:
            xi = np.broadcast_to(self.fixed_xi, (flat.size,) + self.fixed_xi.shape)
        else:
            xi = np.stack([self.lx[i] for i in idx[1 + self.card_u:]], axis=1)
        return qu, qvu, xi


def _grid(query: RegionQuery) -> _Grid:
    r = query.resolution
    lu = simplex_lattice(query.card_u, r)
    lv = simplex_lattice(query.card_v, r)
    shape = (lu.shape[0],) + (lv.shape[0],) * query.card_u
    lx = None
    fixed = None
    if query.xi is None:
        lx = simplex_lattice(query.n_x, r)
        shape += (lx.shape[0],) * query.card_v
    else:
        fixed = query.xi.rows
    return _Grid(lu, lv, lx, shape, query.card_u, query.card_v, fixed)


def grid_size(query: RegionQuery) -> int:
    r = query.resolution
    n_u = math.comb(r + query.card_u - 1, query.card_u - 1)
    n_v = math.comb(r + query.card_v - 1, query.card_v - 1)
    total = n_u * n_v**query.card_u
    if query.xi is None:
        total *= math.comb(r + query.n_x - 1, query.n_x - 1) ** query.card_v
    return total


def pareto_filter(rates: np.ndarray, keys: np.ndarray | None = None) -> np.ndarray:
    """Indices of Pareto-maximal rows of ``rates`` (N, 3), duplicates dropped.

    Among equal rows the one with the smallest key survives; the result is
    ordered by descending (Rs, Re, Rc).
    """
    n = rates.shape[0]
    if keys is None:
        keys = np.arange(n)
    order = np.lexsort((keys, -rates[:, 2], -rates[:, 1], -rates[:, 0]))
    es: list[float] = []
    cs: list[float] = []
    keep = []
    for i in order:
        e, c = rates[i, 1], rates[i, 2]
        j = bisect.bisect_left(es, e)
        if j < len(es) and cs[j] >= c:
            continue
        hi = bisect.bisect_right(es, e)
        lo = hi
        while lo > 0 and cs[lo - 1] <= c:
            lo -= 1
        del es[lo:hi]
        del cs[lo:hi]
        es.insert(lo, e)
        cs.insert(lo, c)
        keep.append(i)
    return np.array(keep, dtype=np.int64)


def region_boundary(query: RegionQuery, backend=None) -> list[RegionPoint]:
    """Pareto-maximal vertices over the auxiliary lattice (an inner bound)."""
    total = grid_size(query)
    if total > query.budget:
        raise BudgetError(f"grid has {total} certificates, budget is {query.budget}")
    grid = _grid(query)
    kept_rates = []
    kept_keys = []
    for start in range(0, total, CHUNK):
        flat = np.arange(start, min(start + CHUNK, total))
        qu, qvu, xi = grid.gather(flat)
        info = kernels.region_batch(qu, qvu, xi, query.w_y.rows, query.w_z.rows,
                                    backend=backend)
        verts = _vertices(info, query.mode)            # (k, N, 3)
        k = verts.shape[0]
        rates = verts.reshape(-1, 3)
        keys = (flat[None, :] * k + np.arange(k)[:, None]).reshape(-1)
        sel = pareto_filter(rates, keys)
        kept_rates.append(rates[sel])
        kept_keys.append(keys[sel])
    rates = np.concatenate(kept_rates)
    keys = np.concatenate(kept_keys)
    sel = pareto_filter(rates, keys)
    k = _vertices(np.zeros((1, 4)), query.mode).shape[0]
    points = []
    for i in sel:
        flat = np.array([keys[i] // k])
        qu, qvu, xi = grid.gather(flat)
        points.append(RegionPoint(float(rates[i, 0]), float(rates[i, 1]),
                                  float(rates[i, 2]), Dist.normalized(qu[0]),
                                  Channel.normalized(qvu[0]), Channel.normalized(xi[0]),
                                  query.mode))
    return points


def dominated_by(points: list[RegionPoint], others: list[RegionPoint],
                 tol: float = 0.0) -> bool:
    """True when each point in ``points`` is weakly dominated by some point in ``others``."""
    if not points:
        return True
    if not others:
        return False
    b = np.array([o.rates for o in others])
    for p in points:
        if not np.any(np.all(b >= np.array(p.rates) - tol, axis=1)):
            return False
    return True


_HULL_AXES = {"bcc": (0, 1, 2), "no_split": (0, 1, 2), "bcc_equal": (0, 2), "bcd": (0, 2)}


def convex_hull_points(points: list[RegionPoint], mode: str) -> list[RegionPoint]:
    """Pareto points that are vertices of the time-sharing hull of the region."""
    from scipy.spatial import ConvexHull, QhullError

    if len(points) < 2:
        return list(points)
    axes = _HULL_AXES[mode]
    pts = np.array([p.rates for p in points])[:, axes]
    extra = [np.zeros(len(axes))]
    for j in range(len(axes)):
        proj = pts.copy()
        proj[:, j] = 0.0
        extra.append(proj)
    cloud = np.vstack([pts] + [np.atleast_2d(e) for e in extra])
    try:
        hull = ConvexHull(cloud)
    except QhullError:
        return list(points)
    verts = set(int(v) for v in hull.vertices if v < len(points))
    return [p for i, p in enumerate(points) if i in verts]
