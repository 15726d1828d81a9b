import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bcclab.errors import BudgetError, DimensionError, ValidationError
from bcclab.prob import Channel, Dist, binary_entropy
from bcclab.region import (RegionQuery, check_point_feasible, convex_hull_points,
                           dominated_by, evaluate_point, grid_size, pareto_filter,
                           point_vertices, region_boundary, simplex_lattice)

from conftest import random_channel, random_dist

BSC1, BSC2 = Channel.bsc(0.1), Channel.bsc(0.2)


def _pareto_brute(rates):
    keep = []
    for i, r in enumerate(rates):
        dominated = any(np.all(o >= r) and np.any(o > r) for o in rates)
        dup_earlier = any(np.array_equal(rates[j], r) for j in range(i))
        if not dominated and not dup_earlier:
            keep.append(i)
    return sorted(keep)


@given(st.integers(0, 2**31), st.integers(1, 60))
def test_pareto_filter_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    rates = rng.integers(0, 4, size=(n, 3)).astype(float)
    assert sorted(pareto_filter(rates).tolist()) == _pareto_brute(rates)


def test_simplex_lattice():
    pts = simplex_lattice(3, 4)
    assert pts.shape == (15, 3)
    np.testing.assert_allclose(pts.sum(axis=1), 1.0)
    assert simplex_lattice(1, 7).tolist() == [[1.0]]


def test_query_defaults_and_validation():
    q = RegionQuery(BSC1, BSC2)
    assert (q.card_u, q.card_v) == (5, 3)
    with pytest.raises(ValidationError):
        RegionQuery(BSC1, BSC2, mode="other")
    with pytest.raises(DimensionError):
        RegionQuery(BSC1, Channel.identity(3))
    with pytest.raises(BudgetError):
        region_boundary(RegionQuery(BSC1, BSC2, resolution=8, budget=1000))


def test_grid_size_counts():
    q = RegionQuery(BSC1, BSC2, card_u=2, card_v=2, resolution=4)
    assert grid_size(q) == 5 * 5**2 * 5**2


def test_degraded_secrecy_capacity():
    q = RegionQuery(BSC1, BSC2, card_u=1, card_v=2, resolution=32, mode="bcc_equal")
    pts = region_boundary(q)
    best = max(p.r_s for p in pts)
    assert best == pytest.approx(binary_entropy(0.2) - binary_entropy(0.1), abs=1e-12)


def test_symmetric_case_has_no_secrecy():
    q = RegionQuery(BSC1, BSC1, card_u=2, card_v=2, resolution=6)
    assert max(p.r_e for p in region_boundary(q)) == 0.0


@pytest.mark.parametrize("mode", ["bcc", "bcc_equal", "bcd", "no_split"])
def test_boundary_points_feasible(mode):
    q = RegionQuery(BSC1, BSC2, card_u=2, card_v=2, resolution=4, mode=mode)
    pts = region_boundary(q)
    assert pts
    for p in pts:
        f = check_point_feasible(p, q)
        assert f.feasible, f.violated


def test_feasibility_detects_violation():
    q = RegionQuery(BSC1, BSC2, card_u=1, card_v=2, resolution=4, mode="bcc")
    p = region_boundary(q)[0]
    p.r_s += 1.0
    assert not check_point_feasible(p, q).feasible


def test_vertices_of_one_certificate(rng):
    q_u, q_vu = random_dist(rng, 2), random_channel(rng, 2, 2)
    xi = random_channel(rng, 2, 2)
    verts = point_vertices(q_u, q_vu, xi, BSC1, BSC2, "bcc")
    assert len(verts) == 2
    a, b = verts
    assert b.r_s == pytest.approx(a.r_s + a.r_c) and b.r_c == 0.0
    assert evaluate_point(q_u, q_vu, xi, BSC1, BSC2).rates == a.rates


def test_finer_grid_dominates_coarser():
    coarse = region_boundary(RegionQuery(BSC1, BSC2, card_u=1, card_v=2, resolution=4))
    fine = region_boundary(RegionQuery(BSC1, BSC2, card_u=1, card_v=2, resolution=8))
    assert dominated_by(coarse, fine, tol=1e-12)


def test_backends_give_same_boundary():
    q = RegionQuery(BSC1, BSC2, card_u=2, card_v=2, resolution=3)
    a = [p.rates for p in region_boundary(q, backend="numpy")]
    b = [p.rates for p in region_boundary(q, backend="numba")]
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_fixed_xi_is_not_searched():
    q = RegionQuery(BSC1, BSC2, card_u=1, card_v=2, resolution=8, xi=Channel.identity(2))
    pts = region_boundary(q)
    assert all(p.xi == Channel.identity(2) for p in pts)


def test_convex_hull_subset():
    q = RegionQuery(BSC1, BSC2, card_u=1, card_v=2, resolution=8)
    pts = region_boundary(q)
    hull = convex_hull_points(pts, "bcc")
    assert 0 < len(hull) <= len(pts)
    assert all(any(h is p for p in pts) for h in hull)
    for axis in range(3):
        assert max(h.rates[axis] for h in hull) == max(p.rates[axis] for p in pts)
