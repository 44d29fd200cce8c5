import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critpers.sampling import SampleBudget, coverage_radius, fps, matched_budget

from oracles import optimal_kcenter_radius

COLLINEAR = [(0.0,), (1.0,), (10.0,)]


def test_collinear_trace():
    assert fps(COLLINEAR, SampleBudget(3)) == [0, 2, 1]


def test_full_budget_is_permutation():
    pts = np.random.default_rng(0).random((9, 2))
    assert sorted(fps(pts, 9)) == list(range(9))


def test_ties_go_to_smallest_index():
    # the three other corners of a square are all at distance 1 or sqrt(2); two tie at 1
    pts = [(0, 0), (1, 0), (0, 1), (1, 1)]
    assert fps(pts, 2) == [0, 3]
    assert fps(pts, 3) == [0, 3, 1]


def test_seed_options():
    pts = np.random.default_rng(1).random((10, 2))
    assert fps(pts, SampleBudget(3, seed_index=4))[0] == 4
    assert fps(pts, 3, seed_index=7)[0] == 7
    assert fps(pts, 3, random_seed=5) == fps(pts, 3, random_seed=5)


def test_errors():
    with pytest.raises(ValueError):
        fps(np.empty((0, 2)), 1)
    with pytest.raises(ValueError):
        fps(COLLINEAR, 4)
    with pytest.raises(ValueError):
        fps(COLLINEAR, 0)
    with pytest.raises(IndexError):
        fps(COLLINEAR, 1, seed_index=3)


def _greedy_choices(pts, m):
    """Every max-min sequence from index 0, over all tie resolutions."""
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    out = []

    def extend(chosen):
        if len(chosen) == m:
            out.append(chosen)
            return
        near = d[:, chosen].min(axis=1)
        best = near.max()
        for k in np.nonzero(near == best)[0]:
            extend(chosen + [int(k)])

    extend([0])
    return out


def test_coverage_vs_greedy_and_optimum():
    pts = np.random.default_rng(2).random((20, 2))
    chosen = fps(pts, 5)
    rad = coverage_radius(pts, chosen)
    radii = [coverage_radius(pts, c) for c in _greedy_choices(pts, 5)]
    assert rad == min(radii)
    assert rad <= 2 * optimal_kcenter_radius(pts, 5) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 12), st.integers(1, 4))
def test_two_approximation(seed, n, m):
    m = min(m, n)
    pts = np.random.default_rng(seed).random((n, 2))
    assert coverage_radius(pts, fps(pts, m)) <= 2 * optimal_kcenter_radius(pts, m) + 1e-12


def test_coverage_examples():
    corners = [(0, 0), (1, 0), (0, 1), (1, 1)]
    assert coverage_radius(corners, range(4)) == 0
    assert coverage_radius(corners, [0]) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        coverage_radius(corners, [])


def test_coverage_matches_double_loop():
    rng = np.random.default_rng(3)
    pts = rng.random((15, 3))
    chosen = [1, 4, 9]
    want = max(min(math.dist(p, pts[c]) for c in chosen) for p in pts)
    assert coverage_radius(pts, chosen) == pytest.approx(want, abs=1e-15)


def test_coverage_non_increasing_in_m():
    pts = np.random.default_rng(4).random((30, 2))
    radii = [coverage_radius(pts, fps(pts, m)) for m in range(1, 31)]
    assert all(a >= b for a, b in itertools.pairwise(radii))
    assert radii[-1] == 0


def test_matched_budget():
    assert matched_budget([10, 11, 12]) == 11
    assert matched_budget([1, 2]) == 2  # 1.5 rounds half up
    assert matched_budget([4, 5, 5, 5]) == 5
    with pytest.raises(ValueError):
        matched_budget([])
