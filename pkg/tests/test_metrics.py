import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critpers.homology import PersistenceDiagram
from critpers.metrics import (
    cloud_distance,
    matching_problem,
    matching_to_json,
    wasserstein,
    wasserstein_matching,
)

from oracles import brute_wasserstein


def random_diagram(rng, dim=1, max_points=4, cap=math.inf):
    n = int(rng.integers(0, max_points + 1))
    births = rng.random(n)
    deaths = births + rng.random(n) + 1e-3
    return PersistenceDiagram(dim, list(zip(births, deaths)), cap)


def D(*pts, dim=1, cap=math.inf):
    return PersistenceDiagram(dim, list(pts), cap)


def test_identity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = random_diagram(rng)
        for q in (1, 2, 3.5):
            assert wasserstein(d, d, q) == 0.0


def test_single_point_vs_empty():
    assert wasserstein(D((0, 2)), D(), 1) == 1.0


def test_direct_match_beats_diagonal():
    assert wasserstein(D((1, 3)), D((1, 2)), 1) == 1.0


@pytest.mark.parametrize("q", [1, 2])
def test_matches_brute_force(q):
    rng = np.random.default_rng(q)
    for _ in range(60):
        a, b = random_diagram(rng), random_diagram(rng)
        want = brute_wasserstein(a.points, b.points, q)
        assert wasserstein(a, b, q) == pytest.approx(want, abs=1e-9)


def test_matching_problem_shape():
    a = np.array([[0.0, 1.0], [0.0, 3.0]])
    b = np.array([[1.0, 2.0]])
    c = matching_problem(a, b)
    assert c.shape == (3, 3)
    assert c[2, 1] == 0.0 and c[2, 2] == 0.0  # diagonal to diagonal
    assert c[0, 0] == 1.0 and c[0, 1] == 0.5 and c[2, 0] == 0.5


def test_errors():
    with pytest.raises(ValueError):
        wasserstein(D(dim=0), D(dim=1))
    with pytest.raises(ValueError):
        wasserstein(D(), D(), q=0.5)


def test_essential_capped_at_smaller_cap():
    a = D((0.0, math.inf), dim=0, cap=4.0)
    b = D((0.0, math.inf), dim=0, cap=2.0)
    assert wasserstein(a, b) == 0.0
    c = D((1.0, math.inf), dim=0, cap=2.0)
    assert wasserstein(a, c) == 1.0
    assert wasserstein(a, D(dim=0, cap=3.0)) == 1.5


def test_essential_without_cap_rejected():
    with pytest.raises(ValueError):
        wasserstein(D((0.0, math.inf), dim=0), D((1.0, math.inf), dim=0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2]))
def test_symmetry_exact(seed, q):
    rng = np.random.default_rng(seed)
    a, b = random_diagram(rng), random_diagram(rng)
    assert wasserstein(a, b, q) == wasserstein(b, a, q)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2]))
def test_triangle_inequality(seed, q):
    rng = np.random.default_rng(seed)
    a, b, c = (random_diagram(rng) for _ in range(3))
    assert wasserstein(a, c, q) <= wasserstein(a, b, q) + wasserstein(b, c, q) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_adding_a_point_moves_at_most_its_diagonal_cost(seed):
    rng = np.random.default_rng(seed)
    a, b = random_diagram(rng), random_diagram(rng)
    p = (float(rng.random()), float(rng.random() + 1.0))
    bigger = D(*a.points, p)
    assert abs(wasserstein(bigger, b) - wasserstein(a, b)) <= (p[1] - p[0]) / 2 + 1e-12


def test_scaling():
    rng = np.random.default_rng(5)
    a, b = random_diagram(rng), random_diagram(rng)
    assert wasserstein(a.scaled(3.0), b.scaled(3.0)) == pytest.approx(3 * wasserstein(a, b))


def test_matching_reports_pairs():
    dist, matching = wasserstein_matching(D((1, 3)), D((1, 2)))
    assert dist == 1.0 and matching == [(0, 0)]
    dist, matching = wasserstein_matching(D((0, 10)), D((0, 0.5)))
    # matching directly would cost 9.5; both to the diagonal costs 5 + 0.25
    assert dist == 5.25 and matching == [(0, None), (None, 0)]
    doc = json.loads(matching_to_json(D((0, 2)), D()))
    assert doc["distance"] == 1.0 and doc["matching"] == [{"left": [0.0, 2.0], "right": None}]


def _triple(rng):
    return [random_diagram(rng, dim=k) for k in range(3)]


def test_cloud_distance_is_max():
    a = [D(dim=0), D((0, 2.4), dim=1), D(dim=2)]
    b = [D((0, 1), dim=0), D(dim=1), D((0, 0.6), dim=2)]
    assert cloud_distance(a, b) == 1.2


def test_cloud_distance_compositional():
    rng = np.random.default_rng(8)
    for _ in range(20):
        a, b = _triple(rng), _triple(rng)
        want = max(brute_wasserstein(a[k].points, b[k].points, 1) for k in range(3))
        assert cloud_distance(a, b) == pytest.approx(want, abs=1e-9)
        assert cloud_distance(a, a) == 0.0
        assert cloud_distance(a, b) == cloud_distance(b, a)


def test_cloud_distance_missing_dimension():
    with pytest.raises(ValueError):
        cloud_distance([D(dim=0), D(dim=1)], [D(dim=0), D(dim=1), D(dim=2)])
