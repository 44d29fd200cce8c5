import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critpers.field import to_point_cloud
from critpers.filtration import (
    Filtration,
    LandmarkSet,
    Simplex,
    filtration_from_text,
    lazy_witness_filtration,
    rips_filtration,
    select_landmarks,
)
from critpers.morse import ms_sample
from critpers.synthetic import gaussian_bumps

from oracles import clique_values

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


def by_dim(filt):
    out = {}
    for s in filt:
        out.setdefault(s.dim, []).append(s.value)
    return out


def test_unit_square_rips():
    filt = rips_filtration(SQUARE, max_dim=2, cap=2)
    d = by_dim(filt)
    r2 = math.sqrt(2)
    assert d[0] == [0.0] * 4
    assert sorted(d[1]) == [1.0] * 4 + [pytest.approx(r2)] * 2
    assert d[2] == [pytest.approx(r2)] * 4
    filt.check()


def test_edge_over_cap():
    filt = rips_filtration([(0, 0), (5, 0)], cap=2)
    assert [s.vertices for s in filt] == [(0,), (1,)]


def test_default_cap_is_diameter():
    filt = rips_filtration(SQUARE)
    assert filt.cap == pytest.approx(math.sqrt(2))
    assert filt.count_by_dim() == {0: 4, 1: 6, 2: 4, 3: 1}


@pytest.mark.parametrize("seed", range(10))
def test_rips_values_match_clique_oracle(seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((8, 2))
    cap = float(rng.uniform(0.3, 1.5))
    filt = rips_filtration(pts, max_dim=3, cap=cap)
    got = {s.vertices: s.value for s in filt}
    want = clique_values(pts, 3, cap)
    assert got.keys() == want.keys()
    for k, v in want.items():
        assert got[k] == pytest.approx(v, abs=1e-15)
    filt.check()


def test_sort_order_value_dim_vertices():
    filt = rips_filtration(SQUARE, 3)
    keys = [(s.value, s.dim, s.vertices) for s in filt]
    assert keys == sorted(keys)


@pytest.mark.parametrize("n", [1, 2, 5, 7])
def test_counts_at_infinite_cap(n):
    pts = np.random.default_rng(n).random((n, 3))
    counts = rips_filtration(pts, 3, cap=math.inf).count_by_dim()
    for k in range(min(n, 4)):
        assert counts[k] == comb(n, k + 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 1.0), st.floats(0.0, 1.0))
def test_rips_cap_monotone(seed, cap, extra):
    pts = np.random.default_rng(seed).random((7, 2))
    small = {s.vertices: s.value for s in rips_filtration(pts, 3, cap)}
    big = {s.vertices: s.value for s in rips_filtration(pts, 3, cap + extra)}
    assert all(big[k] == v for k, v in small.items())


def test_rips_validation():
    with pytest.raises(ValueError):
        rips_filtration(SQUARE, max_dim=4)
    with pytest.raises(ValueError):
        rips_filtration(np.empty((0, 2)))
    with pytest.raises(ValueError):
        rips_filtration(SQUARE, cap=-1)


def test_check_detects_violations():
    bad = Filtration([Simplex((0,), 0.0), Simplex((0, 1), 1.0)], cap=2)
    with pytest.raises(ValueError):
        bad.check()
    late = Filtration([Simplex((0,), 0.0), Simplex((1,), 2.0), Simplex((0, 1), 1.0)], cap=2)
    with pytest.raises(ValueError):
        late.check()


def test_text_round_trip_is_byte_stable():
    pts = np.random.default_rng(4).random((6, 2))
    filt = rips_filtration(pts, 3)
    text = filt.to_text()
    assert text.splitlines()[0].startswith("# cap")
    back = filtration_from_text(text)
    assert back == filt
    assert back.to_text() == text


# --- witness ----------------------------------------------------------------

def test_one_landmark_single_vertex():
    pts = [(0, 0), (1, 0), (2, 0)]
    filt = lazy_witness_filtration(pts, LandmarkSet((0,), (1, 2)))
    assert [(s.vertices, s.value) for s in filt] == [((0,), 0.0)]


def _ab_witness():
    # a at 0, b at 3, w at 1 on a line: d(a,w)=1, d(b,w)=2
    return [(0.0,), (3.0,), (1.0,)], LandmarkSet((0, 1), (2,))


def test_witness_nu0():
    pts, lm = _ab_witness()
    filt = lazy_witness_filtration(pts, lm, nu=0, cap=5)
    assert filt.value_of((0, 1)) == 2.0


def test_witness_nu1():
    pts, lm = _ab_witness()
    filt = lazy_witness_filtration(pts, lm, nu=1, cap=5)
    assert filt.value_of((0, 1)) == 1.0


def test_witness_nu2():
    pts, lm = _ab_witness()
    filt = lazy_witness_filtration(pts, lm, nu=2, cap=5)
    assert filt.value_of((0, 1)) == 0.0


def test_no_witnesses_vertices_only():
    filt = lazy_witness_filtration([(0, 0), (1, 0)], LandmarkSet((0, 1), ()))
    assert filt.count_by_dim() == {0: 2}


def test_witness_rejects_bad_nu():
    pts, lm = _ab_witness()
    with pytest.raises(ValueError):
        lazy_witness_filtration(pts, lm, nu=3)
    with pytest.raises(ValueError):
        lazy_witness_filtration(pts, LandmarkSet(()))


@pytest.mark.parametrize("seed", range(8))
def test_witness_edges_match_direct_definition(seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((12, 2))
    lm = LandmarkSet(tuple(range(5)), tuple(range(5, 12)))
    for nu in (0, 1, 2):
        filt = lazy_witness_filtration(pts, lm, nu=nu, cap=10)
        for a in range(5):
            for b in range(a + 1, 5):
                best = math.inf
                for w in range(5, 12):
                    dl = sorted(np.linalg.norm(pts[w] - pts[x]) for x in range(5))
                    m = 0.0 if nu == 0 else dl[nu - 1]
                    t = max(np.linalg.norm(pts[a] - pts[w]), np.linalg.norm(pts[b] - pts[w])) - m
                    best = min(best, max(t, 0.0))
                assert filt.value_of((a, b)) == pytest.approx(best, abs=1e-12)
        filt.check()


@pytest.mark.parametrize("seed", range(5))
def test_witness_no_later_than_rips(seed):
    pts = np.random.default_rng(seed).random((7, 2))
    n = len(pts)
    lm = LandmarkSet(tuple(range(n)), tuple(range(n)))
    wit = {s.vertices: s.value for s in lazy_witness_filtration(pts, lm, nu=2)}
    rips = {s.vertices: s.value for s in rips_filtration(pts, 3)}
    for k, v in rips.items():
        if len(k) == 2:
            assert wit[k] <= v + 1e-12


def test_select_all():
    lm = select_landmarks(SQUARE, "all")
    assert lm.landmark_indices == (0, 1, 2, 3) and lm.witness_indices == ()


def test_select_fps_collinear():
    lm = select_landmarks([(0.0,), (1.0,), (10.0,)], "fps", m=3)
    assert lm.landmark_indices == (0, 2, 1)
    assert lm.witness_indices == ()


def test_select_ms_critical_delegates():
    # peaks stay below 1.0 so that no critical point is excluded from the cloud
    f = gaussian_bumps(32, 20, [(8, 10, 0.9, 2.5), (23, 9, 0.45, 2.5)])
    cloud = to_point_cloud(f)
    lm = select_landmarks(cloud, "ms_critical", field=f, r=0.2)
    assert len(lm.landmark_indices) == len(ms_sample(f, 0.2))
    assert set(lm.landmark_indices).isdisjoint(lm.witness_indices)
    assert len(lm.landmark_indices) + len(lm.witness_indices) == len(cloud)


def test_select_ms_critical_skips_excluded_points(caplog):
    f = gaussian_bumps(32, 20, [(8, 10, 1.0, 2.5), (23, 9, 0.5, 2.5)])
    lm = select_landmarks(to_point_cloud(f), "ms_critical", field=f, r=0.2)
    assert len(lm.landmark_indices) == len(ms_sample(f, 0.2)) - 1
    assert "outside the cloud" in caplog.text


def test_select_errors():
    with pytest.raises(ValueError):
        select_landmarks(SQUARE, "fps")
    with pytest.raises(ValueError):
        select_landmarks(SQUARE, "random")
    with pytest.raises(ValueError):
        select_landmarks(SQUARE, "ms_critical")
