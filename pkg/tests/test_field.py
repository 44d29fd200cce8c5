import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from critpers.field import (
    EmptyPointCloudError,
    GridPointCloud,
    PGMHeaderError,
    PGMTruncatedError,
    PGMValueError,
    ScalarField,
    SamplePoints,
    dump_pgm,
    field_from_function,
    load_pgm,
    read_pgm,
    resize,
    to_point_cloud,
    write_pgm,
)
from critpers.synthetic import gaussian_bumps

from oracles import nearest_resize


def test_p2_single_pixel():
    f = load_pgm(b"P2\n1 1\n255\n255\n")
    assert f.shape == (1, 1)
    assert f.values[0, 0] == 1.0
    assert f.raw_max == 255


def test_p2_two_pixels():
    f = load_pgm(b"P2 2 1 255 0 255")
    assert f.flat().tolist() == [0.0, 1.0]


def test_p2_comments_and_row_major():
    f = load_pgm(b"P2\n# made by hand\n3 2 # size\n10\n0 1 2\n3 4 10\n")
    assert f.values.tolist() == [[0.0, 0.1, 0.2], [0.3, 0.4, 1.0]]
    assert f.at(2, 1) == 1.0


def _pillow_p5(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels.astype(np.uint8), mode="L").save(buf, format="PPM")
    return buf.getvalue()


@pytest.mark.parametrize("seed", range(5))
def test_p5_from_independent_encoder_matches_p2(seed):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(1, 9, 2)
    pixels = rng.integers(0, 256, (h, w))
    p5 = _pillow_p5(pixels)
    assert p5.startswith(b"P5")
    p2 = f"P2\n{w} {h}\n255\n".encode() + " ".join(map(str, pixels.ravel())).encode()
    assert load_pgm(p5) == load_pgm(p2)
    assert np.array_equal(load_pgm(p5).values, pixels / 255.0)


def test_p5_sixteen_bit_big_endian():
    raw = b"P5\n2 1\n1000\n" + (1000).to_bytes(2, "big") + (250).to_bytes(2, "big")
    f = load_pgm(raw)
    assert f.flat().tolist() == [1.0, 0.25]
    assert f.raw_max == 1000


@pytest.mark.parametrize("data, err", [
    (b"P3\n1 1\n255\n0\n", PGMHeaderError),
    (b"P2\n1\n", PGMHeaderError),
    (b"P2\n0 1\n255\n", PGMHeaderError),
    (b"P2\n1 1\n70000\n0", PGMHeaderError),
    (b"P2\n2 2\n255\n0 1 2\n", PGMTruncatedError),
    (b"P5\n2 2\n255\n\x00\x01", PGMTruncatedError),
    (b"P2\n1 1\n10\n11\n", PGMValueError),
    (b"P2\n1 1\n10\nx\n", PGMValueError),
])
def test_malformed_pgm(data, err):
    with pytest.raises(err):
        load_pgm(data)


def test_parse_errors_are_distinct_classes():
    assert len({PGMHeaderError, PGMTruncatedError, PGMValueError}) == 3
    assert not issubclass(PGMHeaderError, PGMTruncatedError)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.sampled_from([1, 7, 255, 1000, 65535]),
       st.integers(0, 2 ** 32 - 1), st.booleans())
def test_round_trip_at_raw_max(w, h, maxval, seed, binary):
    rng = np.random.default_rng(seed)
    f = ScalarField(rng.random((h, w)), raw_max=maxval)
    g = load_pgm(dump_pgm(f, binary=binary))
    assert g.raw_max == maxval
    assert np.max(np.abs(g.values - f.values)) <= 1 / (2 * maxval) + 1e-15
    # a second trip is exact
    assert load_pgm(dump_pgm(g, binary=binary)) == g


def test_write_and_read(tmp_path):
    f = ScalarField([[0.0, 0.5], [1.0, 0.25]], raw_max=4)
    write_pgm(tmp_path / "a.pgm", f)
    assert read_pgm(tmp_path / "a.pgm") == f


def test_field_invariants():
    with pytest.raises(ValueError):
        ScalarField([[1.5]])
    with pytest.raises(ValueError):
        ScalarField(np.zeros((0, 3)))
    f = ScalarField([[0.2]])
    with pytest.raises(ValueError):
        f.values[0, 0] = 0.3


@pytest.mark.parametrize("mode", ["nearest", "bilinear"])
def test_resize_identity(mode):
    f = ScalarField(np.random.default_rng(1).random((5, 7)))
    g = resize(f, 7, 5, mode)
    assert g == f
    assert resize(g, 7, 5, mode) == g


def test_resize_bilinear_ramp():
    f = ScalarField([[0.0, 1.0], [0.0, 1.0]])
    g = resize(f, 4, 2, "bilinear")
    # pixel-center alignment: centres at 0.25, 0.75, 1.25, 1.75 in source units, clamped
    expected = [0.0, 0.25, 0.75, 1.0]
    for row in g.values:
        assert row.tolist() == pytest.approx(expected, abs=1e-15)
        assert np.all(np.diff(row) >= 0)


@pytest.mark.parametrize("seed", range(10))
def test_resize_nearest_matches_rational_oracle(seed):
    rng = np.random.default_rng(seed)
    H, W = rng.integers(1, 9, 2)
    h, w = rng.integers(1, 9, 2)
    vals = rng.random((H, W))
    got = resize(ScalarField(vals), int(w), int(h), "nearest").values
    assert got.tolist() == nearest_resize(vals.tolist(), int(w), int(h))


def test_resize_4x4_to_2x2_nearest():
    vals = np.random.default_rng(3).random((4, 4))
    got = resize(ScalarField(vals), 2, 2, "nearest").values
    assert got.tolist() == nearest_resize(vals.tolist(), 2, 2)


def test_resize_rejects_bad_sizes():
    f = ScalarField([[0.0]])
    for w, h in [(0, 1), (1, 0), (-2, 3)]:
        with pytest.raises(ValueError):
            resize(f, w, h)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 12), st.integers(1, 12),
       st.integers(0, 1000))
def test_bilinear_stays_in_range(W, H, w, h, seed):
    f = ScalarField(np.random.default_rng(seed).random((H, W)))
    g = resize(f, w, h)
    assert g.shape == (h, w)
    assert g.values.min() >= f.values.min() - 1e-12
    assert g.values.max() <= f.values.max() + 1e-12


def test_point_cloud_all_zero():
    cloud = to_point_cloud(ScalarField(np.zeros((2, 2))))
    assert len(cloud) == 4
    assert cloud.points.tolist() == [[0, 0], [1, 0], [0, 1], [1, 1]]


def test_point_cloud_excludes_white():
    cloud = to_point_cloud(ScalarField([[0.0, 1.0], [0.0, 1.0]]), 1.0)
    assert cloud.points.tolist() == [[0, 0], [0, 1]]


def test_point_cloud_size_matches_scan():
    vals = np.random.default_rng(0).random((9, 11))
    for thr in (0.1, 0.5, 0.99, 1.0):
        cloud = to_point_cloud(ScalarField(vals), thr)
        assert len(cloud) == sum(1 for x in vals.ravel() if x < thr)


def test_point_cloud_empty_is_distinct():
    with pytest.raises(EmptyPointCloudError):
        to_point_cloud(ScalarField(np.ones((2, 2))))
    with pytest.raises(ValueError):
        to_point_cloud(ScalarField(np.zeros((2, 2))), 0.0)


def test_three_four_five():
    cloud = GridPointCloud([(0, 0), (3, 4)], [0.0, 0.0])
    assert cloud.distance(0, 1) == 5.0


def test_lift_metric():
    f = ScalarField([[0.0, 0.5]])
    cloud = to_point_cloud(f, lift_scale=4.0)
    assert cloud.distance(0, 1) == pytest.approx(math.hypot(1, 2))


def test_grid_cloud_invariants():
    with pytest.raises(ValueError):
        GridPointCloud([(0, 0), (0, 0)], [0, 0])
    with pytest.raises(ValueError):
        GridPointCloud([(0, 0)], [0, 1])
    with pytest.raises(ValueError):
        GridPointCloud([(5, 0)], [0], grid_shape=(2, 2))


def test_sample_points_distance_matrix():
    pts = SamplePoints([[0, 0], [1, 0], [0, 2]])
    d = pts.distance_matrix()
    assert d[1, 2] == pytest.approx(math.sqrt(5))
    assert np.array_equal(d, d.T)
    assert pts.distances_from(2).tolist() == pytest.approx([2, math.sqrt(5), 0])


def test_field_from_function_constant_and_ramp():
    assert np.all(field_from_function(4, 3, lambda u, v: 0.5).values == 0.5)
    ramp = field_from_function(3, 1, lambda u, v: u / 2)
    assert ramp.flat().tolist() == [0.0, 0.5, 1.0]


def test_field_from_function_clamps():
    f = field_from_function(2, 1, lambda u, v: -1.0 + 3 * u)
    assert f.flat().tolist() == [0.0, 1.0]


def test_two_bump_max_equals_taller_height():
    bumps = [(5, 5, 0.9, 1.5), (14, 9, 0.45, 1.5)]
    f = gaussian_bumps(20, 15, bumps)
    # evaluate the generator at the tall bump's centre by hand
    at_centre = 0.9 + 0.45 * math.exp(-((5 - 14) ** 2 + (5 - 9) ** 2) / (2 * 1.5 ** 2))
    assert f.values.max() == pytest.approx(at_centre, abs=1e-12)
    assert f.at(5, 5) == f.values.max()
