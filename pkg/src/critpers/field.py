"""Gridded scalar fields (grayscale images) and the point clouds derived from them.

Coordinates follow image convention: ``u`` is the column (0 <= u < width),
``v`` is the row (0 <= v < height), and the row-major index of ``(u, v)`` is
``v * width + u``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ScalarField",
    "SamplePoints",
    "GridPointCloud",
    "PGMError",
    "PGMHeaderError",
    "PGMTruncatedError",
    "PGMValueError",
    "EmptyPointCloudError",
    "load_pgm",
    "read_pgm",
    "dump_pgm",
    "write_pgm",
    "resize",
    "to_point_cloud",
    "field_from_function",
]


class PGMError(ValueError):
    """Base class for PGM parse failures."""


class PGMHeaderError(PGMError):
    pass


class PGMTruncatedError(PGMError):
    pass


class PGMValueError(PGMError):
    pass


class EmptyPointCloudError(ValueError):
    """Every pixel sits at or above the exclusion threshold."""


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Immutable ``height x width`` grid of values normalized to [0, 1].

    ``raw_max`` remembers the original full-scale value (e.g. 255) so the
    field can be written back at its source bit depth.
    """

    values: np.ndarray
    raw_max: float = 1.0

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"field values must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("field values must lie in [0, 1]")
        if not self.raw_max > 0:
            raise ValueError("raw_max must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def flat(self) -> np.ndarray:
        """Values in row-major order."""
        return self.values.ravel()

    def at(self, u: int, v: int) -> float:
        return float(self.values[v, u])

    def __eq__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        return self.raw_max == other.raw_max and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.values.shape, self.values.tobytes(), self.raw_max))


class SamplePoints:
    """A finite point set in Euclidean space, addressed by integer index."""

    def __init__(self, coords):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        if coords.ndim != 2:
            raise ValueError("coords must be an (n, d) array")
        coords.setflags(write=False)
        self._coords = coords

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    def __len__(self) -> int:
        return self._coords.shape[0]

    def distance(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self._coords[i] - self._coords[j]))

    def distances_from(self, i: int) -> np.ndarray:
        """Distances from point ``i`` to every point."""
        return np.sqrt(np.sum((self._coords - self._coords[i]) ** 2, axis=1))

    def distance_matrix(self) -> np.ndarray:
        diff = self._coords[:, None, :] - self._coords[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def subset(self, indices: Sequence[int]) -> "SamplePoints":
        return SamplePoints(self._coords[np.asarray(indices, dtype=int)])


class GridPointCloud(SamplePoints):
    """Grid vertices of a field, embedded as ``(u, v, lift_scale * f(u, v))``.

    With ``lift_scale == 0`` the metric is the plain planar grid metric.
    """

    def __init__(self, points, field_values, lift_scale: float = 0.0, grid_shape=None):
        pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
        vals = np.asarray(field_values, dtype=np.float64).ravel()
        if len(pts) != len(vals):
            raise ValueError("points and field_values differ in length")
        if lift_scale < 0:
            raise ValueError("lift_scale must be nonnegative")
        if grid_shape is not None:
            h, w = grid_shape
            if len(pts) and (pts[:, 0].min() < 0 or pts[:, 0].max() >= w
                             or pts[:, 1].min() < 0 or pts[:, 1].max() >= h):
                raise ValueError("point outside the source grid")
        if len({(int(a), int(b)) for a, b in pts}) != len(pts):
            raise ValueError("grid points must be distinct")
        pts.setflags(write=False)
        vals.setflags(write=False)
        self.points = pts
        self.field_values = vals
        self.lift_scale = float(lift_scale)
        self.grid_shape = grid_shape
        if self.lift_scale == 0.0:
            coords = pts.astype(np.float64)
        else:
            coords = np.column_stack([pts.astype(np.float64), self.lift_scale * vals])
        super().__init__(coords)


# --------------------------------------------------------------------------
# PGM I/O

_WS = b" \t\r\n\v\f"


def _header_tokens(data: bytes, count: int):
    """Return ``count`` header tokens and the offset just past the last one.

    Comments run from ``#`` to end of line.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise PGMHeaderError("unexpected end of header")
        start = pos
        while pos < n and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def load_pgm(data: bytes) -> ScalarField:
    """Parse a P2 (ASCII) or P5 (binary) PGM image into a normalized field."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError("load_pgm expects bytes")
    data = bytes(data)
    tokens, pos = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PGMHeaderError(f"unsupported magic number {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise PGMHeaderError("non-integer header field") from exc
    if width < 1 or height < 1:
        raise PGMHeaderError(f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise PGMHeaderError(f"maxval {maxval} outside 1..65535")
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or data[pos] not in _WS:
            raise PGMTruncatedError("missing raster")
        raster = data[pos + 1:]
        nbytes = 1 if maxval < 256 else 2
        if len(raster) < count * nbytes:
            raise PGMTruncatedError(f"expected {count * nbytes} raster bytes, got {len(raster)}")
        dtype = np.uint8 if nbytes == 1 else np.dtype(">u2")
        pixels = np.frombuffer(raster, dtype=dtype, count=count).astype(np.int64)
    else:
        body = re.sub(rb"#[^\r\n]*", b" ", data[pos:])
        parts = body.split()
        if len(parts) < count:
            raise PGMTruncatedError(f"expected {count} pixels, got {len(parts)}")
        try:
            pixels = np.array([int(p) for p in parts[:count]], dtype=np.int64)
        except ValueError as exc:
            raise PGMValueError("non-integer pixel value") from exc
        if pixels.min() < 0:
            raise PGMValueError("negative pixel value")

    if pixels.max() > maxval:
        raise PGMValueError(f"pixel value {int(pixels.max())} exceeds maxval {maxval}")
    values = pixels.reshape(height, width).astype(np.float64) / maxval
    return ScalarField(values, raw_max=float(maxval))


def read_pgm(path) -> ScalarField:
    with open(path, "rb") as fh:
        return load_pgm(fh.read())


def dump_pgm(fld: ScalarField, maxval: int | None = None, binary: bool = False) -> bytes:
    """Encode ``fld`` as PGM at ``maxval`` (default: the field's ``raw_max``)."""
    maxval = int(round(fld.raw_max)) if maxval is None else int(maxval)
    if not 0 < maxval <= 65535:
        raise ValueError("maxval outside 1..65535")
    pixels = np.rint(fld.values * maxval).astype(np.int64)
    header = f"P{5 if binary else 2}\n{fld.width} {fld.height}\n{maxval}\n".encode("ascii")
    if binary:
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        return header + pixels.astype(dtype).tobytes()
    rows = "\n".join(" ".join(str(p) for p in row) for row in pixels)
    return header + rows.encode("ascii") + b"\n"


def write_pgm(path, fld: ScalarField, maxval: int | None = None, binary: bool = False) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_pgm(fld, maxval=maxval, binary=binary))


# --------------------------------------------------------------------------
# Resampling

def _nearest_index(n_src: int, n_dst: int) -> np.ndarray:
    # Source pixel whose center is closest to the target center; ties go to
    # the smaller index. Integer arithmetic: s = ceil(((2x+1) n_src - 2 n_dst) / (2 n_dst)).
    x = np.arange(n_dst, dtype=np.int64)
    num = (2 * x + 1) * n_src - 2 * n_dst
    s = -((-num) // (2 * n_dst))
    return np.clip(s, 0, n_src - 1)


def _bilinear_weights(n_src: int, n_dst: int):
    pos = (np.arange(n_dst, dtype=np.float64) + 0.5) * n_src / n_dst - 0.5
    pos = np.clip(pos, 0.0, n_src - 1)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, n_src - 1)
    return lo, hi, pos - lo


def resize(fld: ScalarField, w: int, h: int, mode: str = "bilinear") -> ScalarField:
    """Resample to ``w x h`` pixels using pixel-center alignment."""
    if w < 1 or h < 1:
        raise ValueError(f"target dimensions must be positive, got {w}x{h}")
    if mode not in ("nearest", "bilinear"):
        raise ValueError(f"unknown resize mode {mode!r}")
    if (w, h) == (fld.width, fld.height):
        return ScalarField(fld.values.copy(), raw_max=fld.raw_max)
    src = fld.values
    if mode == "nearest":
        rows = _nearest_index(fld.height, h)
        cols = _nearest_index(fld.width, w)
        out = src[np.ix_(rows, cols)]
    else:
        r0, r1, ry = _bilinear_weights(fld.height, h)
        c0, c1, cx = _bilinear_weights(fld.width, w)
        top = src[np.ix_(r0, c0)] * (1 - cx) + src[np.ix_(r0, c1)] * cx
        bot = src[np.ix_(r1, c0)] * (1 - cx) + src[np.ix_(r1, c1)] * cx
        out = top * (1 - ry)[:, None] + bot * ry[:, None]
    return ScalarField(np.clip(out, 0.0, 1.0), raw_max=fld.raw_max)


# --------------------------------------------------------------------------
# Point clouds and synthetic fields

def to_point_cloud(fld: ScalarField, exclusion_threshold: float = 1.0,
                   lift_scale: float = 0.0) -> GridPointCloud:
    """All grid points whose value is strictly below ``exclusion_threshold``.

    Points come out in row-major order.
    """
    if not 0 < exclusion_threshold <= 1:
        raise ValueError("exclusion_threshold must lie in (0, 1]")
    if lift_scale < 0:
        raise ValueError("lift_scale must be nonnegative")
    vs, us = np.nonzero(fld.values < exclusion_threshold)
    if len(us) == 0:
        raise EmptyPointCloudError(
            f"no pixel below threshold {exclusion_threshold} in a {fld.width}x{fld.height} field")
    return GridPointCloud(np.column_stack([us, vs]), fld.values[vs, us],
                          lift_scale=lift_scale, grid_shape=fld.shape)


def field_from_function(w: int, h: int, generator: Callable[[int, int], float],
                        raw_max: float = 255.0) -> ScalarField:
    """Evaluate ``generator(u, v)`` on every pixel and clamp to [0, 1]."""
    if w < 1 or h < 1:
        raise ValueError("field dimensions must be positive")
    vals = np.empty((h, w), dtype=np.float64)
    for v in range(h):
        for u in range(w):
            vals[v, u] = generator(u, v)
    if not np.all(np.isfinite(vals)):
        raise ValueError("generator produced non-finite values")
    return ScalarField(np.clip(vals, 0.0, 1.0), raw_max=raw_max)
