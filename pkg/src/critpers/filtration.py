"""Vietoris-Rips and lazy witness filtrations of finite point sets."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .field import GridPointCloud, SamplePoints, ScalarField
from .homology import CellComplex

__all__ = [
    "Simplex",
    "Filtration",
    "LandmarkSet",
    "rips_filtration",
    "lazy_witness_filtration",
    "select_landmarks",
    "filtration_from_text",
]

log = logging.getLogger(__name__)

MAX_DIM = 3


class Simplex(NamedTuple):
    vertices: tuple[int, ...]
    value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


def _sort_key(s: Simplex):
    return (s.value, len(s.vertices), s.vertices)


class Filtration:
    """Simplices sorted by (value, dimension, vertex tuple), all valued at most ``cap``."""

    def __init__(self, simplices, cap: float):
        self.simplices: tuple[Simplex, ...] = tuple(sorted(simplices, key=_sort_key))
        self.cap = float(cap)

    def __len__(self):
        return len(self.simplices)

    def __iter__(self):
        return iter(self.simplices)

    def __eq__(self, other):
        return (isinstance(other, Filtration) and self.cap == other.cap
                and self.simplices == other.simplices)

    def count_by_dim(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for s in self.simplices:
            out[s.dim] = out.get(s.dim, 0) + 1
        return out

    def value_of(self, vertices) -> float:
        key = tuple(sorted(vertices))
        for s in self.simplices:
            if s.vertices == key:
                return s.value
        raise KeyError(key)

    def check(self) -> None:
        """Raise ValueError unless every face precedes its cofaces."""
        seen = {}
        for pos, s in enumerate(self.simplices):
            if s.value > self.cap:
                raise ValueError(f"simplex {s.vertices} exceeds the cap")
            if list(s.vertices) != sorted(set(s.vertices)):
                raise ValueError(f"simplex {s.vertices} is not strictly increasing")
            if s.dim > 0:
                for face in combinations(s.vertices, s.dim):
                    if face not in seen or self.simplices[seen[face]].value > s.value:
                        raise ValueError(f"face {face} of {s.vertices} missing or later")
            seen[s.vertices] = pos

    def to_cell_complex(self) -> CellComplex:
        index = {}
        dims, values, boundaries = [], [], []
        for pos, s in enumerate(self.simplices):
            index[s.vertices] = pos
            dims.append(s.dim)
            values.append(s.value)
            if s.dim == 0:
                boundaries.append(())
            else:
                boundaries.append(tuple(sorted(index[f] for f in combinations(s.vertices, s.dim))))
        return CellComplex(dims, values, boundaries, cap=self.cap)

    def to_text(self) -> str:
        """One simplex per line: ``value v0 v1 ...``."""
        lines = [f"# cap {self.cap:.17g}"]
        lines += [" ".join([format(s.value, ".17g"), *map(str, s.vertices)]) for s in self.simplices]
        return "\n".join(lines) + "\n"


def filtration_from_text(text: str) -> Filtration:
    cap = None
    simplices = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "cap":
                cap = float(parts[1])
            continue
        value, *verts = line.split()
        simplices.append(Simplex(tuple(int(v) for v in verts), float(value)))
    if cap is None:
        cap = max((s.value for s in simplices), default=0.0)
    return Filtration(simplices, cap)


@dataclass(frozen=True)
class LandmarkSet:
    landmark_indices: tuple[int, ...]
    witness_indices: tuple[int, ...] = ()


def _points(cloud) -> SamplePoints:
    return cloud if isinstance(cloud, SamplePoints) else SamplePoints(cloud)


def _clique_filtration(edge_values: np.ndarray, max_dim: int, cap: float) -> Filtration:
    """Clique complex of the edges valued at most ``cap``; a simplex takes its largest edge value."""
    n = edge_values.shape[0]
    ev = edge_values.tolist()
    simplices = [Simplex((i,), 0.0) for i in range(n)]
    if max_dim == 0 or n < 2:
        return Filtration(simplices, cap)
    upper = [[j for j in range(i + 1, n) if ev[i][j] <= cap] for i in range(n)]
    upper_sets = [set(u) for u in upper]

    def expand(verts, value, candidates):
        simplices.append(Simplex(verts, value))
        if len(verts) > max_dim:
            return
        for k in candidates:
            val = value
            for a in verts:
                if ev[a][k] > val:
                    val = ev[a][k]
            expand(verts + (k,), val, [c for c in candidates if c > k and c in upper_sets[k]])

    for i in range(n):
        for j in upper[i]:
            expand((i, j), ev[i][j], [c for c in upper[i] if c > j and c in upper_sets[j]])
    return Filtration(simplices, cap)


def _check_dims(max_dim: int):
    if not 0 <= max_dim <= MAX_DIM:
        raise ValueError(f"max_dim must lie in 0..{MAX_DIM}, got {max_dim}")


def rips_filtration(cloud, max_dim: int = 3, cap: float | None = None) -> Filtration:
    """Vietoris-Rips filtration up to ``max_dim``-simplices.

    Edges enter at their length, higher simplices at their longest edge.  The
    default ``cap`` is the cloud's diameter, which makes the final complex a
    full simplex.
    """
    _check_dims(max_dim)
    pts = _points(cloud)
    if len(pts) == 0:
        raise ValueError("cannot build a filtration on an empty cloud")
    dist = pts.distance_matrix()
    if cap is None:
        cap = float(dist.max())
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    return _clique_filtration(dist, max_dim, cap)


def _witness_offsets(dist_wl: np.ndarray, nu: int) -> np.ndarray:
    """``m(w)``: the nu-th smallest landmark distance of each witness (0 for nu=0)."""
    if nu == 0:
        return np.zeros(dist_wl.shape[0])
    return np.sort(dist_wl, axis=1)[:, nu - 1]


def lazy_witness_filtration(cloud, landmarks: LandmarkSet, nu: int = 1, max_dim: int = 3,
                            cap: float | None = None) -> Filtration:
    """Lazy witness filtration on the landmarks of ``cloud``.

    Vertex ``k`` of the result stands for ``landmarks.landmark_indices[k]``.
    Edge ``{a, b}`` enters at the least ``t`` for which some witness ``w``
    satisfies ``max(d(a, w), d(b, w)) <= t + m(w)``; higher simplices follow
    the clique rule.  The default ``cap`` is the diameter of the landmark set.
    """
    if nu not in (0, 1, 2):
        raise ValueError(f"nu must be 0, 1 or 2, got {nu}")
    _check_dims(max_dim)
    pts = _points(cloud)
    lm = list(landmarks.landmark_indices)
    wt = list(landmarks.witness_indices)
    if not lm:
        raise ValueError("landmark set is empty")
    coords = pts.coords
    lcoords = coords[lm]
    if cap is None:
        cap = float(SamplePoints(lcoords).distance_matrix().max())
    n = len(lm)
    edge_values = np.full((n, n), np.inf)
    np.fill_diagonal(edge_values, 0.0)
    if wt and n >= 2:
        wcoords = coords[wt]
        dist = np.sqrt(((wcoords[:, None, :] - lcoords[None, :, :]) ** 2).sum(axis=-1))
        offsets = _witness_offsets(dist, nu)
        for a in range(n - 1):
            pair_max = np.maximum(dist[:, a:a + 1], dist[:, a + 1:])
            best = (pair_max - offsets[:, None]).min(axis=0)
            edge_values[a, a + 1:] = best
            edge_values[a + 1:, a] = best
        edge_values = np.maximum(edge_values, 0.0)
    return _clique_filtration(edge_values, max_dim, cap)


def select_landmarks(cloud, strategy: str = "all", *, field: ScalarField | None = None,
                     r: float = 0.5, m: int | None = None, seed_index: int = 0) -> LandmarkSet:
    """Split ``cloud`` into landmarks and witnesses.

    ``ms_critical`` uses the critical points of ``field`` at persistence ``r``
    (``cloud`` must be a grid cloud of that field); ``fps`` takes ``m``
    farthest points; ``all`` makes every point a landmark.
    """
    pts = _points(cloud)
    n = len(pts)
    if strategy == "all":
        chosen: Sequence[int] = list(range(n))
    elif strategy == "fps":
        from .sampling import fps

        if m is None:
            raise ValueError("fps strategy needs m")
        chosen = fps(pts, m, seed_index=seed_index)
    elif strategy == "ms_critical":
        from .morse import ms_sample

        if field is None or not isinstance(pts, GridPointCloud):
            raise ValueError("ms_critical strategy needs the field and its grid point cloud")
        lookup = {(int(u), int(v)): k for k, (u, v) in enumerate(pts.points)}
        crit = ms_sample(field, r).points
        chosen = [lookup[p] for p in crit if p in lookup]
        if len(chosen) < len(crit):
            log.warning("%d critical points lie outside the cloud and were skipped",
                        len(crit) - len(chosen))
    else:
        raise ValueError(f"unknown landmark strategy {strategy!r}")
    if not chosen:
        raise ValueError(f"strategy {strategy!r} produced no landmarks")
    taken = set(chosen)
    return LandmarkSet(tuple(chosen), tuple(i for i in range(n) if i not in taken))
