"""Discrete Morse theory on the cubical grid of a scalar field.

The field is read as a lower-star filtration: every edge and square takes the
largest value among its vertices, and plateaus are broken by a strict total
vertex order (value first, then row-major index).  On top of that this module
provides

* a discrete gradient built one lower star at a time,
* the sublevel persistence pairs in dimensions 0 and 1 (union-find on the grid
  for components, union-find on the dual grid for loops),
* critical-point sampling: keep the cells of every pair whose persistence
  reaches a threshold, for both ``f`` and its upside-down counterpart.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .field import ScalarField
from .homology import CellComplex
from .unionfind import UnionFind

__all__ = [
    "CubicalCell",
    "PersistencePair",
    "CriticalSet",
    "DiscreteGradient",
    "total_vertex_order",
    "build_lower_star_gradient",
    "persistence_pairs_lower_star",
    "cubical_complex",
    "ms_sample",
]

HORIZONTAL = "horizontal"
VERTICAL = "vertical"
NONE = "none"


@dataclass(frozen=True, order=True)
class CubicalCell:
    """Vertex, edge or square of the pixel grid, anchored at its top-left vertex."""

    dim: int
    anchor: tuple[int, int]
    orientation: str = NONE

    def vertices(self) -> tuple[tuple[int, int], ...]:
        u, v = self.anchor
        if self.dim == 0:
            return ((u, v),)
        if self.dim == 1:
            return ((u, v), (u + 1, v)) if self.orientation == HORIZONTAL else ((u, v), (u, v + 1))
        return ((u, v), (u + 1, v), (u, v + 1), (u + 1, v + 1))


@dataclass(frozen=True)
class PersistencePair:
    """A birth/death pair of the lower-star filtration.

    ``birth`` and ``death`` are values of the filtering function: ``f`` for the
    sublevel filtration, ``-f`` when the pair comes from the superlevel one.
    """

    dim: int
    creator: CubicalCell
    destroyer: Optional[CubicalCell]
    birth: float
    death: float

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    @property
    def essential(self) -> bool:
        return self.destroyer is None


@dataclass(frozen=True)
class CriticalSet:
    minima: tuple[tuple[int, int], ...]
    saddles: tuple[tuple[int, int], ...]
    maxima: tuple[tuple[int, int], ...]
    persistence_level: float

    @property
    def points(self) -> list[tuple[int, int]]:
        """All sampled vertices in row-major order."""
        return sorted(self.minima + self.saddles + self.maxima, key=lambda p: (p[1], p[0]))

    def labelled(self) -> list[tuple[int, int, str]]:
        kind = {p: "min" for p in self.minima}
        kind.update({p: "saddle" for p in self.saddles})
        kind.update({p: "max" for p in self.maxima})
        return [(u, v, kind[(u, v)]) for u, v in self.points]

    def __len__(self):
        return len(self.minima) + len(self.saddles) + len(self.maxima)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "v", "type"])
        writer.writerows(self.labelled())
        return buf.getvalue()


@dataclass
class DiscreteGradient:
    pairs: dict  # lower-dimensional cell -> its paired coface
    critical: list

    def critical_counts(self) -> tuple[int, int, int]:
        counts = [0, 0, 0]
        for c in self.critical:
            counts[c.dim] += 1
        return tuple(counts)


# --------------------------------------------------------------------------
# Grid indexing.  Vertices are row-major; horizontal edges come first in the
# edge numbering, then vertical ones; squares are numbered by top-left vertex.

class _Grid:
    def __init__(self, height: int, width: int):
        self.h, self.w = height, width
        self.nv = height * width
        self.nh = (width - 1) * height
        self.ne = self.nh + width * (height - 1)
        self.ns = (width - 1) * (height - 1)

    def edge_vertices(self) -> np.ndarray:
        w, h = self.w, self.h
        out = np.empty((self.ne, 2), dtype=np.int64)
        if self.nh:
            vv, uu = np.divmod(np.arange(self.nh), w - 1)
            a = vv * w + uu
            out[:self.nh, 0], out[:self.nh, 1] = a, a + 1
        if self.ne > self.nh:
            a = np.arange(self.ne - self.nh)
            out[self.nh:, 0], out[self.nh:, 1] = a, a + w
        return out

    def square_vertices(self) -> np.ndarray:
        w = self.w
        vv, uu = np.divmod(np.arange(self.ns), max(w - 1, 1))
        a = vv * w + uu
        return np.column_stack([a, a + 1, a + w, a + w + 1])

    def square_edges(self) -> np.ndarray:
        w = self.w
        vv, uu = np.divmod(np.arange(self.ns), max(w - 1, 1))
        top = vv * (w - 1) + uu
        bottom = top + (w - 1)
        left = self.nh + vv * w + uu
        return np.column_stack([top, bottom, left, left + 1])

    def edge_squares(self, e: int) -> list[int]:
        """Squares incident to edge ``e`` (one or two)."""
        w, h = self.w, self.h
        out = []
        if e < self.nh:
            v, u = divmod(e, w - 1)
            if v > 0:
                out.append((v - 1) * (w - 1) + u)
            if v < h - 1:
                out.append(v * (w - 1) + u)
        else:
            v, u = divmod(e - self.nh, w)
            if u > 0:
                out.append(v * (w - 1) + u - 1)
            if u < w - 1:
                out.append(v * (w - 1) + u)
        return out

    def cell(self, dim: int, idx: int) -> CubicalCell:
        w = self.w
        if dim == 0:
            v, u = divmod(idx, w)
            return CubicalCell(0, (u, v))
        if dim == 1:
            if idx < self.nh:
                v, u = divmod(idx, w - 1)
                return CubicalCell(1, (u, v), HORIZONTAL)
            v, u = divmod(idx - self.nh, w)
            return CubicalCell(1, (u, v), VERTICAL)
        v, u = divmod(idx, w - 1)
        return CubicalCell(2, (u, v))


def total_vertex_order(field: ScalarField, superlevel: bool = False) -> np.ndarray:
    """Row-major vertex indices sorted by (value, index).

    With ``superlevel`` the sort key is ``-value``, still tie-broken by index.
    """
    vals = field.flat()
    if superlevel:
        vals = -vals
    return np.lexsort((np.arange(vals.size), vals))


class _LowerStar:
    """Everything the filtration-based routines need about one orientation of f."""

    def __init__(self, field: ScalarField, superlevel: bool = False):
        self.grid = g = _Grid(field.height, field.width)
        vals = field.flat()
        self.values = -vals if superlevel else vals.copy()
        order = total_vertex_order(field, superlevel)
        rank = np.empty(g.nv, dtype=np.int64)
        rank[order] = np.arange(g.nv)
        self.order, self.rank = order, rank

        ev = g.edge_vertices()
        sv = g.square_vertices() if g.ns else np.empty((0, 4), dtype=np.int64)
        self.edge_verts, self.square_verts = ev, sv
        self.square_edges = g.square_edges() if g.ns else np.empty((0, 4), dtype=np.int64)

        # Cell keys: vertex ranks sorted descending, padded with -1.  Lexicographic
        # order on these keys is a total order refining the lower-star filtration.
        vkeys = np.full((g.nv, 4), -1, dtype=np.int64)
        vkeys[:, 0] = rank
        ekeys = np.full((g.ne, 4), -1, dtype=np.int64)
        if g.ne:
            er = rank[ev]
            ekeys[:, 0], ekeys[:, 1] = er.max(axis=1), er.min(axis=1)
        skeys = -np.sort(-rank[sv], axis=1) if g.ns else np.empty((0, 4), dtype=np.int64)
        keys = np.vstack([vkeys, ekeys, skeys])
        dims = np.concatenate([np.zeros(g.nv, np.int64), np.ones(g.ne, np.int64),
                               np.full(g.ns, 2, np.int64)])
        local = np.concatenate([np.arange(g.nv), np.arange(g.ne), np.arange(g.ns)])
        perm = np.lexsort((keys[:, 3], keys[:, 2], keys[:, 1], keys[:, 0]))
        self.cell_dims, self.cell_local, self.cell_keys = dims[perm], local[perm], keys[perm]
        self.position = [np.empty(n, dtype=np.int64) for n in (g.nv, g.ne, g.ns)]
        for d in range(3):
            sel = self.cell_dims == d
            self.position[d][self.cell_local[sel]] = np.nonzero(sel)[0]
        # the top vertex of every cell under the total order
        self.edge_top = (ev[np.arange(g.ne), np.argmax(rank[ev], axis=1)]
                         if g.ne else np.empty(0, np.int64))
        self.square_top = (sv[np.arange(g.ns), np.argmax(rank[sv], axis=1)]
                           if g.ns else np.empty(0, np.int64))

    def top_vertex(self, dim: int, idx: int) -> int:
        if dim == 0:
            return idx
        return int(self.edge_top[idx] if dim == 1 else self.square_top[idx])

    def cell_value(self, dim: int, idx: int) -> float:
        return float(self.values[self.top_vertex(dim, idx)])


def _raw_pairs(ls: _LowerStar):
    """Yield ``(dim, (cdim, cidx), (ddim, didx) | None, birth, death)`` for all pairs."""
    g = ls.grid
    vals = ls.values
    out = []

    # components: sweep vertices and edges in filtration order
    uf = UnionFind(g.nv)
    oldest = list(range(g.nv))  # root -> vertex of smallest rank in the component
    rank = ls.rank
    ev = ls.edge_verts
    for d, idx in zip(ls.cell_dims.tolist(), ls.cell_local.tolist()):
        if d != 1:
            continue
        a, b = int(ev[idx, 0]), int(ev[idx, 1])
        ra, rb = uf.find(a), uf.find(b)
        if ra == rb:
            continue
        oa, ob = oldest[ra], oldest[rb]
        young, old = (oa, ob) if rank[oa] > rank[ob] else (ob, oa)
        out.append((0, (0, young), (1, idx), float(vals[young]), ls.cell_value(1, idx)))
        oldest[uf.union(ra, rb)] = old
    gmin = int(ls.order[0])
    out.append((0, (0, gmin), None, float(vals[gmin]), math.inf))

    # loops: sweep squares and edges backwards on the dual grid; node g.ns is
    # the outer face, present from the start
    if g.ns:
        duf = UnionFind(g.ns + 1)
        outside = g.ns
        pos2 = ls.position[2]
        youngest = list(range(g.ns + 1))  # root -> square entering last (forward)
        rep_key = lambda s: math.inf if s == outside else pos2[s]
        for d, idx in zip(reversed(ls.cell_dims.tolist()), reversed(ls.cell_local.tolist())):
            if d != 1:
                continue
            sq = g.edge_squares(idx)
            if len(sq) == 1:
                sq.append(outside)
            ra, rb = duf.find(sq[0]), duf.find(sq[1])
            if ra == rb:
                continue
            ya, yb = youngest[ra], youngest[rb]
            dying, living = (ya, yb) if rep_key(ya) < rep_key(yb) else (yb, ya)
            out.append((1, (1, idx), (2, dying), ls.cell_value(1, idx), ls.cell_value(2, dying)))
            youngest[duf.union(ra, rb)] = living
    return out


def persistence_pairs_lower_star(field: ScalarField, superlevel: bool = False,
                                 ) -> list[PersistencePair]:
    """Dimension 0 and 1 pairs of the lower-star filtration, zero-persistence pairs dropped.

    Exactly one pair is essential: the component of the global minimum.
    """
    ls = _LowerStar(field, superlevel)
    g = ls.grid
    pairs = []
    for dim, (cd, ci), dest, birth, death in _raw_pairs(ls):
        if death == birth:
            continue
        pairs.append(PersistencePair(
            dim=dim,
            creator=g.cell(cd, ci),
            destroyer=None if dest is None else g.cell(*dest),
            birth=birth,
            death=death,
        ))
    pairs.sort(key=lambda p: (p.dim, p.birth, p.death, p.creator))
    return pairs


def cubical_complex(field: ScalarField, superlevel: bool = False) -> CellComplex:
    """The full cubical complex of the grid as a filtered cell complex.

    Cells appear in the lower-star total order, so this can be fed to the
    generic persistence routines for cross-checking.
    """
    ls = _LowerStar(field, superlevel)
    pos = ls.position
    dims, values, boundaries = [], [], []
    for d, idx in zip(ls.cell_dims.tolist(), ls.cell_local.tolist()):
        dims.append(d)
        values.append(ls.cell_value(d, idx))
        if d == 0:
            boundaries.append(())
        elif d == 1:
            a, b = ls.edge_verts[idx]
            boundaries.append(tuple(sorted((int(pos[0][a]), int(pos[0][b])))))
        else:
            boundaries.append(tuple(sorted(int(pos[1][e]) for e in ls.square_edges[idx])))
    return CellComplex(dims, values, boundaries)


# --------------------------------------------------------------------------
# Discrete gradient

def build_lower_star_gradient(field: ScalarField) -> DiscreteGradient:
    """Acyclic discrete gradient obtained by matching inside each lower star.

    Each vertex's lower star is handled on its own: the vertex is matched with
    its steepest edge, then the remaining edges and squares are paired greedily
    through two priority queues keyed by descending vertex ranks.  Unmatched
    cells are critical.
    """
    ls = _LowerStar(field)
    g = ls.grid
    rank = ls.rank.tolist()
    w, h = g.w, g.h
    ev = ls.edge_verts
    sv = ls.square_verts
    se = ls.square_edges

    def key(cell):
        d, i = cell
        if d == 1:
            return tuple(sorted((rank[ev[i, 0]], rank[ev[i, 1]]), reverse=True))
        return tuple(sorted((rank[p] for p in sv[i]), reverse=True))

    pairs = {}
    critical = []
    for x in range(g.nv):
        v, u = divmod(x, w)
        rx = rank[x]
        star_edges = []
        for nb_u, nb_v, e in _incident_edges(u, v, w, h, g.nh):
            if rank[nb_v * w + nb_u] < rx:
                star_edges.append((1, e))
        if not star_edges:
            critical.append((0, x))
            continue
        star_squares = []
        for s in _incident_squares(u, v, w, h):
            if max(rank[p] for p in sv[s]) == rx:
                star_squares.append((2, s))
        edge_set = set(star_edges)
        faces = {sq: [(1, int(e)) for e in se[sq[1]] if (1, int(e)) in edge_set] for sq in star_squares}
        cofaces = {e: [] for e in star_edges}
        for sq, fs in faces.items():
            for f in fs:
                cofaces[f].append(sq)

        done = set()

        def unpaired(cell):
            return [f for f in faces[cell] if f not in done]

        delta = min(star_edges, key=key)
        pairs[(0, x)] = delta
        done.add(delta)
        pq_zero = [(key(e), e) for e in star_edges if e != delta]
        heapq.heapify(pq_zero)
        pq_one = [(key(s), s) for s in cofaces[delta] if len(unpaired(s)) == 1]
        heapq.heapify(pq_one)
        while pq_one or pq_zero:
            while pq_one:
                k, a = heapq.heappop(pq_one)
                if a in done:
                    continue
                free = unpaired(a)
                if not free:
                    heapq.heappush(pq_zero, (k, a))
                    continue
                f = free[0]
                pairs[f] = a
                done.update((f, a))
                for b in cofaces[f]:
                    if b not in done and len(unpaired(b)) == 1:
                        heapq.heappush(pq_one, (key(b), b))
            while pq_zero:
                k, c = heapq.heappop(pq_zero)
                if c in done:
                    continue
                critical.append(c)
                done.add(c)
                for b in cofaces.get(c, ()):
                    if b not in done and len(unpaired(b)) == 1:
                        heapq.heappush(pq_one, (key(b), b))
                break

    return DiscreteGradient(
        pairs={g.cell(*lo): g.cell(*hi) for lo, hi in pairs.items()},
        critical=sorted(g.cell(*c) for c in critical),
    )


def _incident_edges(u, v, w, h, nh):
    """(neighbor_u, neighbor_v, edge_id) for the 4-neighbourhood of (u, v)."""
    if u > 0:
        yield u - 1, v, v * (w - 1) + u - 1
    if u < w - 1:
        yield u + 1, v, v * (w - 1) + u
    if v > 0:
        yield u, v - 1, nh + (v - 1) * w + u
    if v < h - 1:
        yield u, v + 1, nh + v * w + u


def _incident_squares(u, v, w, h):
    for du in (-1, 0):
        for dv in (-1, 0):
            su, sv_ = u + du, v + dv
            if 0 <= su < w - 1 and 0 <= sv_ < h - 1:
                yield sv_ * (w - 1) + su


# --------------------------------------------------------------------------
# Critical point sampling

_PRIORITY = {"min": 0, "max": 1, "saddle": 2}

# type of the representative vertex, by (superlevel, pair dim, role)
_ROLE = {
    (False, 0, "creator"): "min",
    (False, 0, "destroyer"): "saddle",
    (False, 1, "creator"): "saddle",
    (False, 1, "destroyer"): "max",
    (True, 0, "creator"): "max",
    (True, 0, "destroyer"): "saddle",
    (True, 1, "creator"): "saddle",
    (True, 1, "destroyer"): "min",
}


def ms_sample(field: ScalarField, r: float, keep_saddles: bool = True,
              keep_essential: bool = True) -> CriticalSet:
    """Critical vertices of ``field`` that survive simplification at persistence ``r``.

    Pairs of both the sublevel filtration of ``f`` and that of ``-f`` are
    considered.  A pair is kept when its persistence is at least ``r``; each
    kept cell contributes its top vertex under the filtration's total order.
    A vertex claimed by several roles is reported once, preferring minimum,
    then maximum, then saddle.
    """
    if not 0 <= r <= 1:
        raise ValueError(f"persistence level must lie in [0, 1], got {r}")
    candidates: dict[int, str] = {}

    def claim(vertex: int, kind: str):
        prev = candidates.get(vertex)
        if prev is None or _PRIORITY[kind] < _PRIORITY[prev]:
            candidates[vertex] = kind

    for superlevel in (False, True):
        ls = _LowerStar(field, superlevel)
        for dim, (cd, ci), dest, birth, death in _raw_pairs(ls):
            if dest is None:
                if keep_essential:
                    claim(ls.top_vertex(cd, ci), _ROLE[superlevel, dim, "creator"])
                continue
            pers = death - birth
            if pers <= 0 or pers < r:
                continue
            claim(ls.top_vertex(cd, ci), _ROLE[superlevel, dim, "creator"])
            claim(ls.top_vertex(*dest), _ROLE[superlevel, dim, "destroyer"])

    w = field.width
    buckets = {"min": [], "saddle": [], "max": []}
    for vertex in sorted(candidates):
        kind = candidates[vertex]
        if kind == "saddle" and not keep_saddles:
            continue
        v, u = divmod(vertex, w)
        buckets[kind].append((u, v))
    return CriticalSet(
        minima=tuple(buckets["min"]),
        saddles=tuple(buckets["saddle"]),
        maxima=tuple(buckets["max"]),
        persistence_level=float(r),
    )


def critical_set_from_csv(text: str, persistence_level: float = math.nan) -> CriticalSet:
    buckets = {"min": [], "saddle": [], "max": []}
    lines = [line for line in io.StringIO(text) if not line.startswith("#")]
    for row in csv.DictReader(lines):
        buckets[row["type"]].append((int(row["u"]), int(row["v"])))
    return CriticalSet(tuple(buckets["min"]), tuple(buckets["saddle"]),
                       tuple(buckets["max"]), persistence_level)


def vertices_of(points: Iterable[tuple[int, int]], width: int) -> list[int]:
    return [v * width + u for u, v in points]
