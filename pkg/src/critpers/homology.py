"""Persistence diagrams of filtered cell complexes over the two-element field.

Two independent routes are provided:

``compute_persistence``
    column reduction of the boundary matrix with the clearing (twist)
    optimization, processed from the top dimension down.
``oracle_persistence``
    counts the multiplicity of every (birth, death) cell directly from ranks
    of the maps induced by inclusion, by inclusion-exclusion over the
    persistent Betti numbers.  Slow and meant for validation only.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "CellComplex",
    "PersistenceDiagram",
    "FiltrationError",
    "OracleTooLargeError",
    "compute_persistence",
    "oracle_persistence",
    "betti_numbers_at",
    "diagrams_to_json",
    "diagrams_from_json",
]


class FiltrationError(ValueError):
    """A cell appears before one of its faces, or below it in value."""


class OracleTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class CellComplex:
    """Cells listed in filtration order.

    ``boundaries[j]`` holds the positions of the codimension-one faces of cell
    ``j``; every face must come earlier in the list.
    """

    dims: Sequence[int]
    values: Sequence[float]
    boundaries: Sequence[tuple[int, ...]]
    cap: float | None = None

    def __len__(self):
        return len(self.dims)

    @property
    def effective_cap(self) -> float:
        if self.cap is not None:
            return float(self.cap)
        return float(max(self.values)) if len(self.values) else 0.0

    def validate(self) -> None:
        dims, values = self.dims, self.values
        if not (len(dims) == len(values) == len(self.boundaries)):
            raise FiltrationError("dims, values and boundaries differ in length")
        for j, faces in enumerate(self.boundaries):
            if dims[j] == 0:
                if faces:
                    raise FiltrationError(f"vertex {j} has a nonempty boundary")
                continue
            for i in faces:
                if not 0 <= i < j:
                    raise FiltrationError(f"face {i} of cell {j} does not precede it")
                if dims[i] != dims[j] - 1:
                    raise FiltrationError(f"face {i} of cell {j} has the wrong dimension")
                if values[i] > values[j]:
                    raise FiltrationError(
                        f"face {i} enters at {values[i]} after its coface {j} at {values[j]}")
        for j in range(1, len(values)):
            if values[j] < values[j - 1]:
                raise FiltrationError(f"values decrease at position {j}")


def _as_complex(filt) -> CellComplex:
    if isinstance(filt, CellComplex):
        return filt
    if hasattr(filt, "to_cell_complex"):
        return filt.to_cell_complex()
    raise TypeError(f"cannot compute persistence of {type(filt).__name__}")


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death) points in one homological dimension.

    ``death`` is ``math.inf`` for essential classes.  ``cap`` is the largest
    filtration value considered; it closes essential classes when a finite
    diagram is needed.
    """

    dim: int
    points: tuple[tuple[float, float], ...] = ()
    cap: float = math.inf

    def __post_init__(self):
        pts = tuple(sorted((float(b), float(d)) for b, d in self.points))
        for b, d in pts:
            if not b <= d:
                raise ValueError(f"birth {b} exceeds death {d}")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def finite(self) -> list[tuple[float, float]]:
        return [p for p in self.points if math.isfinite(p[1])]

    @property
    def essential(self) -> list[tuple[float, float]]:
        return [p for p in self.points if not math.isfinite(p[1])]

    def capped(self, cap: float | None = None) -> np.ndarray:
        """Points as an (n, 2) array with infinite deaths replaced by ``cap``."""
        cap = self.cap if cap is None else cap
        if not self.points:
            return np.empty((0, 2))
        arr = np.array(self.points, dtype=np.float64)
        arr[:, 1] = np.where(np.isfinite(arr[:, 1]), arr[:, 1], np.maximum(arr[:, 0], cap))
        return arr

    def scaled(self, factor: float) -> "PersistenceDiagram":
        return PersistenceDiagram(self.dim, [(b * factor, d * factor) for b, d in self.points],
                                  self.cap * factor)


# --------------------------------------------------------------------------
# Standard algorithm with clearing

def _reduce(cx: CellComplex, top_dim: int):
    """Return the persistence pairs (creator, destroyer) and the set of negative cells."""
    dims = cx.dims
    bnd = cx.boundaries
    by_dim: dict[int, list[int]] = {}
    for j, d in enumerate(dims):
        by_dim.setdefault(d, []).append(j)

    pivot_owner: dict[int, int] = {}
    reduced: dict[int, set] = {}
    cleared = set()
    pairs = []
    for d in range(top_dim, 0, -1):
        for j in by_dim.get(d, ()):
            if j in cleared:
                continue
            col = set(bnd[j])
            while col:
                low = max(col)
                k = pivot_owner.get(low)
                if k is None:
                    break
                col ^= reduced[k]
            if col:
                low = max(col)
                pivot_owner[low] = j
                reduced[j] = col
                cleared.add(low)
                pairs.append((low, j))
    return pairs, set(reduced)


def compute_persistence(filt, max_hom_dim: int = 2) -> list[PersistenceDiagram]:
    """Diagrams ``D_0 .. D_max_hom_dim`` of a filtration.

    Zero-persistence pairs are dropped; unpaired creators give essential
    points ``(birth, inf)``.
    """
    if max_hom_dim not in (0, 1, 2):
        raise ValueError("max_hom_dim must be 0, 1 or 2")
    cx = _as_complex(filt)
    cx.validate()
    vals = cx.values
    pairs, negative = _reduce(cx, max_hom_dim + 1)
    pts: list[list] = [[] for _ in range(max_hom_dim + 1)]
    killed = set()
    for i, j in pairs:
        killed.add(i)
        p = cx.dims[i]
        if p <= max_hom_dim and vals[i] != vals[j]:
            pts[p].append((vals[i], vals[j]))
    for i, p in enumerate(cx.dims):
        if p <= max_hom_dim and i not in killed and i not in negative:
            pts[p].append((vals[i], math.inf))
    cap = cx.effective_cap
    return [PersistenceDiagram(p, pts[p], cap) for p in range(max_hom_dim + 1)]


# --------------------------------------------------------------------------
# Rank computations over GF(2); vectors are Python ints used as bitsets.

class _XorBasis:
    __slots__ = ("rows",)

    def __init__(self):
        self.rows: dict[int, int] = {}

    def insert(self, vec: int) -> bool:
        rows = self.rows
        while vec:
            top = vec.bit_length() - 1
            other = rows.get(top)
            if other is None:
                rows[top] = vec
                return True
            vec ^= other
        return False

    @property
    def rank(self) -> int:
        return len(self.rows)


def _gf2_rank(vectors) -> int:
    basis = _XorBasis()
    for v in vectors:
        basis.insert(v)
    return basis.rank


def betti_numbers_at(filt, t: float) -> tuple[int, int, int]:
    """Betti numbers ``(b0, b1, b2)`` of the subcomplex of cells with value <= t."""
    cx = _as_complex(filt)
    alive = [j for j in range(len(cx)) if cx.values[j] <= t]
    local = {j: k for k, j in enumerate(alive)}
    counts = [0, 0, 0, 0]
    columns: list[list[int]] = [[], [], [], []]
    for j in alive:
        d = cx.dims[j]
        if d > 3:
            continue
        counts[d] += 1
        vec = 0
        for f in cx.boundaries[j]:
            vec |= 1 << local[f]
        columns[d].append(vec)
    ranks = [0] + [_gf2_rank(columns[d]) for d in (1, 2, 3)]
    return tuple(counts[p] - ranks[p] - ranks[p + 1] for p in range(3))


def oracle_persistence(filt, max_hom_dim: int = 2, max_cells: int = 2000,
                       ) -> list[PersistenceDiagram]:
    """Diagrams recovered from persistent Betti numbers.

    With distinct filtration values ``t_0 < ... < t_{m-1}`` and ``K_i`` the
    subcomplex at ``t_i``, the persistent Betti number is

        beta_p(i, j) = dim Z_p(K_i) - dim(B_p(K_j) & C_p(K_i)),

    where the second term equals ``rank d_{p+1}(K_j)`` minus the rank of the
    same matrix restricted to rows of p-cells outside ``K_i``.  Multiplicities
    follow by inclusion-exclusion; every rank is a fresh Gaussian elimination.
    """
    cx = _as_complex(filt)
    cx.validate()
    if len(cx) > max_cells:
        raise OracleTooLargeError(f"{len(cx)} cells exceeds the oracle limit of {max_cells}")
    levels = sorted(set(cx.values))
    m = len(levels)
    level = [bisect.bisect_left(levels, v) for v in cx.values]
    cap = cx.effective_cap
    out = []
    for p in range(max_hom_dim + 1):
        pts = []
        if m:
            beta = _persistent_betti(cx, level, m, p)
            for i in range(m):
                prev = beta[i - 1] if i > 0 else None
                for j in range(i + 1, m):
                    mu = beta[i][j - 1] - beta[i][j]
                    if prev is not None:
                        mu -= prev[j - 1] - prev[j]
                    pts.extend([(levels[i], levels[j])] * mu)
                mu_inf = beta[i][m - 1] - (prev[m - 1] if prev is not None else 0)
                pts.extend([(levels[i], math.inf)] * mu_inf)
        out.append(PersistenceDiagram(p, pts, cap))
    return out


def _persistent_betti(cx: CellComplex, level, m: int, p: int):
    """Table ``beta[i][j]`` (valid for i <= j) of rank H_p(K_i) -> H_p(K_j)."""
    dims = cx.dims
    cells_p = sorted((j for j in range(len(cx)) if dims[j] == p), key=lambda j: level[j])
    cells_q = sorted((j for j in range(len(cx)) if dims[j] == p + 1), key=lambda j: level[j])
    faces_index = {j: k for k, j in enumerate(j for j in range(len(cx)) if dims[j] == p - 1)}
    p_index = {j: k for k, j in enumerate(cells_p)}

    # dim Z_p(K_i): p-cells present minus rank of their boundary columns
    cycles = [0] * m
    basis = _XorBasis()
    present = 0
    k = 0
    for i in range(m):
        while k < len(cells_p) and level[cells_p[k]] == i:
            vec = 0
            for f in cx.boundaries[cells_p[k]]:
                vec |= 1 << faces_index[f]
            basis.insert(vec)
            present += 1
            k += 1
        cycles[i] = present - basis.rank

    # rows of d_{p+1}: for each p-cell, the set of (p+1)-cells having it as a face
    rows = [0] * len(cells_p)
    for col, j in enumerate(cells_q):
        for f in cx.boundaries[j]:
            rows[p_index[f]] |= 1 << col
    q_upto = [0] * m  # number of (p+1)-cells with level <= j
    k = 0
    for j in range(m):
        while k < len(cells_q) and level[cells_q[k]] == j:
            k += 1
        q_upto[j] = k
    p_by_level: list[list[int]] = [[] for _ in range(m)]
    for r, j in enumerate(cells_p):
        p_by_level[level[j]].append(r)

    beta = [[0] * m for _ in range(m)]
    for j in range(m):
        mask = (1 << q_upto[j]) - 1
        basis = _XorBasis()
        outside = [0] * m  # outside[i] = rank restricted to rows with level > i
        for i in range(m - 1, -1, -1):
            outside[i] = basis.rank
            for r in p_by_level[i]:
                basis.insert(rows[r] & mask)
        total = basis.rank  # rank d_{p+1}(K_j)
        for i in range(j + 1):
            beta[i][j] = cycles[i] - (total - outside[i])
    return beta


# --------------------------------------------------------------------------
# Serialization

def _num(x: float) -> str:
    return format(x, ".17g")


def diagrams_to_json(diagrams: Sequence[PersistenceDiagram]) -> str:
    """JSON array of ``{"dim", "birth", "death"}`` with ``null`` for infinite deaths."""
    entries = []
    for dgm in diagrams:
        for b, d in dgm.points:
            death = "null" if math.isinf(d) else _num(d)
            entries.append(f'{{"dim": {dgm.dim}, "birth": {_num(b)}, "death": {death}}}')
    return "[" + ",\n ".join(entries) + "]\n"


def diagrams_from_json(text: str, max_dim: int = 2, cap: float = math.inf,
                       ) -> list[PersistenceDiagram]:
    pts: list[list] = [[] for _ in range(max_dim + 1)]
    for e in json.loads(text):
        death = math.inf if e["death"] is None else float(e["death"])
        pts[int(e["dim"])].append((float(e["birth"]), death))
    return [PersistenceDiagram(p, pts[p], cap) for p in range(max_dim + 1)]
