"""Wasserstein distances between persistence diagrams."""
from __future__ import annotations

import json
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .homology import PersistenceDiagram

__all__ = ["wasserstein", "wasserstein_matching", "cloud_distance", "matching_problem"]


def _finite_pair(d1: PersistenceDiagram, d2: PersistenceDiagram):
    cap = min(d1.cap, d2.cap)
    if cap == np.inf and (d1.essential or d2.essential):
        raise ValueError("essential classes need a finite cap to be compared")
    return d1.capped(cap), d2.capped(cap)


def matching_problem(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Square ground-cost matrix between ``a`` and ``b``, each augmented by the other's diagonal projections.

    Rows are ``a`` followed by ``len(b)`` diagonal slots; columns are ``b``
    followed by ``len(a)`` diagonal slots.  Point-to-point cost is the sup-norm
    distance; point-to-diagonal cost is half the persistence.
    """
    n, m = len(a), len(b)
    cost = np.zeros((n + m, n + m))
    if n and m:
        cost[:n, :m] = np.maximum(np.abs(a[:, None, 0] - b[None, :, 0]),
                                  np.abs(a[:, None, 1] - b[None, :, 1]))
    if n:
        cost[:n, m:] = ((a[:, 1] - a[:, 0]) / 2.0)[:, None]
    if m:
        cost[n:, :m] = ((b[:, 1] - b[:, 0]) / 2.0)[None, :]
    return cost


def wasserstein_matching(d1: PersistenceDiagram, d2: PersistenceDiagram, q: float = 1.0):
    """Distance plus the optimal matching as ``(i, j)`` pairs (``None`` marks the diagonal)."""
    if d1.dim != d2.dim:
        raise ValueError(f"cannot compare diagrams of dimension {d1.dim} and {d2.dim}")
    if not q >= 1:
        raise ValueError(f"q must be at least 1, got {q}")
    # solve in a canonical orientation so that swapping the arguments is bit-exact
    flipped = (len(d2.points), d2.points) < (len(d1.points), d1.points)
    a, b = _finite_pair(d2, d1) if flipped else _finite_pair(d1, d2)
    n, m = len(a), len(b)
    if n + m == 0:
        return 0.0, []
    cost = matching_problem(a, b) ** q
    rows, cols = linear_sum_assignment(cost)
    total = float(np.sort(cost[rows, cols]).sum())
    matching = []
    for i, j in zip(rows.tolist(), cols.tolist()):
        if i < n or j < m:
            pair = (i if i < n else None, j if j < m else None)
            matching.append(pair[::-1] if flipped else pair)
    return total ** (1.0 / q), sorted(matching, key=lambda p: (p[0] is None, p[0] or 0, p[1] is None, p[1] or 0))


def wasserstein(d1: PersistenceDiagram, d2: PersistenceDiagram, q: float = 1.0) -> float:
    """Order-``q`` Wasserstein distance with sup-norm ground metric.

    Essential points are closed at the smaller of the two diagram caps first.
    """
    return wasserstein_matching(d1, d2, q)[0]


def cloud_distance(diags_i: Sequence[PersistenceDiagram], diags_j: Sequence[PersistenceDiagram],
                   q: float = 1.0, dims: Sequence[int] = (0, 1, 2)) -> float:
    """Largest per-dimension Wasserstein distance over ``dims``."""
    by_i = {d.dim: d for d in diags_i}
    by_j = {d.dim: d for d in diags_j}
    missing = [k for k in dims if k not in by_i or k not in by_j]
    if missing:
        raise ValueError(f"diagrams missing for dimension(s) {missing}")
    return max(wasserstein(by_i[k], by_j[k], q) for k in dims)


def matching_to_json(d1: PersistenceDiagram, d2: PersistenceDiagram, q: float = 1.0) -> str:
    dist, matching = wasserstein_matching(d1, d2, q)
    a, b = _finite_pair(d1, d2)
    pairs = [{"left": None if i is None else a[i].tolist(),
              "right": None if j is None else b[j].tolist()} for i, j in matching]
    return json.dumps({"dim": d1.dim, "q": q, "distance": dist, "matching": pairs}, indent=1)
