"""Farthest-point sampling, the baseline subsampler."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import SamplePoints

__all__ = ["SampleBudget", "fps", "coverage_radius", "matched_budget"]


@dataclass(frozen=True)
class SampleBudget:
    m: int
    seed_index: int = 0


def _as_points(cloud) -> SamplePoints:
    return cloud if isinstance(cloud, SamplePoints) else SamplePoints(cloud)


def fps(cloud, budget, seed_index: int | None = None, random_seed: int | None = None,
        ) -> list[int]:
    """Greedy max-min subsample of ``budget.m`` point indices.

    Starts at ``seed_index`` (or a point drawn with ``random_seed``), then
    repeatedly adds the point farthest from everything chosen so far; ties go
    to the smallest index.
    """
    pts = _as_points(cloud)
    if isinstance(budget, SampleBudget):
        m = budget.m
        seed = budget.seed_index if seed_index is None else seed_index
    else:
        m = int(budget)
        seed = 0 if seed_index is None else seed_index
    n = len(pts)
    if n == 0:
        raise ValueError("cannot sample from an empty cloud")
    if not 1 <= m <= n:
        raise ValueError(f"budget {m} outside 1..{n}")
    if random_seed is not None:
        seed = int(np.random.default_rng(random_seed).integers(n))
    if not 0 <= seed < n:
        raise IndexError(f"seed index {seed} outside the cloud")

    chosen = [seed]
    nearest = pts.distances_from(seed)
    for _ in range(m - 1):
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        np.minimum(nearest, pts.distances_from(nxt), out=nearest)
    return chosen


def coverage_radius(cloud, chosen) -> float:
    """Largest distance from any cloud point to its nearest chosen point."""
    pts = _as_points(cloud)
    chosen = list(chosen)
    if not chosen:
        raise ValueError("chosen set is empty")
    nearest = np.full(len(pts), np.inf)
    for c in chosen:
        np.minimum(nearest, pts.distances_from(c), out=nearest)
    return float(nearest.max())


def matched_budget(sample_sizes) -> int:
    """Mean sample size rounded half up, so FPS uses as many points on average."""
    sizes = list(sample_sizes)
    if not sizes:
        raise ValueError("no sample sizes to match")
    return int(np.floor(sum(sizes) / len(sizes) + 0.5))
