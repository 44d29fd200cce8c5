"""Synthetic scalar fields and labelled corpora for tests and demos."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .field import ScalarField, field_from_function, write_pgm

__all__ = ["gaussian_bumps", "disk_blob", "annulus", "make_shape_corpus", "write_corpus"]


def gaussian_bumps(w: int, h: int, bumps, background: float = 0.0) -> ScalarField:
    """Sum of isotropic Gaussians; ``bumps`` holds ``(u, v, height, sigma)`` tuples."""

    def gen(u, v):
        return background + sum(a * math.exp(-((u - cu) ** 2 + (v - cv) ** 2) / (2 * s * s))
                                for cu, cv, a, s in bumps)

    return field_from_function(w, h, gen)


def _radial_profile(w, h, center, inner, outer, low, high, edge):
    """``high`` on the ring inner <= rho <= outer, ``low`` elsewhere, with logistic edges."""
    cu, cv = center

    def gen(u, v):
        rho = math.hypot(u - cu, v - cv)
        rise = 1.0 / (1.0 + math.exp(-(rho - inner) / edge)) if inner > 0 else 1.0
        fall = 1.0 / (1.0 + math.exp((rho - outer) / edge))
        return low + (high - low) * rise * fall

    return gen


def _noisy(w, h, gen, sigma, rng) -> ScalarField:
    noise = rng.normal(0.0, sigma, size=(h, w)) if sigma > 0 else np.zeros((h, w))
    return field_from_function(w, h, lambda u, v: gen(u, v) + noise[v, u])


def disk_blob(size: int = 64, radius: float | None = None, sigma: float = 0.0, rng=None,
              low: float = 0.15, high: float = 0.85, jitter: float = 0.0) -> ScalarField:
    """A bright disk on a dark background, plus optional Gaussian noise."""
    rng = np.random.default_rng() if rng is None else rng
    radius = 0.2 * size if radius is None else radius
    c = (size - 1) / 2 + rng.uniform(-jitter, jitter, 2)
    return _noisy(size, size, _radial_profile(size, size, c, 0.0, radius, low, high, 1.0), sigma, rng)


def annulus(size: int = 64, inner: float | None = None, outer: float | None = None,
            sigma: float = 0.0, rng=None, low: float = 0.15, high: float = 0.85,
            jitter: float = 0.0) -> ScalarField:
    """A bright ring on a dark background, plus optional Gaussian noise."""
    rng = np.random.default_rng() if rng is None else rng
    inner = 0.2 * size if inner is None else inner
    outer = 0.38 * size if outer is None else outer
    c = (size - 1) / 2 + rng.uniform(-jitter, jitter, 2)
    return _noisy(size, size, _radial_profile(size, size, c, inner, outer, low, high, 1.0), sigma, rng)


def make_shape_corpus(n_per_class: int = 20, size: int = 64, sigma: float = 0.05,
                      seed: int = 0, jitter: float = 2.0):
    """``[(id, field, label)]`` with ``n_per_class`` disks followed by as many annuli."""
    rng = np.random.default_rng(seed)
    items = []
    for k in range(n_per_class):
        items.append((f"disk/{k:03d}", disk_blob(size, sigma=sigma, rng=rng, jitter=jitter), "disk"))
    for k in range(n_per_class):
        items.append((f"annulus/{k:03d}", annulus(size, sigma=sigma, rng=rng, jitter=jitter), "annulus"))
    return items


def write_corpus(root, items, maxval: int = 255) -> list[Path]:
    """Write ``items`` as ``<root>/<label>/<name>.pgm``; the item id's last component is the name."""
    root = Path(root)
    paths = []
    for item_id, fld, label in items:
        path = root / label / (item_id.split("/")[-1] + ".pgm")
        path.parent.mkdir(parents=True, exist_ok=True)
        write_pgm(path, fld, maxval=maxval)
        paths.append(path)
    return paths
