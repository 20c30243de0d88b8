"""Signed distances on the torus and phase-field initial data ``u0 = q(sdist / eps)``.

Distances are positive inside a shape.  Displacements are wrapped to the
nearest periodic image, so shapes touching the cell boundary continue on the
opposite side.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union as TUnion

import numpy as np

from .profile import eval_profile


def _wrap(d):
    return d - np.round(d)


def _points(x):
    """Accept a single point or a stack of coordinate arrays ``(dim, ...)``."""
    return [np.asarray(c, dtype=float) for c in x]


@dataclass(frozen=True)
class Ball:
    center: Sequence[float]
    radius: float

    def sdist(self, x):
        r2 = sum(_wrap(xi - ci) ** 2 for xi, ci in zip(_points(x), self.center))
        return self.radius - np.sqrt(r2)


@dataclass(frozen=True)
class Cuboid:
    center: Sequence[float]
    half_widths: Sequence[float]

    def sdist(self, x):
        d = [np.abs(_wrap(xi - ci)) - hw for xi, ci, hw in zip(_points(x), self.center, self.half_widths)]
        outside = np.sqrt(sum(np.maximum(di, 0.0) ** 2 for di in d))
        inside = np.minimum(np.maximum.reduce(d), 0.0) if len(d) > 1 else np.minimum(d[0], 0.0)
        return -(outside + inside)


@dataclass(frozen=True)
class Slab:
    """Periodic band ``lower <= x[axis] <= upper``."""

    axis: int
    lower: float
    upper: float

    def sdist(self, x):
        y = _points(x)[self.axis]
        to_lower = _wrap(y - self.lower)
        to_upper = _wrap(self.upper - y)
        width = self.upper - self.lower
        inside = (to_lower >= 0) & (to_lower <= width)
        d_in = np.minimum(to_lower, to_upper)
        d_out = np.minimum(np.abs(to_lower), np.abs(to_upper))
        return np.where(inside, d_in, -d_out)


@dataclass(frozen=True)
class Union:
    members: Sequence["ShapeSpec"]

    def sdist(self, x):
        return np.maximum.reduce([s.sdist(x) for s in self.members])


@dataclass(frozen=True)
class Xor:
    """Symmetric difference: points inside an odd number of members.

    ``Xor([Union(circles), Slab(1, -0.5, 0)])`` gives two circles whose
    phases are inverted across the horizontal axis.
    """

    members: Sequence["ShapeSpec"]

    def sdist(self, x):
        d = [s.sdist(x) for s in self.members]
        inside = sum((di > 0).astype(int) for di in d)
        dist = np.minimum.reduce([np.abs(di) for di in d])
        return np.where(inside % 2 == 1, dist, -dist)


@dataclass(frozen=True)
class RandomBalls:
    """``count`` balls with uniform centres and radii in ``radius_range``.

    Drawn from a Philox counter-based generator so a seed reproduces the
    configuration on every platform.
    """

    count: int
    radius_range: tuple
    rng_seed: int
    dim: int = 2

    def balls(self):
        rng = np.random.Generator(np.random.Philox(self.rng_seed))
        centers = rng.uniform(-0.5, 0.5, size=(self.count, self.dim))
        radii = rng.uniform(*self.radius_range, size=self.count)
        return [Ball(tuple(c), float(r)) for c, r in zip(centers, radii)]

    def sdist(self, x):
        return Union(self.balls()).sdist(x)


ShapeSpec = TUnion[Ball, Cuboid, Slab, Union, Xor, RandomBalls]


def signed_distance(shape, x):
    """Signed distance of ``x`` (a point or coordinate arrays) to ``shape``."""
    d = shape.sdist(x)
    return float(d) if np.ndim(d) == 0 else d


def initialize(grid, shape):
    """Phase field ``q(sdist / eps)`` on ``grid``."""
    d = shape.sdist(grid.coords)
    u, _, _ = eval_profile(d / grid.eps)
    return np.asarray(u, dtype=float)


def two_touching_circles(radius=0.15, spacing=None):
    """Two equal circles touching at the origin, centred on the horizontal axis."""
    spacing = radius if spacing is None else spacing
    return Union((Ball((-spacing, 0.0), radius), Ball((spacing, 0.0), radius)))


def inverted_touching_circles(radius=0.15):
    """Two touching circles with the phases swapped below the horizontal axis."""
    return Xor((two_touching_circles(radius), Slab(1, -0.5, 0.0)))


def three_touching_circles(radius=0.12):
    """Three equal circles with centres on an equilateral triangle, pairwise touching."""
    ring = 2.0 * radius / np.sqrt(3.0)
    angles = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    return Union(tuple(Ball((ring * np.cos(a), ring * np.sin(a)), radius) for a in angles))
