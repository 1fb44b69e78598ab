"""Points of the extended space, the chordal metric, rings and condensers.

Everything here is a pure function of immutable values.  The point at
infinity is an explicit flag on :class:`ExtendedPoint`; no coordinate is
ever used to encode it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_DIM = 8


@dataclass(frozen=True)
class ExtendedPoint:
    """A point of R^n, or the point at infinity of its one-point compactification."""

    coords: tuple[float, ...]
    at_infinity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if len(self.coords) < 2:
            raise ValueError("dimension n must be at least 2")

    @classmethod
    def infinity(cls, n: int) -> "ExtendedPoint":
        return cls((0.0,) * n, at_infinity=True)

    @classmethod
    def of(cls, coords) -> "ExtendedPoint":
        return cls(tuple(np.asarray(coords, dtype=float).ravel()))

    @property
    def n(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        if self.at_infinity:
            raise ValueError("the point at infinity has no coordinates")
        return np.array(self.coords)


def chordal_distance(x: ExtendedPoint, y: ExtendedPoint) -> float:
    """Chordal distance h(x, y); bounded by 1, with h(0, inf) = 1."""
    if x.n != y.n:
        raise ValueError(f"dimension mismatch: {x.n} vs {y.n}")
    if x.at_infinity and y.at_infinity:
        return 0.0
    if x.at_infinity or y.at_infinity:
        finite = y if x.at_infinity else x
        return 1.0 / math.sqrt(1.0 + _sq_norm(finite.coords))
    diff = math.sqrt(sum((a - b) ** 2 for a, b in zip(x.coords, y.coords)))
    return diff / (math.sqrt(1.0 + _sq_norm(x.coords)) * math.sqrt(1.0 + _sq_norm(y.coords)))


def chordal_distance_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised chordal distance between finite points (last axis = coordinates)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    num = np.linalg.norm(a - b, axis=-1)
    den = np.sqrt(1.0 + np.sum(a * a, axis=-1)) * np.sqrt(1.0 + np.sum(b * b, axis=-1))
    return num / den


def chordal_diameter(points: Sequence[ExtendedPoint]) -> float:
    """Largest pairwise chordal distance of a finite set; 0 for a singleton."""
    pts = list(points)
    if not pts:
        raise ValueError("chordal diameter of an empty set is undefined")
    return max((chordal_distance(a, b) for a, b in itertools.combinations(pts, 2)), default=0.0)


def _sq_norm(c) -> float:
    return sum(v * v for v in c)


def unit_ball_volume(n: int) -> float:
    """Omega_n, the volume of the unit ball in R^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def unit_sphere_area(n: int) -> float:
    """omega_{n-1}, the surface area of the unit sphere in R^n."""
    return n * unit_ball_volume(n)


def ball_volume(n: int, r: float) -> float:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if math.isinf(r):
        return math.inf
    return unit_ball_volume(n) * r**n


def sphere_area(n: int, r: float) -> float:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if math.isinf(r):
        return math.inf
    return unit_sphere_area(n) * r ** (n - 1)


def _check_dim(n: int) -> None:
    if not 2 <= n <= MAX_DIM:
        raise ValueError(f"dimension n={n} outside supported range 2..{MAX_DIM}")


@dataclass(frozen=True)
class SphericalRing:
    """A(r1, r2, x0) = {r1 < |x - x0| < r2}."""

    center: tuple[float, ...]
    r1: float
    r2: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.ravel(self.center)))
        _check_dim(len(self.center))
        if not (0 < self.r1 < self.r2):
            raise ValueError(f"ring radii must satisfy 0 < r1 < r2, got {self.r1}, {self.r2}")

    @property
    def n(self) -> int:
        return len(self.center)

    def center_array(self) -> np.ndarray:
        return np.array(self.center)

    def contains(self, x: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(np.asarray(x) - self.center_array(), axis=-1)
        return (d > self.r1) & (d < self.r2)


@dataclass(frozen=True)
class Condenser:
    """Concentric ball condenser (B(c, outer_radius), closed B(c, inner_radius)).

    ``outer_radius`` may be ``math.inf`` for the whole space.
    """

    center: tuple[float, ...]
    inner_radius: float
    outer_radius: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.ravel(self.center)))
        _check_dim(len(self.center))
        if not (0 < self.inner_radius < self.outer_radius):
            raise ValueError("condenser needs 0 < inner radius < outer radius")

    @property
    def n(self) -> int:
        return len(self.center)

    def plate_volume(self) -> float:
        return ball_volume(self.n, self.inner_radius)

    def plate_diameter(self) -> float:
        return 2.0 * self.inner_radius

    def outer_volume(self) -> float:
        return ball_volume(self.n, self.outer_radius)


@dataclass(frozen=True)
class DimensionParams:
    n: int
    p: float

    def __post_init__(self):
        _check_dim(self.n)
        if self.p <= 1:
            raise ValueError("p must exceed 1")

    @property
    def in_main_range(self) -> bool:
        return self.n - 1 < self.p < self.n

    def require_main_range(self) -> None:
        if not self.in_main_range:
            raise ValueError(f"p={self.p} must lie in (n-1, n) = ({self.n - 1}, {self.n})")
