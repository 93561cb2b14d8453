"""Planar base domains: projections of a body onto a hyperplane.

Coordinates are taken in an orthonormal basis of the hyperplane, so a base in
dimension ``n`` lives in ``R^(n-1)``.  Every domain contains the origin in its
interior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class Base:
    dim: int
    symmetric: bool

    def contains(self, y: np.ndarray, tol: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    @property
    def area(self) -> float:
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class IntervalBase(Base):
    """Interval ``[lo, hi]`` with ``lo < 0 < hi``."""

    lo: float
    hi: float
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if not self.lo < 0.0 < self.hi:
            raise ValueError(f"interval base must contain 0 in its interior, got [{self.lo}, {self.hi}]")

    @property
    def symmetric(self) -> bool:
        return self.lo == -self.hi

    def contains(self, y, tol=0.0):
        y = np.asarray(y, dtype=float).reshape(-1)
        return (y >= self.lo - tol) & (y <= self.hi + tol)

    def interior_depth(self, y):
        y = np.asarray(y, dtype=float).reshape(-1)
        return np.minimum(y - self.lo, self.hi - y)

    @property
    def area(self) -> float:
        return self.hi - self.lo

    @property
    def diameter(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class EllipseBase(Base):
    """Ellipse ``{L w : |w| <= 1}``."""

    matrix: np.ndarray
    dim: int = field(default=2, init=False)
    symmetric: bool = field(default=True, init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2) or abs(np.linalg.det(m)) < 1e-14:
            raise ValueError("ellipse base needs a nonsingular 2x2 matrix")
        object.__setattr__(self, "matrix", m)

    def contains(self, y, tol=0.0):
        w = np.linalg.solve(self.matrix, np.atleast_2d(y).T).T
        return np.linalg.norm(w, axis=1) <= 1.0 + tol

    def radius(self, angle):
        """Distance from 0 to the boundary in direction ``angle``."""
        d = np.stack([np.cos(angle), np.sin(angle)], axis=-1)
        w = np.linalg.solve(self.matrix, d.reshape(-1, 2).T).T
        return 1.0 / np.linalg.norm(w, axis=1).reshape(np.shape(angle))

    @property
    def area(self) -> float:
        return float(np.pi * abs(np.linalg.det(self.matrix)))

    @property
    def diameter(self) -> float:
        return 2.0 * float(np.linalg.svd(self.matrix, compute_uv=False)[0])


@dataclass(frozen=True)
class PolygonBase(Base):
    """Convex polygon with counter-clockwise ``vertices``."""

    vertices: np.ndarray
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon base needs at least 3 planar vertices")
        x, y = v[:, 0], v[:, 1]
        signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        if signed < 0:
            v = v[::-1].copy()
        object.__setattr__(self, "vertices", v)
        if not np.all(self._offsets() > 0):
            raise ValueError("polygon base must contain 0 in its interior")

    def _edges(self):
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        return normals

    def _offsets(self):
        return np.einsum("ij,ij->i", self._edges(), self.vertices)

    @property
    def symmetric(self) -> bool:
        v = self.vertices
        k = v.shape[0]
        if k % 2:
            return False
        return bool(np.allclose(np.roll(v, k // 2, axis=0), -v, atol=1e-12))

    def contains(self, y, tol=0.0):
        y = np.atleast_2d(y)
        return np.all(y @ self._edges().T <= self._offsets() + tol, axis=1)

    def radius(self, angle):
        d = np.stack([np.cos(angle), np.sin(angle)], axis=-1).reshape(-1, 2)
        dots = d @ self._edges().T
        with np.errstate(divide="ignore"):
            r = np.where(dots > 1e-15, self._offsets() / np.where(dots > 1e-15, dots, 1.0), np.inf)
        return r.min(axis=1).reshape(np.shape(angle))

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)))


@dataclass(frozen=True)
class RadialBase(Base):
    """Star domain ``{r u(phi) : 0 <= r <= R(phi)}`` given by a radius callable."""

    radius_fn: Callable[[np.ndarray], np.ndarray]
    symmetric: bool = False
    dim: int = field(default=2, init=False)

    def radius(self, angle):
        return np.asarray(self.radius_fn(np.asarray(angle, dtype=float)), dtype=float)

    def contains(self, y, tol=0.0):
        y = np.atleast_2d(y)
        r = np.linalg.norm(y, axis=1)
        return r <= self.radius(np.arctan2(y[:, 1], y[:, 0])) * (1.0 + tol) + tol

    @property
    def area(self) -> float:
        phi = 2.0 * np.pi * (np.arange(4096) + 0.5) / 4096
        return float(np.mean(self.radius(phi) ** 2) * np.pi)

    @property
    def diameter(self) -> float:
        phi = 2.0 * np.pi * (np.arange(1024) + 0.5) / 1024
        return float(2.0 * self.radius(phi).max())
