"""Confinement geometry: signed distance, boundary projection and inward normals.

Sign convention: the signed distance d is positive inside the container,
zero on its boundary and negative outside. The normal n points into the
container, so inside the tubular neighborhood every point decomposes as
y = project(y) + d(y) * n(y).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import OutsideTubularNeighborhood
from .mesh import TriMesh

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-10


class Container:
    """Base class. Subclasses implement :meth:`_sdf_grad` for arrays of points."""

    tubular_radius: float
    scale: float

    def _sdf_grad(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def sdf(self, points) -> np.ndarray | float:
        p = np.asarray(points, float)
        d, _ = self._sdf_grad(np.atleast_2d(p))
        return float(d[0]) if p.ndim == 1 else d

    def sdf_gradient(self, points) -> np.ndarray:
        p = np.asarray(points, float)
        _, g = self._sdf_grad(np.atleast_2d(p))
        return g[0] if p.ndim == 1 else g

    def _check_tube(self, p: np.ndarray, d: np.ndarray) -> None:
        bad = np.abs(d) >= self.tubular_radius
        if np.any(bad):
            i = int(np.argmax(bad))
            raise OutsideTubularNeighborhood(
                f"point {p[i].tolist()} has |d| = {abs(d[i]):.4g} >= tubular radius "
                f"{self.tubular_radius:.4g}"
            )

    def _project_unchecked(self, p: np.ndarray) -> np.ndarray:
        """Newton iteration along the distance gradient (exact in one step for true SDFs)."""
        x = p.copy()
        for _ in range(NEWTON_MAX_ITER):
            d, g = self._sdf_grad(x)
            if np.max(np.abs(d)) < NEWTON_TOL * self.scale:
                break
            g2 = np.einsum("ij,ij->i", g, g)
            x = x - (d / np.maximum(g2, 1e-300))[:, None] * g
        return x

    def project(self, points) -> np.ndarray:
        """Closest boundary point. Raises OutsideTubularNeighborhood."""
        p = np.asarray(points, float)
        pp = np.atleast_2d(p)
        d, _ = self._sdf_grad(pp)
        self._check_tube(pp, d)
        out = self._project_unchecked(pp)
        return out[0] if p.ndim == 1 else out

    def inward_normal(self, points) -> np.ndarray:
        """n(y) = n(project(y)), unit length."""
        p = np.asarray(points, float)
        pp = np.atleast_2d(p)
        q = self.project(pp)
        _, g = self._sdf_grad(q)
        g = g / np.linalg.norm(g, axis=1)[:, None]
        return g[0] if p.ndim == 1 else g


@dataclass(frozen=True, eq=False)
class Ball(Container):
    center: Sequence[float] = (0.0, 0.0, 0.0)
    radius: float = 1.0
    tubular_radius: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, float))
        if self.tubular_radius is None:
            object.__setattr__(self, "tubular_radius", 0.9 * self.radius)
        if not 0 < self.tubular_radius < self.radius:
            raise ValueError("tubular radius must be in (0, radius)")

    @property
    def scale(self) -> float:
        return self.radius

    def _sdf_grad(self, p):
        x = p - self.center
        r = np.linalg.norm(x, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = -x / r[:, None]
        g[r == 0] = 0.0
        return self.radius - r, g

    def _project_unchecked(self, p):
        x = p - self.center
        r = np.linalg.norm(x, axis=1)
        return self.center + self.radius * x / r[:, None]


@dataclass(frozen=True, eq=False)
class Box(Container):
    """Axis-aligned box whose edges and corners are rounded with radius ``rounding``."""

    min_corner: Sequence[float] = (-1.0, -1.0, -1.0)
    max_corner: Sequence[float] = (1.0, 1.0, 1.0)
    rounding: float = 0.0
    tubular_radius: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        lo = np.asarray(self.min_corner, float)
        hi = np.asarray(self.max_corner, float)
        if np.any(hi <= lo):
            raise ValueError("max_corner must exceed min_corner")
        half = 0.5 * (hi - lo)
        if not 0 <= self.rounding < half.min():
            raise ValueError("rounding must be smaller than the half width")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)
        if self.tubular_radius is None:
            tau = 0.9 * self.rounding if self.rounding > 0 else 0.5 * half.min()
            object.__setattr__(self, "tubular_radius", tau)

    @property
    def scale(self) -> float:
        return float(0.5 * np.min(self.max_corner - self.min_corner))

    def _sdf_grad(self, p):
        c = 0.5 * (self.min_corner + self.max_corner)
        half = 0.5 * (self.max_corner - self.min_corner) - self.rounding
        x = p - c
        sgn = np.where(x >= 0, 1.0, -1.0)
        q = np.abs(x) - half
        qp = np.maximum(q, 0.0)
        outer = np.linalg.norm(qp, axis=1)
        qmax = q.max(axis=1)
        d_std = outer + np.minimum(qmax, 0.0) - self.rounding
        g = np.zeros_like(p)
        out = outer > 0
        g[out] = sgn[out] * qp[out] / outer[out, None]
        inn = ~out
        k = np.argmax(q[inn], axis=1)
        g[np.flatnonzero(inn), k] = sgn[inn, k]
        return -d_std, -g

    def _project_unchecked(self, p):
        d, g = self._sdf_grad(p)
        return p - d[:, None] * g


# --- implicit containers built from primitives ------------------------------


@dataclass(frozen=True, eq=False)
class HalfSpace(Container):
    """Points with (x - point) . normal >= 0, ``normal`` pointing inside."""

    point: Sequence[float] = (0.0, 0.0, 0.0)
    normal: Sequence[float] = (0.0, 0.0, 1.0)
    tubular_radius: float = np.inf
    scale: float = 1.0

    def __post_init__(self):
        n = np.asarray(self.normal, float)
        object.__setattr__(self, "normal", n / np.linalg.norm(n))
        object.__setattr__(self, "point", np.asarray(self.point, float))

    def _sdf_grad(self, p):
        d = (p - self.point) @ self.normal
        return d, np.broadcast_to(self.normal, p.shape).copy()


def _smooth_min(d1, g1, d2, g2, k):
    if k <= 0:
        take = d1 <= d2
        return np.where(take, d1, d2), np.where(take[:, None], g1, g2)
    h = np.clip(0.5 + 0.5 * (d2 - d1) / k, 0.0, 1.0)
    d = d2 * (1 - h) + d1 * h - k * h * (1 - h)
    dh = np.where((h > 0) & (h < 1), 0.5 / k, 0.0)
    # chain rule through h(d1, d2)
    dd_dh = d1 - d2 - k * (1 - 2 * h)
    g = g2 * (1 - h)[:, None] + g1 * h[:, None]
    g += (dd_dh * dh)[:, None] * (g2 - g1)
    return d, g


@dataclass(frozen=True, eq=False)
class Intersection(Container):
    """Intersection of containers (min of distances, optionally smoothed by ``k``)."""

    parts: tuple = ()
    smoothing: float = 0.0
    tubular_radius: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if len(self.parts) < 1:
            raise ValueError("need at least one part")
        if self.tubular_radius is None:
            tau = min(p.tubular_radius for p in self.parts)
            if self.smoothing > 0:
                tau = min(tau, 0.9 * self.smoothing) if tau < np.inf else 0.9 * self.smoothing
            object.__setattr__(self, "tubular_radius", tau)

    @property
    def scale(self) -> float:
        return min(p.scale for p in self.parts)

    def _sdf_grad(self, p):
        d, g = self.parts[0]._sdf_grad(p)
        for part in self.parts[1:]:
            d2, g2 = part._sdf_grad(p)
            d, g = _smooth_min(d, g, d2, g2, self.smoothing)
        return d, g


@dataclass(frozen=True, eq=False)
class Union(Container):
    parts: tuple = ()
    smoothing: float = 0.0
    tubular_radius: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if len(self.parts) < 1:
            raise ValueError("need at least one part")
        if self.tubular_radius is None:
            object.__setattr__(self, "tubular_radius", min(p.tubular_radius for p in self.parts))

    @property
    def scale(self) -> float:
        return max(p.scale for p in self.parts)

    def _sdf_grad(self, p):
        d, g = self.parts[0]._sdf_grad(p)
        for part in self.parts[1:]:
            d2, g2 = part._sdf_grad(p)
            m, gm = _smooth_min(-d, -g, -d2, -g2, self.smoothing)
            d, g = -m, -gm
        return d, g


def unit_ball() -> Ball:
    return Ball((0.0, 0.0, 0.0), 1.0)


# --- mesh-level monitoring ---------------------------------------------------


@dataclass(frozen=True)
class ViolationStats:
    max_violation: float
    violating_vertex_count: int
    contact_vertex_count: int


def contact_mask(container: Container, vertices: np.ndarray, contact_tol: float | None = None):
    tol = 1e-6 * container.scale if contact_tol is None else contact_tol
    d = container.sdf(np.asarray(vertices))
    return np.abs(d) < tol


def violation_stats(container: Container, mesh: TriMesh, contact_tol: float | None = None,
                    ) -> ViolationStats:
    tol = 1e-6 * container.scale if contact_tol is None else contact_tol
    d = container.sdf(mesh.vertices)
    return ViolationStats(
        max_violation=float(max(0.0, -d.min())),
        violating_vertex_count=int(np.sum(d < -tol)),
        contact_vertex_count=int(np.sum(np.abs(d) < tol)),
    )
