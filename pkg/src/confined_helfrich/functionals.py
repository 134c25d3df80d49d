"""Bending, area, volume and total-mean-curvature functionals with exact gradients.

The gradients differentiate the discrete functionals themselves (through the
cotangent weights, mixed areas and angle-weighted normals), so they agree
with finite differences of the values to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import _dot, _vertex_fields, backprop, face_terms
from .mesh import TriMesh


@dataclass(frozen=True)
class EnergyParams:
    """Spontaneous curvature and multipliers.

    ``target_area`` of ``None`` means no area constraint.
    """

    H0: float = 0.0
    lam: float = 0.0
    rho: float = 0.0
    theta: float = 0.0
    target_area: Optional[float] = None

    def __post_init__(self):
        for name in ("H0", "lam", "rho", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.target_area is not None and not (
            math.isfinite(self.target_area) and self.target_area > 0
        ):
            raise ValueError("target_area must be positive")


def helfrich_energy(mesh: TriMesh, H0: float = 0.0) -> float:
    """1/4 sum_v (H_v - H0)^2 A_v."""
    ft = face_terms(mesh.vertices, mesh.faces)
    _, _, H, _ = _vertex_fields(ft)
    return float(0.25 * np.sum((H - H0) ** 2 * ft.area))


def willmore_energy(mesh: TriMesh) -> float:
    return helfrich_energy(mesh, 0.0)


def area_value(mesh: TriMesh) -> float:
    p = mesh.vertices[mesh.faces]
    return float(0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1).sum())


def volume_value(mesh: TriMesh) -> float:
    p = mesh.vertices[mesh.faces]
    return float(_dot(p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)


def total_mean_curvature_value(mesh: TriMesh) -> float:
    ft = face_terms(mesh.vertices, mesh.faces)
    _, _, H, _ = _vertex_fields(ft)
    return float(np.sum(H * ft.area))


def scaling_derivative(mesh: TriMesh, H0: float) -> float:
    """d/dt E_H0(t S) at t = 1, i.e. -(H0/2) sum_v (H_v - H0) A_v.

    Exact for the discrete energy: discrete H scales like 1/t and areas like t^2.
    """
    if H0 == 0:
        return 0.0
    ft = face_terms(mesh.vertices, mesh.faces)
    _, _, H, _ = _vertex_fields(ft)
    return float(-0.5 * H0 * np.sum((H - H0) * ft.area))


# ---------------------------------------------------------------------------
# value + gradient kernels


def _bending_adjoints(ft, H0: float, weight: float, theta_weight: float):
    """Adjoints of weight*E_H0 + theta_weight*T w.r.t. (area_v, lap_v, nsum_v)."""
    nu, _, H, m = _vertex_fields(ft)
    A = ft.area
    gH = weight * 0.5 * (H - H0) * A + theta_weight * A
    gA = weight * 0.25 * (H - H0) ** 2 + theta_weight * H
    # H = lap . nu / (2A)
    g_lap = (gH / (2 * A))[:, None] * nu
    g_nu = (gH / (2 * A))[:, None] * ft.lap
    gA = gA - gH * H / A
    # nu = -nsum / |nsum|
    g_nsum = -(g_nu - _dot(g_nu, nu)[:, None] * nu) / m[:, None]
    value = weight * 0.25 * np.sum((H - H0) ** 2 * A) + theta_weight * np.sum(H * A)
    return value, gA, g_lap, g_nsum


def _volume_grad(vertices, faces):
    p = vertices[faces]
    n = len(vertices)
    g = np.zeros((n, 3))
    for c in range(3):
        g += np.stack(
            [np.bincount(faces[:, c], weights=w, minlength=n)
             for w in np.cross(p[:, (c + 1) % 3], p[:, (c + 2) % 3]).T],
            axis=1,
        )
    return g / 6.0


def value_and_gradient(mesh_or_vertices, functional: str, H0: float = 0.0, faces=None):
    """Value and exact vertex gradient of one functional.

    ``functional`` is one of ``"helfrich"``, ``"willmore"``, ``"area"``,
    ``"volume"``, ``"total_mean_curvature"``.
    """
    if isinstance(mesh_or_vertices, TriMesh):
        V, F = mesh_or_vertices.vertices, mesh_or_vertices.faces
    else:
        V, F = np.asarray(mesh_or_vertices, float), faces
    if functional == "volume":
        p = V[F]
        return float(_dot(p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0), _volume_grad(V, F)
    if functional == "area":
        p = V[F]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        s = np.linalg.norm(n, axis=1)
        u = n / s[:, None]
        # d(s/2)/dP: 1/2 * u x (edge opposite), oriented
        gP = np.stack(
            [0.5 * np.cross(u, p[:, (c + 2) % 3] - p[:, (c + 1) % 3]) for c in range(3)],
            axis=1,
        )
        from .geometry import scatter

        return float(0.5 * s.sum()), scatter(F.ravel(), gP.reshape(-1, 3), len(V))
    ft = face_terms(V, F)
    if functional in ("helfrich", "willmore"):
        h0 = H0 if functional == "helfrich" else 0.0
        val, gA, gL, gN = _bending_adjoints(ft, h0, 1.0, 0.0)
    elif functional == "total_mean_curvature":
        val, gA, gL, gN = _bending_adjoints(ft, 0.0, 0.0, 1.0)
    else:
        raise ValueError(f"unknown functional {functional!r}")
    return float(val), backprop(ft, gA, gL, gN)


def gradient(mesh: TriMesh, functional: str, H0: float = 0.0) -> np.ndarray:
    """Exact gradient (per-vertex 3-vectors) of a discrete functional."""
    return value_and_gradient(mesh, functional, H0)[1]


@dataclass
class ObjectiveParts:
    energy: float
    area: float
    volume: float
    total_mean_curvature: float
    value: float
    grad: np.ndarray
    grad_energy: np.ndarray
    grad_area: np.ndarray


def augmented_objective(vertices: np.ndarray, faces: np.ndarray, params: EnergyParams,
                        lam: float, penalty: float) -> ObjectiveParts:
    """E_H0 + lam (A - a) + penalty/2 (A - a)^2 + rho V + theta T and its gradient."""
    ft = face_terms(vertices, faces)
    val_e, gA, gL, gN = _bending_adjoints(ft, params.H0, 1.0, 0.0)
    g_e = backprop(ft, gA, gL, gN)
    area = float(ft.area.sum())
    _, g_area = value_and_gradient(vertices, "area", faces=faces)
    value = val_e
    grad = g_e.copy()
    if params.target_area is not None:
        c = area - params.target_area
        value += lam * c + 0.5 * penalty * c * c
        grad += (lam + penalty * c) * g_area
    vol = float("nan")
    if params.rho != 0.0:
        vol, g_v = value_and_gradient(vertices, "volume", faces=faces)
        value += params.rho * vol
        grad += params.rho * g_v
    tmc = float("nan")
    if params.theta != 0.0:
        tmc, g_t = value_and_gradient(vertices, "total_mean_curvature", faces=faces)
        value += params.theta * tmc
        grad += params.theta * g_t
    return ObjectiveParts(val_e, area, vol, tmc, float(value), grad, g_e, g_area)
