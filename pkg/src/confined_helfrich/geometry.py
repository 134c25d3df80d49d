"""Discrete differential geometry on triangle meshes.

Per-vertex quantities follow the interior-normal convention: on a sphere of
radius r the scalar mean curvature is +2/r and the mean curvature vector
points to the center.

    H_vec(v) = 1/(2 A_v) * sum_j (cot a_vj + cot b_vj) (x_j - x_v)
    nu(v)    = -(angle weighted face normal, normalized)
    H(v)     = H_vec(v) . nu(v)
    K(v)     = (2 pi - sum of corner angles) / A_v

A_v is the mixed Voronoi area (obtuse triangles fall back to the A/2, A/4
split), so sum_v A_v equals the polyhedral surface area exactly.

:func:`face_terms` and :func:`backprop` form a hand-written reverse-mode
pass: the forward pass keeps every face intermediate, the backward pass maps
adjoints of (A_v, L_v, N_v, face areas) to vertex gradients. The functionals
module builds all energies and their exact gradients on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearDegenerateTriangle
from .mesh import TriMesh

_COT_LIMIT = 1e8


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def scatter(index: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    """Sum rows of ``values`` into ``n`` bins given by ``index`` (vectorized np.add.at)."""
    if values.ndim == 1:
        return np.bincount(index, weights=values, minlength=n)
    return np.stack(
        [np.bincount(index, weights=values[:, k], minlength=n) for k in range(values.shape[1])],
        axis=1,
    )


@dataclass
class FaceTerms:
    """Forward-pass intermediates. Corner c of a face has edges a[c] = P[c+1]-P[c]
    and b[c] = P[c+2]-P[c]; the arrays are indexed [face, corner]."""

    faces: np.ndarray
    n_vertices: int
    a: np.ndarray  # (F, 3, 3)
    b: np.ndarray
    n: np.ndarray  # (F, 3) unnormalized outward normal, |n| = 2 * face area
    s: np.ndarray  # (F,) |n|
    u: np.ndarray  # (F, 3) unit outward normal
    d: np.ndarray  # (F, 3) a.b per corner
    cot: np.ndarray  # (F, 3)
    theta: np.ndarray  # (F, 3)
    obtuse: np.ndarray  # (F,) index of obtuse corner or -1
    corner_area: np.ndarray  # (F, 3)
    # vertex accumulations
    area: np.ndarray  # (V,)
    lap: np.ndarray  # (V, 3) sum of cotangent-weighted edge vectors, = 2 A_v H_vec
    nsum: np.ndarray  # (V, 3) angle weighted outward normal sum
    angle_sum: np.ndarray  # (V,)


def face_terms(vertices: np.ndarray, faces: np.ndarray, n_vertices: int | None = None,
               check: bool = True) -> FaceTerms:
    nv = len(vertices) if n_vertices is None else n_vertices
    P = vertices[faces]  # (F, 3, 3)
    Pn1 = np.roll(P, -1, axis=1)
    Pn2 = np.roll(P, -2, axis=1)
    a = Pn1 - P
    b = Pn2 - P
    n = np.cross(a[:, 0], b[:, 0])
    s = np.linalg.norm(n, axis=1)
    if check and np.any(s <= 0):
        raise NearDegenerateTriangle("zero-area triangle")
    u = n / s[:, None]
    d = _dot(a, b)
    cot = d / s[:, None]
    if check and np.any(np.abs(cot) > _COT_LIMIT):
        raise NearDegenerateTriangle(
            f"cotangent weight {np.abs(cot).max():.3e} exceeds {_COT_LIMIT:.0e}"
        )
    theta = np.arctan2(s[:, None], d)

    la = _dot(a, a)
    lb = _dot(b, b)
    cot1 = np.roll(cot, -1, axis=1)  # cot at corner c+1
    cot2 = np.roll(cot, -2, axis=1)  # cot at corner c+2
    voronoi = (la * cot2 + lb * cot1) / 8.0
    obt = d < 0
    obtuse = np.where(obt.any(axis=1), np.argmax(obt, axis=1), -1)
    fa = 0.5 * s
    fallback = np.where(obt, 0.5, 0.25) * fa[:, None]
    corner_area = np.where((obtuse >= 0)[:, None], fallback, voronoi)

    lapc = cot2[:, :, None] * a + cot1[:, :, None] * b
    fi = faces.ravel()
    area = scatter(fi, corner_area.ravel(), nv)
    lap = scatter(fi, lapc.reshape(-1, 3), nv)
    nsum = scatter(fi, (theta[:, :, None] * u[:, None, :]).reshape(-1, 3), nv)
    angle_sum = scatter(fi, theta.ravel(), nv)
    return FaceTerms(faces, nv, a, b, n, s, u, d, cot, theta, obtuse, corner_area,
                     area, lap, nsum, angle_sum)

def backprop(ft: FaceTerms, g_area=None, g_lap=None, g_nsum=None, g_face_area=None) -> np.ndarray:
    """Vertex gradient of a scalar given its adjoints w.r.t. the accumulated
    vertex arrays and (optionally) the per-face areas."""
    F = len(ft.faces)
    fi = ft.faces
    ga = np.zeros_like(ft.a)
    gb = np.zeros_like(ft.b)
    gcot = np.zeros((F, 3))
    gtheta = np.zeros((F, 3))
    gs = np.zeros(F)
    gu = np.zeros((F, 3))

    if g_nsum is not None:
        gN = g_nsum[fi]  # (F, 3, 3)
        gtheta += _dot(gN, ft.u[:, None, :])
        gu += np.einsum("fc,fck->fk", ft.theta, gN)

    if g_lap is not None:
        gL = g_lap[fi]
        cot1 = np.roll(ft.cot, -1, axis=1)
        cot2 = np.roll(ft.cot, -2, axis=1)
        ga += cot2[:, :, None] * gL
        gb += cot1[:, :, None] * gL
        gcot += np.roll(_dot(gL, ft.a), 2, axis=1)  # contributes to corner c+2
        gcot += np.roll(_dot(gL, ft.b), 1, axis=1)  # contributes to corner c+1

    if g_area is not None:
        gA = g_area[fi]  # (F, 3)
        acute = ft.obtuse < 0
        if np.any(acute):
            cot1 = np.roll(ft.cot, -1, axis=1)
            cot2 = np.roll(ft.cot, -2, axis=1)
            w = np.where(acute[:, None], gA, 0.0)
            ga += (w * cot2 / 4.0)[:, :, None] * ft.a
            gb += (w * cot1 / 4.0)[:, :, None] * ft.b
            gcot += np.roll(w * _dot(ft.a, ft.a) / 8.0, 2, axis=1)
            gcot += np.roll(w * _dot(ft.b, ft.b) / 8.0, 1, axis=1)
        if np.any(~acute):
            obt_mask = np.arange(3)[None, :] == ft.obtuse[:, None]
            frac = np.where(obt_mask, 0.5, 0.25)
            gs += np.where(~acute, 0.5 * np.sum(frac * gA, axis=1), 0.0)

    if g_face_area is not None:
        gs += 0.5 * g_face_area

    # cot = d / s ; theta = atan2(s, d)
    s = ft.s[:, None]
    gd = gcot / s
    gs += np.sum(-gcot * ft.d / s**2, axis=1)
    r2 = s**2 + ft.d**2
    gs += np.sum(gtheta * ft.d / r2, axis=1)
    gd += -gtheta * s / r2
    # u = n / s ; s = |n|
    gn = (gu - _dot(gu, ft.u)[:, None] * ft.u) / ft.s[:, None]
    gn += gs[:, None] * ft.u
    # d = a . b
    ga += gd[:, :, None] * ft.b
    gb += gd[:, :, None] * ft.a
    # n = a0 x b0
    ga[:, 0] += np.cross(ft.b[:, 0], gn)
    gb[:, 0] += np.cross(gn, ft.a[:, 0])
    # a[c] = P[c+1] - P[c], b[c] = P[c+2] - P[c]
    gP = -(ga + gb) + np.roll(ga, 1, axis=1) + np.roll(gb, 2, axis=1)
    return scatter(fi.ravel(), gP.reshape(-1, 3), ft.n_vertices)


# ---------------------------------------------------------------------------
# public per-vertex geometry


@dataclass(frozen=True)
class VertexGeometry:
    area: np.ndarray
    inner_normal: np.ndarray
    mean_curvature: np.ndarray
    mean_curvature_vector: np.ndarray
    gauss_curvature: np.ndarray


def _vertex_fields(ft: FaceTerms):
    m = np.linalg.norm(ft.nsum, axis=1)
    nu = -ft.nsum / m[:, None]
    hvec = ft.lap / (2.0 * ft.area[:, None])
    H = _dot(hvec, nu)
    return nu, hvec, H, m


def geometry_arrays(vertices: np.ndarray, faces: np.ndarray) -> VertexGeometry:
    """Like :func:`compute_geometry` but for raw arrays (boundary allowed;
    values at boundary vertices are meaningless)."""
    ft = face_terms(np.asarray(vertices, float), np.asarray(faces))
    nu, hvec, H, _ = _vertex_fields(ft)
    K = (2.0 * np.pi - ft.angle_sum) / ft.area
    return VertexGeometry(ft.area, nu, H, hvec, K)


def compute_geometry(mesh: TriMesh) -> VertexGeometry:
    """Mixed areas, interior normals, mean and Gauss curvature at every vertex."""
    return geometry_arrays(mesh.vertices, mesh.faces)


def surface_area(mesh: TriMesh) -> float:
    p = mesh.vertices[mesh.faces]
    return float(0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1).sum())


def enclosed_volume(mesh: TriMesh) -> float:
    """Algebraic volume -1/3 * int nu . x, evaluated exactly on the flat faces."""
    p = mesh.vertices[mesh.faces]
    return float(_dot(p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)


def total_mean_curvature(mesh: TriMesh) -> float:
    """sum_v H_v A_v."""
    g = compute_geometry(mesh)
    return float(np.sum(g.mean_curvature * g.area))


def diameter(mesh: TriMesh) -> float:
    """Largest vertex-to-vertex distance (exact for the polyhedron)."""
    v = mesh.vertices
    if len(v) > 4:
        from scipy.spatial import ConvexHull

        v = v[ConvexHull(v).vertices]
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt(np.max(_dot(diff, diff))))


def willmore_integrand_mass(mesh: TriMesh) -> float:
    g = compute_geometry(mesh)
    return float(0.25 * np.sum(g.mean_curvature**2 * g.area))
