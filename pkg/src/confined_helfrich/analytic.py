"""Closed-form conformal disk immersions and pointwise identities for them.

Two patches are provided: the inverted catenoid (branched at the origin) and
an inverse stereographic chart of a round sphere. First derivatives are
closed form; second and third derivatives come from nested 6th-order central
differences of the first derivatives, with a step proportional to |z| on
branched patches.

Conventions: nu = d1 Phi x d2 Phi / |d1 Phi x d2 Phi|, H_vec = e^{-2 lambda} Lap Phi,
H = H_vec . nu, grad^perp Phi = (-d2 Phi, d1 Phi). On the sphere chart nu points
to the center, so H = 2 / radius.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.spatial import Delaunay

from .errors import EvaluationAtBranchPoint, QuadratureNonConvergence
from .geometry import geometry_arrays

# 6th-order central first-derivative stencil
_OFFS = np.array([-3, -2, -1, 1, 2, 3], float)
_WTS = np.array([-1, 9, -45, 45, -9, 1], float) / 60.0


def _cross(a, b):
    return np.cross(a, b)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


@dataclass(frozen=True)
class ConformalPatch:
    """A conformal map of the unit disk into R^3 with derivative evaluators.

    ``phi(z)`` maps (N, 2) -> (N, 3); ``dphi(z)`` returns (N, 2, 3) with
    ``dphi[:, j]`` the partial derivative along z_j.
    """

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    branch_at_origin: bool = False
    step_scale: float = 1e-4
    domain_radius: float = 1.0

    def _points(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, float))
        if self.branch_at_origin and np.any(np.linalg.norm(z, axis=1) == 0):
            raise EvaluationAtBranchPoint(f"{self.name}: derivative requested at the branch point")
        return z

    def _steps(self, z: np.ndarray) -> np.ndarray:
        if self.branch_at_origin:
            return self.step_scale * np.linalg.norm(z, axis=1)
        return np.full(len(z), self.step_scale)

    def evaluate(self, z) -> np.ndarray:
        return self.phi(np.atleast_2d(np.asarray(z, float)))

    def first(self, z) -> np.ndarray:
        return self.dphi(self._points(z))

    def _diff(self, f, z, h) -> np.ndarray:
        """Central 6th-order derivatives of f along both axes: (N, 2, ...)."""
        out = []
        for j in range(2):
            acc = 0.0
            for o, w in zip(_OFFS, _WTS):
                zz = z.copy()
                zz[:, j] += o * h
                acc = acc + w * f(zz)
            out.append(acc / h.reshape((-1,) + (1,) * (np.ndim(acc) - 1)))
        return np.stack(out, axis=1)

    def second(self, z) -> np.ndarray:
        """(N, 2, 2, 3); [:, k, j] = d_k d_j Phi (symmetrized)."""
        z = self._points(z)
        h = self._steps(z)
        d2 = self._diff(self.dphi, z, h)
        return 0.5 * (d2 + d2.transpose(0, 2, 1, 3))

    def third(self, z) -> np.ndarray:
        """(N, 2, 2, 2, 3); [:, l, k, j] = d_l d_k d_j Phi by nested differences."""
        z = self._points(z)
        h = self._steps(z)
        d3 = self._diff(lambda zz: self._diff(self.dphi, zz, h), z, h)
        # symmetrize over the three slots
        perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
        return sum(d3.transpose(0, *(p + 1 for p in perm), 4) for perm in perms) / 6.0

    def conformal_factor(self, z) -> np.ndarray:
        """lambda = 1/2 log |d1 Phi|^2."""
        d = self.first(z)
        return 0.5 * np.log(_dot(d[:, 0], d[:, 0]))

    def conformality_residual(self, z) -> np.ndarray:
        """max(| |d1|^2 - |d2|^2 |, 2 |d1.d2|) / |d1|^2 per sample."""
        d = self.first(z)
        e1 = _dot(d[:, 0], d[:, 0])
        e2 = _dot(d[:, 1], d[:, 1])
        return np.maximum(np.abs(e1 - e2), 2 * np.abs(_dot(d[:, 0], d[:, 1]))) / e1


# ---------------------------------------------------------------------------
# the two patches


def _catenoid_phi(z):
    x, y = z[:, 0], z[:, 1]
    s = x * x + y * y
    with np.errstate(divide="ignore", invalid="ignore"):
        ell = np.where(s > 0, np.log(s), 0.0)
    P = 1 + s
    Q = P * P + s * ell * ell
    return np.c_[x * P / Q, y * P / Q, -s * ell / Q]


def _catenoid_dphi(z):
    x, y = z[:, 0], z[:, 1]
    s = x * x + y * y
    ell = np.log(s)
    P = 1 + s
    S = s * ell
    Q = P * P + s * ell * ell
    dQ = 2 * P + ell * ell + 2 * ell
    dPQ = (Q - P * dQ) / Q**2  # d/ds (P/Q)
    dSQ = ((ell + 1) * Q - S * dQ) / Q**2  # d/ds (S/Q)
    PQ = P / Q
    d1 = np.c_[PQ + 2 * x * x * dPQ, 2 * x * y * dPQ, -2 * x * dSQ]
    d2 = np.c_[2 * x * y * dPQ, PQ + 2 * y * y * dPQ, -2 * y * dSQ]
    return np.stack([d1, d2], axis=1)


def inverted_catenoid() -> ConformalPatch:
    """Image of the catenoid under inversion in the unit sphere, branched at z = 0:

        Phi(z) = (z1 (1+r^2), z2 (1+r^2), -r^2 log r^2) / ((1+r^2)^2 + r^2 (log r^2)^2).
    """
    return ConformalPatch("inverted_catenoid", _catenoid_phi, _catenoid_dphi, branch_at_origin=True)


def sphere_patch(radius: float = 1.0) -> ConformalPatch:
    """Inverse stereographic chart R (2 z1, 2 z2, r^2 - 1) / (1 + r^2) onto the
    lower hemisphere, oriented so that nu points to the center."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    R = float(radius)

    def phi(z):
        s = _dot(z, z)
        return R * np.c_[2 * z[:, 0], 2 * z[:, 1], s - 1] / (1 + s)[:, None]

    def dphi(z):
        x, y = z[:, 0], z[:, 1]
        s = x * x + y * y
        D = (1 + s) ** 2
        d1 = np.c_[2 * (1 + s) - 4 * x * x, -4 * x * y, 4 * x] / D[:, None]
        d2 = np.c_[-4 * x * y, 2 * (1 + s) - 4 * y * y, 4 * y] / D[:, None]
        return R * np.stack([d1, d2], axis=1)

    # nested differences of exact first derivatives: h = 2e-3 balances the
    # h^6 truncation against eps / h^2 round-off in the third derivatives
    return ConformalPatch(f"sphere({R:g})", phi, dphi, step_scale=2e-3)


# ---------------------------------------------------------------------------
# pointwise geometry


@dataclass(frozen=True)
class _Local:
    d1: np.ndarray  # (N, 2, 3)
    d2: np.ndarray  # (N, 2, 2, 3)
    d3: np.ndarray  # (N, 2, 2, 2, 3)
    e2l: np.ndarray  # e^{2 lambda}
    nu: np.ndarray
    dnu: np.ndarray  # (N, 2, 3)
    lapnu: np.ndarray  # (N, 3)
    hvec: np.ndarray
    dhvec: np.ndarray  # (N, 2, 3)
    H: np.ndarray
    dH: np.ndarray  # (N, 2)
    K: np.ndarray


def _local(patch: ConformalPatch, z) -> _Local:
    z = patch._points(z)
    d1 = patch.first(z)
    d2 = patch.second(z)
    d3 = patch.third(z)
    p1, p2 = d1[:, 0], d1[:, 1]
    e2l = _dot(p1, p1)
    n = _cross(p1, p2)
    m = np.linalg.norm(n, axis=1)
    nu = n / m[:, None]
    # first and second derivatives of n = p1 x p2
    dn = np.stack([_cross(d2[:, j, 0], p2) + _cross(p1, d2[:, j, 1]) for j in range(2)], axis=1)
    dm = _dot(dn, nu[:, None, :])
    dnu = (dn - dm[..., None] * nu[:, None, :]) / m[:, None, None]
    lapnu = np.zeros_like(nu)
    for j in range(2):
        nn = (_cross(d3[:, j, j, 0], p2) + 2 * _cross(d2[:, j, 0], d2[:, j, 1])
              + _cross(p1, d3[:, j, j, 1]))
        mm = _dot(dnu[:, j], dn[:, j]) + _dot(nu, nn)
        lapnu += (nn - mm[:, None] * nu - 2 * dm[:, j, None] * dnu[:, j]) / m[:, None]
    lap = d2[:, 0, 0] + d2[:, 1, 1]
    hvec = lap / e2l[:, None]
    dlap = d3[:, :, 0, 0] + d3[:, :, 1, 1]  # (N, 2, 3)
    de2l = 2 * _dot(p1[:, None, :], d2[:, :, 0])  # d_j |p1|^2
    dhvec = dlap / e2l[:, None, None] - (de2l / e2l[:, None] ** 2)[..., None] * lap[:, None, :]
    H = _dot(hvec, nu)
    dH = _dot(dhvec, nu[:, None, :]) + _dot(hvec[:, None, :], dnu)
    II = _dot(d2, nu[:, None, None, :])
    K = (II[:, 0, 0] * II[:, 1, 1] - II[:, 0, 1] ** 2) / e2l**2
    return _Local(d1, d2, d3, e2l, nu, dnu, lapnu, hvec, dhvec, H, dH, K)


def mean_curvature(patch: ConformalPatch, z) -> np.ndarray:
    return _local(patch, z).H


def gauss_curvature(patch: ConformalPatch, z) -> np.ndarray:
    return _local(patch, z).K


def gauss_map(patch: ConformalPatch, z) -> np.ndarray:
    d = patch.first(z)
    n = _cross(d[:, 0], d[:, 1])
    return n / np.linalg.norm(n, axis=1)[:, None]


def _w(L: _Local) -> np.ndarray:
    """W_j = 1/2 (2 d_j H_vec - 3 H d_j nu + H_vec x (grad^perp nu)_j)."""
    perp = np.stack([-L.dnu[:, 1], L.dnu[:, 0]], axis=1)
    return 0.5 * (2 * L.dhvec - 3 * L.H[:, None, None] * L.dnu
                  + _cross(L.hvec[:, None, :], perp))


def w_vector(patch: ConformalPatch, z) -> np.ndarray:
    """(N, 2, 3): the pair (W_1, W_2)."""
    return _w(_local(patch, z))


@dataclass(frozen=True)
class PatchDiagnostics:
    conformality: np.ndarray
    W: np.ndarray
    w_dot_grad: np.ndarray  # relative |W . grad Phi|
    w_cross_residual: np.ndarray  # relative |grad Phi x W - <grad H, grad^perp Phi>|
    H: np.ndarray
    K: np.ndarray


def diagnostics(patch: ConformalPatch, z) -> PatchDiagnostics:
    L = _local(patch, z)
    W = _w(L)
    p1, p2 = L.d1[:, 0], L.d1[:, 1]
    # size of the individual terms of W (W itself vanishes on round spheres)
    terms = (np.linalg.norm(L.dhvec, axis=(1, 2))
             + np.linalg.norm(L.hvec, axis=1) * np.linalg.norm(L.dnu, axis=(1, 2)))
    scale = terms * np.sqrt(L.e2l)
    wdot = _dot(W[:, 0], p1) + _dot(W[:, 1], p2)
    lhs = _cross(p1, W[:, 0]) + _cross(p2, W[:, 1])
    rhs = L.dH[:, 1, None] * p1 - L.dH[:, 0, None] * p2
    ref = scale
    conf = np.maximum(np.abs(L.e2l - _dot(p2, p2)), 2 * np.abs(_dot(p1, p2))) / L.e2l
    with np.errstate(invalid="ignore", divide="ignore"):
        wd = np.where(scale > 0, np.abs(wdot) / scale, np.abs(wdot))
        wc = np.where(ref > 0, np.linalg.norm(lhs - rhs, axis=1) / ref,
                      np.linalg.norm(lhs - rhs, axis=1))
    return PatchDiagnostics(conf, W, wd, wc, L.H, L.K)


def laplace_normal_residual(patch: ConformalPatch, z) -> np.ndarray:
    """Lap nu - (grad^perp nu x grad nu - div[H_vec x grad^perp Phi]) per sample (N, 3).

    grad^perp nu x grad nu = 2 d1 nu x d2 nu and
    div[H_vec x grad^perp Phi] = -d1 H_vec x d2 Phi + d2 H_vec x d1 Phi.
    """
    L = _local(patch, z)
    p1, p2 = L.d1[:, 0], L.d1[:, 1]
    rhs = 2 * _cross(L.dnu[:, 0], L.dnu[:, 1]) - (
        -_cross(L.dhvec[:, 0], p2) + _cross(L.dhvec[:, 1], p1)
    )
    return L.lapnu - rhs


# ---------------------------------------------------------------------------
# radial analysis of the third component of the inverted catenoid


@lru_cache(maxsize=None)
def _radial_functions():
    import sympy as sp

    r = sp.symbols("r", positive=True)
    f3 = -(r**2) * sp.log(r**2) / ((1 + r**2) ** 2 + r**2 * sp.log(r**2) ** 2)
    g = sp.diff(f3, r, 2) + sp.diff(f3, r) / r
    gp = sp.diff(g, r)
    return {
        "f3": sp.lambdify(r, f3, "numpy"),
        "g": sp.lambdify(r, g, "numpy"),
        "gp": sp.lambdify(r, gp, "numpy"),
        "rgp_mp": sp.lambdify(r, r * gp, "mpmath"),
    }


def catenoid_g(r) -> np.ndarray:
    """g(r) = f3'' + f3'/r, the Laplacian of the radial third component."""
    return _radial_functions()["g"](np.asarray(r, float))


def catenoid_g_prime(r) -> np.ndarray:
    return _radial_functions()["gp"](np.asarray(r, float))


def catenoid_g_limit(radii=(1e-2, 5e-3, 2.5e-3)) -> float:
    """Extrapolated lim_{r->0} r g'(r).

    r g'(r) = L + r^2 (a log^3 r + b log^2 r) + ... near 0 (expand f3 = -s log s
    + s^2 log^3 s + ... with s = r^2); the two leading correction terms are
    eliminated from values at the three radii (evaluated at 30 digits).
    """
    import mpmath

    f = _radial_functions()["rgp_mp"]
    with mpmath.workdps(30):
        v = np.array([float(f(mpmath.mpf(x))) for x in radii])
    R = np.asarray(radii, float)
    lg = np.log(R)
    if len(R) < 3:
        raise ValueError("need three radii")
    B = np.c_[np.ones_like(R), R**2 * lg**3, R**2 * lg**2]
    coef, *_ = np.linalg.lstsq(B, v, rcond=None)
    return float(coef[0])


def third_derivative_mass(eps: float, outer: float = 0.5) -> float:
    """int_{eps < |z| < outer} |grad Lap Phi_3|^2 dz = 2 pi int g'(r)^2 r dr,
    integrated in log r with adaptive quadrature."""
    if not 1e-6 < eps < outer:
        raise ValueError("eps must lie in (1e-6, outer)")
    gp = _radial_functions()["gp"]

    def f(t):
        r = np.exp(t)
        return gp(r) ** 2 * r * r

    val, err = integrate.quad(f, np.log(eps), np.log(outer), limit=200, epsabs=0, epsrel=1e-10)
    if not np.isfinite(val) or err > 1e-6 * max(abs(val), 1.0):
        raise QuadratureNonConvergence(f"quadrature error estimate {err:.3e} for value {val:.6g}")
    return float(2 * np.pi * val)


# ---------------------------------------------------------------------------
# triangulations of patches


@dataclass(frozen=True)
class MeshFragment:
    """Open triangulated piece of a patch image. ``boundary`` flags vertices on
    the outer rim or the inner cutoff circle."""

    vertices: np.ndarray
    faces: np.ndarray
    params: np.ndarray
    boundary: np.ndarray


def patch_to_mesh(patch: ConformalPatch, resolution: int, inner_cutoff: float = 0.0,
                  outer_radius: float | None = None) -> MeshFragment:
    """Triangulate the image of the disk (annulus when ``inner_cutoff`` > 0) of
    parameter radius ``outer_radius`` using concentric rings of spacing
    outer_radius / resolution, then Delaunay in the parameter plane.

    Faces are oriented so the mesh normal is -nu (outward convention)."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if patch.branch_at_origin and inner_cutoff <= 0:
        raise ValueError("branched patches need a positive inner cutoff")
    R = patch.domain_radius if outer_radius is None else outer_radius
    h = R / resolution
    r0 = inner_cutoff
    n_rings = max(1, int(round((R - r0) / h)))
    radii = np.linspace(r0, R, n_rings + 1)
    pts = [] if r0 > 0 else [np.zeros((1, 2))]
    bnd = [] if r0 > 0 else [np.zeros(1, bool)]
    for k, rr in enumerate(radii):
        if rr == 0:
            continue
        # 6k aligned points on ring k: a near-hexagonal lattice with valence 6
        m = 6 * max(1, int(round(2 * np.pi * rr / (6 * h))))
        t = np.arange(m) * 2 * np.pi / m
        pts.append(rr * np.c_[np.cos(t), np.sin(t)])
        bnd.append(np.full(m, k == 0 or k == len(radii) - 1))
    P = np.vstack(pts)
    B = np.concatenate(bnd)
    tri = Delaunay(P).simplices
    c = P[tri].mean(axis=1)
    keep = np.linalg.norm(c, axis=1) > r0 * (1 + 1e-9) if r0 > 0 else np.ones(len(tri), bool)
    tri = tri[keep]
    # counter-clockwise in the parameter plane
    e1 = P[tri[:, 1]] - P[tri[:, 0]]
    e2 = P[tri[:, 2]] - P[tri[:, 0]]
    flip = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    # face normals point against nu (outward in the mesh convention)
    faces = tri[:, [0, 2, 1]]
    used = np.unique(faces)
    remap = -np.ones(len(P), int)
    remap[used] = np.arange(len(used))
    return MeshFragment(patch.evaluate(P[used]), remap[faces], P[used], B[used])


def fragment_geometry(frag: MeshFragment):
    return geometry_arrays(frag.vertices, frag.faces)


def interior_willmore_mass(frag: MeshFragment) -> float:
    """1/4 sum H^2 A over vertices off the fragment boundary."""
    g = fragment_geometry(frag)
    inner = ~frag.boundary
    return float(0.25 * np.sum(g.mean_curvature[inner] ** 2 * g.area[inner]))


def interpolation_error(patch: ConformalPatch, frag: MeshFragment) -> float:
    """Max distance between face centroids and the patch image of the
    parameter centroid (the chordal error of the piecewise-linear surface)."""
    c_param = frag.params[frag.faces].mean(axis=1)
    c_mesh = frag.vertices[frag.faces].mean(axis=1)
    return float(np.max(np.linalg.norm(patch.evaluate(c_param) - c_mesh, axis=1)))
