"""Closed oriented triangle meshes, canonical constructors and quality checks.

Faces are wound counter-clockwise as seen from outside, so the geometric
face normal points outward. Curvature code downstream flips it to get the
interior normal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, cKDTree

from .errors import (
    DegenerateFace,
    InconsistentOrientation,
    MeshError,
    NeckTooLarge,
    NonManifoldEdge,
)

DEGENERATE_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Closed, consistently oriented triangle mesh.

    Instances are immutable; ``vertices`` and ``faces`` are read-only arrays.
    Use :func:`build_mesh` to construct a validated mesh.
    """

    vertices: np.ndarray
    faces: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, shape (E, 2), each row sorted."""
        return _edge_table(self.faces)[0]

    @cached_property
    def edge_faces(self) -> np.ndarray:
        """(E, 2) indices of the two faces sharing each edge of :attr:`edges`."""
        return _edge_table(self.faces)[1]

    @cached_property
    def neighbors(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR-style one-ring adjacency: (indptr, indices)."""
        e = self.edges
        n = self.n_vertices
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
        adj.sort_indices()
        return adj.indptr, adj.indices

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    def moved(self, vertices: np.ndarray) -> "TriMesh":
        """Same connectivity, new positions. Skips the combinatorial checks."""
        v = np.array(vertices, dtype=float, copy=True)
        if v.shape != self.vertices.shape:
            raise MeshError("vertex array shape changed")
        v.setflags(write=False)
        out = TriMesh(v, self.faces)
        # connectivity caches carry over
        for key in ("edges", "edge_faces", "neighbors"):
            if key in self.__dict__:
                out.__dict__[key] = self.__dict__[key]
        return out

    def scaled(self, t: float, center=None) -> "TriMesh":
        c = np.zeros(3) if center is None else np.asarray(center, float)
        return self.moved(c + t * (self.vertices - c))

    def translated(self, shift) -> "TriMesh":
        return self.moved(self.vertices + np.asarray(shift, float))


def _edge_table(faces: np.ndarray):
    he = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    he_face = np.tile(np.arange(len(faces)), 3)
    key = np.sort(he, axis=1)
    uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if np.any(counts != 2):
        bad = uniq[counts != 2][0]
        raise NonManifoldEdge(
            f"edge {tuple(int(i) for i in bad)} is shared by "
            f"{int(counts[counts != 2][0])} faces (expected 2)"
        )
    order = np.argsort(inv, kind="stable")
    ef = he_face[order].reshape(-1, 2)
    return uniq, ef


def _check_orientation(faces: np.ndarray) -> None:
    he = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    _, counts = np.unique(he, axis=0, return_counts=True)
    if np.any(counts > 1):
        raise InconsistentOrientation(
            "a directed edge is used twice; neighboring faces disagree on winding"
        )


def face_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    p = vertices[faces]
    return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


def build_mesh(vertices, faces, *, degenerate_area: float = DEGENERATE_AREA) -> TriMesh:
    """Validate raw arrays and return a :class:`TriMesh`.

    Raises NonManifoldEdge, InconsistentOrientation or DegenerateFace.
    """
    v = np.array(vertices, dtype=float, copy=True)
    f = np.array(faces, dtype=np.int64, copy=True)
    if v.ndim != 2 or v.shape[1] != 3:
        raise MeshError("vertices must have shape (n, 3)")
    if f.ndim != 2 or f.shape[1] != 3 or len(f) == 0:
        raise MeshError("faces must have shape (m, 3)")
    if not np.all(np.isfinite(v)):
        raise MeshError("vertex positions must be finite")
    if f.min() < 0 or f.max() >= len(v):
        raise MeshError("face index out of range")
    if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
        raise DegenerateFace("face repeats a vertex")
    _edge_table(f)
    _check_orientation(f)
    area = face_areas(v, f)
    if np.any(area <= degenerate_area):
        i = int(np.argmin(area))
        raise DegenerateFace(f"face {i} has area {area[i]:.3e}")
    v.setflags(write=False)
    f.setflags(write=False)
    return TriMesh(v, f)


def _orient_outward(vertices: np.ndarray, faces: np.ndarray, center) -> np.ndarray:
    """Flip faces whose normal points toward ``center`` (star-shaped pieces only)."""
    p = vertices[faces]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    out = p.mean(axis=1) - center
    flip = np.einsum("ij,ij->i", n, out) < 0
    faces = faces.copy()
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return faces


# ---------------------------------------------------------------------------
# constructors

_PHI = (1.0 + 5.0**0.5) / 2.0
_ICO_V = np.array(
    [
        [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
        [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
        [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
    ],
    dtype=float,
)
_ICO_F = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def _subdivide(v: np.ndarray, f: np.ndarray):
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    uniq, inv = np.unique(np.sort(e, axis=1), axis=0, return_inverse=True)
    inv = inv.ravel()
    mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    mid /= np.linalg.norm(mid, axis=1)[:, None]
    nf = len(f)
    ab = len(v) + inv[:nf]
    bc = len(v) + inv[nf : 2 * nf]
    ca = len(v) + inv[2 * nf :]
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    new_f = np.concatenate(
        [
            np.stack([a, ab, ca], 1),
            np.stack([b, bc, ab], 1),
            np.stack([c, ca, bc], 1),
            np.stack([ab, bc, ca], 1),
        ]
    )
    return np.vstack([v, mid]), new_f


def _unit_icosphere(subdivisions: int):
    v = _ICO_V / np.linalg.norm(_ICO_V, axis=1)[:, None]
    f = _ICO_F.copy()
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
    return v, f


def icosphere(radius: float = 1.0, subdivisions: int = 3) -> TriMesh:
    """Geodesic sphere: icosahedron refined ``subdivisions`` times and projected.

    ``F = 20 * 4**subdivisions``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0 <= subdivisions <= 8:
        raise ValueError("subdivisions must be in [0, 8]")
    v, f = _unit_icosphere(int(subdivisions))
    return build_mesh(radius * v, f)


def ellipsoid(semi_axes, subdivisions: int = 3) -> TriMesh:
    """Icosphere stretched along the coordinate axes."""
    s = np.asarray(semi_axes, dtype=float)
    if s.shape != (3,) or np.any(s <= 0):
        raise ValueError("semi_axes must be three positive numbers")
    v, f = _unit_icosphere(int(subdivisions))
    return build_mesh(v * s, f)


def torus(R: float = 1.0, r: float = 0.4, n_major: int = 32, n_minor: int = 16) -> TriMesh:
    """Structured torus around the z axis (genus-1 fixture)."""
    u = 2 * np.pi * np.arange(n_major) / n_major
    w = 2 * np.pi * np.arange(n_minor) / n_minor
    uu, ww = np.meshgrid(u, w, indexing="ij")
    v = np.stack(
        [(R + r * np.cos(ww)) * np.cos(uu), (R + r * np.cos(ww)) * np.sin(uu), r * np.sin(ww)],
        -1,
    ).reshape(-1, 3)
    idx = lambda i, j: (i % n_major) * n_minor + (j % n_minor)  # noqa: E731
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            faces += [[a, b, c], [a, c, d]]
    return build_mesh(v, np.array(faces))


def jittered(mesh: TriMesh, amplitude: float, seed: int = 0) -> TriMesh:
    """Random perturbation of every vertex, amplitude relative to mean edge length."""
    rng = np.random.default_rng(seed)
    e = mesh.edges
    h = np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1).mean()
    v = mesh.vertices + amplitude * h * rng.uniform(-1, 1, size=mesh.vertices.shape)
    return build_mesh(v, mesh.faces)


def dimpled_sphere(radius: float, subdivisions: int, depth: float, width: float = 0.4,
                   sharpness: float = 0.05) -> TriMesh:
    """Sphere with a flat-bottomed inward pocket around the north pole.

    Radial graph r(theta) = radius * (1 - depth * s(theta)) with s a logistic
    step of half-width ``width`` (radians) and edge ``sharpness``.
    """
    if not 0 <= depth < 1:
        raise ValueError("depth must be in [0, 1)")
    v, f = _unit_icosphere(int(subdivisions))
    th = np.arccos(np.clip(v[:, 2], -1, 1))
    step = 1.0 / (1.0 + np.exp(-(width - th) / sharpness))
    return build_mesh(v * (radius * (1 - depth * step))[:, None], f)


def _finger_profile(R, join, lip, depth, n=2000):
    # (rho, z) polyline: lip arc tangent to the sphere, vertical wall, round bottom
    ctr = (R - lip) * np.array([np.sin(join), np.cos(join)])
    psi = np.linspace(np.pi / 2 - join, np.pi, n)
    arc = ctr + lip * np.c_[np.cos(psi), np.sin(psi)]
    rw, z0 = arc[-1]
    wall = np.c_[np.full(n, rw), np.linspace(z0, z0 - depth, n)]
    b = np.linspace(0, np.pi / 2, n)
    cap = np.c_[rw * np.cos(b), (z0 - depth) - rw * np.sin(b)]
    return np.vstack([arc, wall[1:], cap[1:]])


def invaginated_sphere(radius: float, subdivisions: int, join_angle: float, lip_radius: float,
                       depth: float, stretch: float = 1.3) -> TriMesh:
    """Sphere with a tubular finger pushed inward at the north pole.

    The finger is a surface of revolution: a lip of radius ``lip_radius``
    leaving the sphere at polar angle ``join_angle``, a cylindrical wall of
    length ``depth`` and a hemispherical bottom. Icosphere vertices in a polar
    cap are redistributed along the profile by arclength, so the mesh keeps
    the icosphere connectivity.
    """
    rw = (radius - lip_radius) * np.sin(join_angle) - lip_radius
    if rw <= 0 or depth < 0:
        raise ValueError("finger wall radius must be positive")
    bottom = (radius - lip_radius) * np.cos(join_angle) - depth - rw
    if bottom <= -radius:
        raise ValueError("finger does not fit inside the sphere")
    v, f = _unit_icosphere(int(subdivisions))
    th = np.arccos(np.clip(v[:, 2], -1, 1))
    ph = np.arctan2(v[:, 1], v[:, 0])
    prof = _finger_profile(radius, join_angle, lip_radius, depth)
    length = np.linalg.norm(np.diff(prof, axis=0), axis=1).sum()
    tm = min(np.pi - 0.4, max(join_angle + 0.2, (length + radius * join_angle) / (stretch * radius)))
    arc_t = np.linspace(tm, join_angle, 400)
    curve = np.vstack([radius * np.c_[np.sin(arc_t), np.cos(arc_t)], prof[1:]])
    cs = np.r_[0.0, np.cumsum(np.linalg.norm(np.diff(curve, axis=0), axis=1))]
    rho = radius * np.sin(th)
    z = radius * np.cos(th)
    cap = th < tm
    s = cs[-1] * (tm - th[cap]) / tm
    rho[cap] = np.interp(s, cs, curve[:, 0])
    z[cap] = np.interp(s, cs, curve[:, 1])
    return build_mesh(np.c_[rho * np.cos(ph), rho * np.sin(ph), z], f)


# ---------------------------------------------------------------------------
# sphere lattice joined by catenoidal necks

_NECK_SAMPLES = 16


def _frame(axis: np.ndarray):
    # fixed per-axis frame so both ends of a neck share ring phases
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(axis, u)


def _lattice_tree(N: int):
    """Comb spanning tree over the N^3 subcubes in lexicographic order."""
    edges = []
    for i in range(N):
        for j in range(N):
            for k in range(N):
                if i + 1 < N:
                    edges.append(((i, j, k), (i + 1, j, k), 0))
                if i == 0 and j + 1 < N:
                    edges.append(((i, j, k), (i, j + 1, k), 1))
                if i == 0 and j == 0 and k + 1 < N:
                    edges.append(((i, j, k), (i, j, k + 1), 2))
    return edges


def _holed_sphere_points(r, holes, hole_rho, base_dirs, base_spacing):
    """Points on a sphere of radius r with graded rings around each hole.

    Returns points (relative to center) and, per hole, the indices of its
    boundary ring in sample order.
    """
    pts = []
    rings = []
    alpha_h = np.arcsin(hole_rho / r)
    growth = 1.0 + 2.0 * np.pi / _NECK_SAMPLES
    excl = []
    for axis in holes:
        u, w = _frame(axis)
        alphas = [alpha_h]
        while r * alphas[-1] * 2 * np.pi / _NECK_SAMPLES < base_spacing and alphas[-1] < 0.5:
            alphas.append(alphas[-1] * growth)
        excl.append((axis, alphas[-1] + 0.6 * base_spacing / r))
        for j, a in enumerate(alphas):
            n = _NECK_SAMPLES
            phase = 0.0 if j % 2 == 0 else np.pi / n
            phi = 2 * np.pi * np.arange(n) / n + phase
            ring = r * (
                np.cos(a) * axis[None, :]
                + np.sin(a) * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * w)
            )
            if j == 0:
                rings.append(np.arange(len(pts), len(pts) + n))
            pts.extend(ring)
    keep = np.ones(len(base_dirs), bool)
    for axis, lim in excl:
        keep &= base_dirs @ axis < np.cos(lim)
    pts.extend(r * base_dirs[keep])
    return np.array(pts), rings


def sphere_lattice_with_necks(N: int, neck_size: float, subdivisions: int = 3) -> TriMesh:
    """N^3 touching spheres of radius 1/(4N) joined into one genus-0 surface.

    The spheres sit in the subcubes of a cube of side 1/2 centered at the
    origin. Neighbors along a spanning tree are joined by a catenoid of waist
    radius ``neck_size`` that meets each sphere tangentially, so the surface
    is C^1 across the seams. Area tends to N*pi/4 and the Helfrich energy at
    H0 = 8N tends to zero as ``neck_size`` -> 0.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    r = 1.0 / (4 * N)
    a = float(neck_size)
    if not 0 < a < 1.0 / (8 * N):
        raise NeckTooLarge(f"neck_size must be in (0, {1.0 / (8 * N):.4g}) for N={N}")

    rho_h = np.sqrt(a * r)  # tangency of catenoid and sphere
    T = np.arccosh(np.sqrt(r / a))
    half = a * T
    spacing = 2.0 * (half + np.sqrt(r * r - rho_h * rho_h))

    tree = _lattice_tree(N)
    axes = np.eye(3)
    holes: dict[tuple, list] = {}
    for p, q, ax in tree:
        holes.setdefault(p, []).append(axes[ax])
        holes.setdefault(q, []).append(-axes[ax])

    base_dirs, base_faces = _unit_icosphere(subdivisions)
    e0 = base_faces[0]
    base_spacing = r * np.linalg.norm(base_dirs[e0[0]] - base_dirs[e0[1]])

    all_v, all_f = [], []
    ring_index: dict[tuple, dict] = {}
    offset = 0
    origin = -0.5 * (N - 1) * spacing
    for i in range(N):
        for j in range(N):
            for k in range(N):
                key = (i, j, k)
                center = origin + spacing * np.array([i, j, k], float)
                hl = holes.get(key, [])
                pts, rings = _holed_sphere_points(r, hl, rho_h, base_dirs, base_spacing)
                hull = ConvexHull(pts)
                if len(np.unique(hull.simplices)) != len(pts):
                    raise MeshError("hull dropped sphere sample points")
                f = hull.simplices
                ring_sets = [set(rg.tolist()) for rg in rings]
                drop = np.zeros(len(f), bool)
                for rs in ring_sets:
                    drop |= np.array([set(t.tolist()) <= rs for t in f])
                f = _orient_outward(pts, f[~drop], np.zeros(3))
                all_v.append(pts + center)
                all_f.append(f + offset)
                ring_index[key] = {
                    tuple(ax.astype(int)): rg + offset for ax, rg in zip(hl, rings)
                }
                offset += len(pts)

    n_int = max(2, int(np.ceil(2 * T / (2 * np.pi / _NECK_SAMPLES))))
    ts = np.linspace(-T, T, n_int + 1)
    for p, q, ax in tree:
        axis = axes[ax]
        ring_p = ring_index[p][tuple(axis.astype(int))]
        ring_q = ring_index[q][tuple((-axis).astype(int))]
        cp = origin + spacing * np.array(p, float)
        mid = cp + 0.5 * spacing * axis
        u, w = _frame(axis)
        phi = 2 * np.pi * np.arange(_NECK_SAMPLES) / _NECK_SAMPLES
        stacked = np.vstack(all_v)
        target = mid + half * axis + rho_h * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * w)
        dist = np.linalg.norm(stacked[ring_q][None, :, :] - target[:, None, :], axis=2)
        # ring_q was sampled in the frame of -axis; reorder to ring_p phases
        ring_q = ring_q[np.argmin(dist, axis=1)]
        ring_rows = [ring_p]
        for t in ts[1:-1]:
            rad = a * np.cosh(t)
            ring = mid + a * t * axis + rad * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * w)
            all_v.append(ring)
            ring_rows.append(np.arange(offset, offset + _NECK_SAMPLES))
            offset += _NECK_SAMPLES
        ring_rows.append(ring_q)
        strip = []
        n = _NECK_SAMPLES
        for r0, r1 in zip(ring_rows[:-1], ring_rows[1:]):
            for m in range(n):
                m1 = (m + 1) % n
                strip += [[r0[m], r1[m], r1[m1]], [r0[m], r1[m1], r0[m1]]]
        strip = np.array(strip)
        # orient away from the neck axis
        v_all = np.vstack(all_v)
        tri = v_all[strip]
        nrm = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        c = tri.mean(axis=1) - mid
        radial = c - np.outer(c @ axis, axis)
        flip = np.einsum("ij,ij->i", nrm, radial) < 0
        strip[flip] = strip[flip][:, [0, 2, 1]]
        all_f.append(strip)

    return build_mesh(np.vstack(all_v), np.vstack(all_f))


# ---------------------------------------------------------------------------
# quality report


@dataclass(frozen=True)
class MeshQualityReport:
    min_face_area: float
    max_face_area: float
    min_angle: float
    max_valence: int
    euler_characteristic: int
    genus: int
    components: int
    self_intersecting: bool


def _tri_angles(vertices, faces):
    p = vertices[faces]
    out = np.empty((len(faces), 3))
    for c in range(3):
        a = p[:, (c + 1) % 3] - p[:, c]
        b = p[:, (c + 2) % 3] - p[:, c]
        out[:, c] = np.arctan2(
            np.linalg.norm(np.cross(a, b), axis=1), np.einsum("ij,ij->i", a, b)
        )
    return out


def _segments_hit_triangles(p0, p1, t0, t1, t2, eps=1e-12):
    """Vectorized segment/triangle crossing test (Moller-Trumbore)."""
    d = p1 - p0
    e1, e2 = t1 - t0, t2 - t0
    h = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(det) > eps
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = p0 - t0
    u = inv * np.einsum("ij,ij->i", s, h)
    q = np.cross(s, e1)
    v = inv * np.einsum("ij,ij->i", d, q)
    t = inv * np.einsum("ij,ij->i", e2, q)
    return ok & (u > eps) & (v > eps) & (u + v < 1 - eps) & (t > eps) & (t < 1 - eps)


def self_intersects(mesh: TriMesh) -> bool:
    """True if two faces without a shared vertex cross each other."""
    v, f = mesh.vertices, mesh.faces
    p = v[f]
    cen = p.mean(axis=1)
    rad = np.linalg.norm(p - cen[:, None, :], axis=2).max(axis=1)
    tree = cKDTree(cen)
    pairs = tree.query_pairs(2.0 * rad.max(), output_type="ndarray")
    if len(pairs) == 0:
        return False
    i, j = pairs[:, 0], pairs[:, 1]
    close = np.linalg.norm(cen[i] - cen[j], axis=1) <= rad[i] + rad[j]
    i, j = i[close], j[close]
    shared = (f[i][:, :, None] == f[j][:, None, :]).any(axis=(1, 2))
    i, j = i[~shared], j[~shared]
    if len(i) == 0:
        return False
    for a, b in ((i, j), (j, i)):
        ta = p[b]
        for c in range(3):
            s0 = p[a][:, c]
            s1 = p[a][:, (c + 1) % 3]
            if np.any(_segments_hit_triangles(s0, s1, ta[:, 0], ta[:, 1], ta[:, 2])):
                return True
    return False


def validate(mesh: TriMesh) -> MeshQualityReport:
    area = face_areas(mesh.vertices, mesh.faces)
    valence = np.bincount(mesh.edges.ravel(), minlength=mesh.n_vertices)
    n = mesh.n_vertices
    e = mesh.edges
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    ncomp = connected_components(adj, directed=False)[0]
    chi = mesh.euler_characteristic
    return MeshQualityReport(
        min_face_area=float(area.min()),
        max_face_area=float(area.max()),
        min_angle=float(_tri_angles(mesh.vertices, mesh.faces).min()),
        max_valence=int(valence.max()),
        euler_characteristic=int(chi),
        genus=int((2 * ncomp - chi) // 2),
        components=int(ncomp),
        self_intersecting=self_intersects(mesh),
    )
