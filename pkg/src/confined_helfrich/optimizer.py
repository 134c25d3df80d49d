"""Confined, area-constrained minimization of the Helfrich energy.

The area constraint is handled by an augmented Lagrangian, confinement by
projecting violating vertices back onto the container after every trial
step. The inner solver is a projected L-BFGS: vertices sitting on the
container whose gradient pushes them outward are treated as active and their
normal component is frozen for that iteration.

After a solve, :func:`kkt_extract` fits the discrete multipliers of

    grad E + Lambda grad A = sum_{v in contact} sigma_v n(x_v)

where n is the container's inward normal. A minimizer has sigma_v >= 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .container import Container
from .errors import InfeasibleStart, RankDeficientContactSet
from .functionals import EnergyParams, augmented_objective, value_and_gradient
from .geometry import _dot, _vertex_fields, face_terms, scatter
from .mesh import TriMesh, _tri_angles, face_areas

log = logging.getLogger(__name__)

CONVERGED = "converged"
ITERATION_LIMIT = "iteration-limit"
DEGENERATE = "degenerate-mesh"
STALLED = "stalled"

INTERIOR_MASS_FLOOR = 1e-8
PINV_CUTOFF = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 3000
    step_size: float = 1e-2
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 30
    area_penalty_schedule: tuple = (10.0, 100.0, 1000.0)
    inner_iterations: int = 600
    gradient_tol: float = 1e-4
    area_tol: float = 1e-6
    contact_tol: float = 1e-6
    tangential_smoothing_weight: float = 0.0
    smoothing_interval: int = 20
    memory: int = 10
    max_displacement: float = 0.05
    min_angle: float = 1e-3
    preconditioned: bool = True
    precond_refresh: int = 25
    normal_motion: bool = False
    # stop a phase once the objective drops by less than plateau_tol (relative)
    # over plateau_window accepted steps
    plateau_window: int = 50
    plateau_tol: float = 1e-8

    def __post_init__(self):
        if self.max_iterations <= 0 or self.inner_iterations <= 0:
            raise ValueError("iteration counts must be positive")
        for name in ("step_size", "gradient_tol", "area_tol", "max_displacement"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.armijo_c < 1 or not 0 < self.backtrack < 1:
            raise ValueError("armijo constants must lie in (0, 1)")
        if any(p <= 0 for p in self.area_penalty_schedule) or not self.area_penalty_schedule:
            raise ValueError("area penalties must be positive")
        if self.contact_tol < 0 or self.tangential_smoothing_weight < 0 or self.plateau_tol < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.plateau_window <= 0:
            raise ValueError("plateau_window must be positive")


@dataclass(frozen=True)
class KKTResult:
    lam: float
    contact_measure: np.ndarray
    kkt_residual: float
    contact: np.ndarray
    interior_degenerate: bool


@dataclass(frozen=True)
class SolveResult:
    final_mesh: TriMesh
    energy: float
    energy_trace: np.ndarray
    phase_trace: np.ndarray
    lam: float
    contact_measure: np.ndarray
    kkt_residual: float
    area_residual: float
    containment_violation: float
    status: str
    iterations: int
    interior_degenerate: bool = False
    log: list = field(default_factory=list, repr=False)

    @property
    def constraint_residuals(self) -> tuple[float, float]:
        return self.area_residual, self.containment_violation

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


# ---------------------------------------------------------------------------
# helpers


def _contact_normals(container: Optional[Container], x: np.ndarray, tol: float):
    if container is None:
        return np.zeros(len(x), bool), np.zeros_like(x)
    d, g = container._sdf_grad(x)
    mask = np.abs(d) < tol
    n = np.zeros_like(x)
    gm = g[mask]
    n[mask] = gm / np.linalg.norm(gm, axis=1)[:, None]
    return mask, n


def _normal_part(g: np.ndarray, x: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Per-vertex projection of g onto the vertex normal line."""
    nu = _vertex_fields(face_terms(x, faces))[0]
    return _dot(g, nu)[:, None] * nu


def _reduce(g: np.ndarray, mask: np.ndarray, n: np.ndarray):
    """Zero the outward-pushing normal part of g on contact vertices."""
    gn = _dot(g, n)
    active = mask & (gn > 0)
    out = g.copy()
    out[active] -= gn[active, None] * n[active]
    return out, active


def _preconditioner(x: np.ndarray, faces: np.ndarray, kappa: float):
    """Factor K A^-1 K + kappa^2 K + kappa^4 A (cotangent stiffness K, lumped
    mass A), a bi-Laplacian model of the bending Hessian. Returns a solver
    acting on (V, 3) arrays."""
    ft = face_terms(x, faces)
    i = np.roll(faces, -1, axis=1).ravel()
    j = np.roll(faces, -2, axis=1).ravel()
    w = 0.5 * np.clip(ft.cot.ravel(), 1e-3, None)  # edge opposite each corner
    n = len(x)
    W = sparse.coo_matrix((np.r_[w, w], (np.r_[i, j], np.r_[j, i])), shape=(n, n)).tocsr()
    K = sparse.diags(np.asarray(W.sum(axis=1)).ravel()) - W
    Ainv = sparse.diags(1.0 / ft.area)
    M = (K @ Ainv @ K + kappa**2 * K + kappa**4 * sparse.diags(ft.area)).tocsc()
    lu = splu(M)
    return lambda g: lu.solve(np.ascontiguousarray(g))


def _two_loop(g: np.ndarray, S: list, Y: list, precond=None) -> np.ndarray:
    q = g.ravel().copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((a, rho))
        q -= a * y
    if precond is not None:
        q = precond(q.reshape(g.shape)).ravel()
        if S:
            y = Y[-1]
            q *= np.dot(S[-1], y) / np.dot(y, precond(y.reshape(g.shape)).ravel())
    elif S:
        q *= np.dot(S[-1], Y[-1]) / np.dot(Y[-1], Y[-1])
    for (s, y), (a, rho) in zip(zip(S, Y), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q.reshape(g.shape)


def _valid_step(faces, x_old, x_new, min_area):
    p0 = x_old[faces]
    p1 = x_new[faces]
    n0 = np.cross(p0[:, 1] - p0[:, 0], p0[:, 2] - p0[:, 0])
    n1 = np.cross(p1[:, 1] - p1[:, 0], p1[:, 2] - p1[:, 0])
    if np.any(_dot(n0, n1) <= 0):
        return False
    return bool(np.all(0.5 * np.linalg.norm(n1, axis=1) > min_area))


def _feasible_point(container, x, tol):
    """Project violating vertices; None if one left the tubular neighborhood."""
    if container is None:
        return x
    d = container.sdf(x)
    bad = d < 0
    if not np.any(bad):
        return x
    if np.any(-d[bad] >= container.tubular_radius):
        return None
    x = x.copy()
    x[bad] = container._project_unchecked(x[bad])
    return x


# ---------------------------------------------------------------------------
# tangential smoothing


def _ring_spheres(x: np.ndarray, rows: np.ndarray, idx: np.ndarray):
    """Least-squares sphere through each vertex and its one-ring.

    Returns absolute centers, radii and a mask of rings the sphere fits to
    within 1e-6 of the ring size (so noisy or flat rings are excluded).
    """
    n = len(x)
    q = x[idx] - x[rows]
    # |q|^2 = 2 c.q + k, with the vertex itself (q = 0) as an extra row
    A = np.concatenate([2 * q, np.ones((len(q), 1))], axis=1)
    b = _dot(q, q)
    AtA = np.zeros((n, 4, 4))
    Atb = np.zeros((n, 4))
    np.add.at(AtA, rows, A[:, :, None] * A[:, None, :])
    np.add.at(Atb, rows, A * b[:, None])
    AtA[:, 3, 3] += 1.0
    size = np.sqrt(scatter(rows, b, n) / np.maximum(np.bincount(rows, minlength=n), 1))
    sol = np.full((n, 4), np.nan)
    cond = np.linalg.cond(AtA)
    ok = cond < 1e12
    sol[ok] = np.linalg.solve(AtA[ok], Atb[ok][:, :, None])[:, :, 0]
    c = sol[:, :3]
    R = np.sqrt(np.maximum(_dot(c, c) + sol[:, 3], 0.0))
    with np.errstate(invalid="ignore"):
        fit = np.abs(np.linalg.norm(q - c[rows], axis=1) - R[rows])
        worst = np.zeros(n)
        np.maximum.at(worst, rows, np.nan_to_num(fit, nan=np.inf))
        ok &= (worst <= 1e-6 * size) & (np.abs(np.linalg.norm(c, axis=1) - R) <= 1e-6 * size)
    return x + np.nan_to_num(c), R, ok


def tangential_smooth(mesh: TriMesh, weight: float) -> TriMesh:
    """Move each vertex toward its one-ring centroid within its tangent plane.

    The normal position is then corrected to second order: onto the sphere
    through the one-ring where such a sphere fits exactly (round spheres stay
    round to round-off), otherwise by |t|^2 H / 4 along the interior normal.
    """
    if weight == 0:
        return mesh
    x = mesh.vertices
    indptr, idx = mesh.neighbors
    counts = np.diff(indptr)
    rows = np.repeat(np.arange(len(x)), counts)
    centroid = scatter(rows, x[idx], len(x)) / counts[:, None]
    ft = face_terms(x, mesh.faces)
    nu, _, H, _ = _vertex_fields(ft)
    delta = centroid - x
    t = weight * (delta - _dot(delta, nu)[:, None] * nu)
    y = x + t + (0.25 * _dot(t, t) * H)[:, None] * nu
    c, R, ok = _ring_spheres(x, rows, idx)
    u = x[ok] + t[ok] - c[ok]
    y[ok] = c[ok] + R[ok, None] * u / np.linalg.norm(u, axis=1)[:, None]
    return mesh.moved(y)


# ---------------------------------------------------------------------------
# multipliers and residual diagnostics


def _ele_reference(ft, H0: float) -> np.ndarray:
    nu, _, H, _ = _vertex_fields(ft)
    K = (2 * np.pi - ft.angle_sum) / ft.area
    return ft.area * (
        0.5 * np.abs(H) ** 3 + 2 * np.abs(K * H) + 0.5 * H0**2 * np.abs(H) + 2 * abs(H0) * np.abs(K)
    )


def kkt_extract(mesh: TriMesh, params: EnergyParams, container: Optional[Container],
                contact_tol: Optional[float] = None, *, fixed_lam: Optional[float] = None,
                strict: bool = False) -> KKTResult:
    """Least-squares fit of (Lambda, sigma) to the discrete stationarity condition.

    Lambda is forced to zero without an area constraint. With a rank-deficient
    contact set (grad A fully explained by contact normals) the minimum-norm
    choice Lambda = 0 is taken unless ``strict``. If the mean-curvature mass
    off the contact set is below 1e-8 the interior is flagged degenerate and
    Lambda is not extracted.

    ``kkt_residual`` is the norm of the unexplained gradient divided by the
    larger of the explained gradient and the size of the individual curvature
    terms in the balance (so critical points without contact still score ~0).
    """
    x = mesh.vertices
    ft = face_terms(x, mesh.faces)
    tol = (1e-6 * container.scale if container is not None else 0.0) if contact_tol is None \
        else contact_tol
    from .functionals import _bending_adjoints
    from .geometry import backprop

    _, gA_, gL, gN = _bending_adjoints(ft, params.H0, 1.0, params.theta)
    gE = backprop(ft, gA_, gL, gN)
    if params.rho:
        gE = gE + params.rho * value_and_gradient(mesh, "volume")[1]
    _, gArea = value_and_gradient(mesh, "area")
    mask, n = _contact_normals(container, x, tol)

    nu, hvec, H, _ = _vertex_fields(ft)
    interior_mass = float(np.sum(np.linalg.norm(hvec[~mask], axis=1) * ft.area[~mask]))
    degenerate = interior_mass < INTERIOR_MASS_FLOOR

    def project_out(g):
        return g - _dot(g, n)[:, None] * n  # n is zero off the contact set

    if fixed_lam is not None:
        lam = float(fixed_lam)
    elif params.target_area is None or degenerate:
        lam = 0.0
    else:
        pa = project_out(gArea)
        pe = project_out(gE)
        na = float(np.linalg.norm(pa))
        if na <= PINV_CUTOFF * max(1.0, float(np.linalg.norm(gArea))):
            if strict:
                raise RankDeficientContactSet("area gradient lies in the span of contact normals")
            lam = 0.0
        else:
            lam = -float(np.sum(pa * pe)) / na**2
    g = gE + lam * gArea
    sigma = np.where(mask, _dot(g, n), 0.0)
    r = g - sigma[:, None] * n
    ref = max(float(np.linalg.norm(g)), float(np.linalg.norm(_ele_reference(ft, params.H0))))
    res = float(np.linalg.norm(r)) / ref if ref > 0 else 0.0
    return KKTResult(lam, sigma, res, mask, degenerate)


def cotan_laplacian(ft, f: np.ndarray) -> np.ndarray:
    """(1/(2 A_v)) sum_j (cot a + cot b)(f_j - f_v) for a scalar vertex field."""
    fv = f[ft.faces]  # (F, 3)
    f1 = np.roll(fv, -1, axis=1)
    f2 = np.roll(fv, -2, axis=1)
    cot1 = np.roll(ft.cot, -1, axis=1)
    cot2 = np.roll(ft.cot, -2, axis=1)
    c = cot2 * (f1 - fv) + cot1 * (f2 - fv)
    return scatter(ft.faces.ravel(), c.ravel(), ft.n_vertices) / (2 * ft.area)


def scalar_ele_residual(mesh: TriMesh, params: EnergyParams, contact_measure=None) -> np.ndarray:
    """Pointwise defect of the scalar Euler-Lagrange equation

        Lap H + (H^2/2 - 2K) H + (2 H0 - 4 theta) K - (2 Lambda + H0^2/2) H - 2 rho
            - 2 sigma_v / A_v

    with the cotangent Laplacian for Lap and angle-defect K.
    """
    ft = face_terms(mesh.vertices, mesh.faces)
    _, _, H, _ = _vertex_fields(ft)
    K = (2 * np.pi - ft.angle_sum) / ft.area
    sig = np.zeros(len(H)) if contact_measure is None else np.asarray(contact_measure, float)
    H0, lam, rho, th = params.H0, params.lam, params.rho, params.theta
    return (
        cotan_laplacian(ft, H)
        + (0.5 * H**2 - 2 * K) * H
        + (2 * H0 - 4 * th) * K
        - (2 * lam + 0.5 * H0**2) * H
        - 2 * rho
        - 2 * sig / ft.area
    )


# ---------------------------------------------------------------------------
# main solver


def minimize(initial: TriMesh, params: EnergyParams, container: Optional[Container] = None,
             config: SolverConfig = SolverConfig(),
             callback: Optional[Callable[[dict], None]] = None) -> SolveResult:
    """Minimize the Helfrich energy of ``initial`` subject to the area target in
    ``params`` (if any) and confinement in ``container`` (if any).

    Accepted iterates are always valid meshes inside the closed container.
    """
    faces = np.asarray(initial.faces)
    edges = initial.edges
    x = np.array(initial.vertices, dtype=float)
    scale = container.scale if container is not None else 1.0
    tol = config.contact_tol * scale
    if container is not None:
        viol = -float(np.min(container.sdf(x)))
        if viol > tol:
            raise InfeasibleStart(f"initial mesh violates the container by {viol:.3e}")
    min_area = 1e-14 * scale**2
    has_area = params.target_area is not None
    schedule = list(config.area_penalty_schedule) if has_area else [0.0]
    lam = params.lam if has_area else 0.0

    trace, phases, records = [], [], []
    it_total = 0
    status = ITERATION_LIMIT
    obj = augmented_objective(x, faces, params, lam, 0.0)
    phase = 0
    idle = 0
    while True:
        mu = schedule[min(phase, len(schedule) - 1)] if has_area else 0.0
        obj = augmented_objective(x, faces, params, lam, mu)
        S: list = []
        Y: list = []
        inner = 0
        inner_status = None
        precond = None
        # without an area constraint there is a single phase
        inner_cap = config.inner_iterations if has_area else config.max_iterations
        while inner < inner_cap and it_total < config.max_iterations:
            mask, n = _contact_normals(container, x, tol)
            g_dir = _normal_part(obj.grad, x, faces) if config.normal_motion else obj.grad
            gr, active = _reduce(g_dir, mask, n)
            gnorm = float(np.linalg.norm(gr))
            area_res = abs(obj.area - params.target_area) / params.target_area if has_area else 0.0
            if gnorm < config.gradient_tol * (1 + abs(obj.energy)):
                inner_status = CONVERGED
                break
            if config.preconditioned and (precond is None or inner % config.precond_refresh == 0):
                precond = _preconditioner(x, faces, 1.0 / scale)
            d = _two_loop(gr, S, Y, precond)
            if config.normal_motion:
                d = _normal_part(d, x, faces)
            dn = _dot(d, n)
            # active vertices keep their normal position; other contact
            # vertices may only move inward
            out = active | (mask & (dn < 0))
            d[out] -= dn[out, None] * n[out]
            slope = float(np.sum(gr * d))
            if slope >= 0:
                S, Y = [], []
                d = -gr
                slope = -gnorm**2
            dmax = float(np.max(np.linalg.norm(d, axis=1)))
            alpha = 1.0 if S or precond is not None else config.step_size * scale / dmax
            # cap vertex motion both absolutely and by the current edge length;
            # the latter stops a shrinking surface from passing through itself
            e = x[edges[:, 0]] - x[edges[:, 1]]
            h = float(np.mean(np.sqrt(_dot(e, e))))
            alpha = min(alpha, min(config.max_displacement * scale, 0.5 * h) / dmax)
            accepted = False
            geometry_rejects = 0
            for _ in range(config.max_backtracks + 1):
                xt = _feasible_point(container, x + alpha * d, tol)
                if xt is not None and _valid_step(faces, x, xt, min_area):
                    try:
                        cand = augmented_objective(xt, faces, params, lam, mu)
                    except FloatingPointError:
                        cand = None
                    if cand is not None and np.isfinite(cand.value) and \
                            cand.value <= obj.value + config.armijo_c * float(np.sum(obj.grad * (xt - x))):
                        accepted = True
                        break
                else:
                    geometry_rejects += 1
                alpha *= config.backtrack
            if not accepted:
                if S:
                    S, Y = [], []
                    continue
                inner_status = DEGENERATE if geometry_rejects > config.max_backtracks // 2 else STALLED
                break
            s = (xt - x).ravel()
            mask_t, n_t = _contact_normals(container, xt, tol)
            g_t = _normal_part(cand.grad, xt, faces) if config.normal_motion else cand.grad
            gr_t, _ = _reduce(g_t, mask_t, n_t)
            y = (gr_t - gr).ravel()
            sy = float(np.dot(s, y))
            if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
                S.append(s)
                Y.append(y)
                if len(S) > config.memory:
                    S.pop(0)
                    Y.pop(0)
            x, obj = xt, cand
            inner += 1
            it_total += 1
            if config.tangential_smoothing_weight > 0 and it_total % config.smoothing_interval == 0:
                xs = tangential_smooth(initial.moved(x), config.tangential_smoothing_weight).vertices
                xs = _feasible_point(container, xs, tol)
                if xs is not None and _valid_step(faces, x, xs, min_area):
                    cs = augmented_objective(xs, faces, params, lam, mu)
                    if cs.value <= obj.value:
                        x, obj = xs, cs
                        S, Y = [], []
            ang = _tri_angles(x, faces).min()
            trace.append(obj.value)
            phases.append(phase)
            rec = {
                "iteration": it_total,
                "energy": obj.energy,
                "objective": obj.value,
                "area": obj.area,
                "violation": float(max(0.0, -np.min(container.sdf(x)))) if container else 0.0,
                "step": float(alpha),
            }
            records.append(rec)
            if callback is not None:
                callback(rec)
            if ang < config.min_angle:
                inner_status = DEGENERATE
                break
            w = config.plateau_window
            if inner > w and trace[-w - 1] - obj.value <= config.plateau_tol * (1 + abs(obj.value)):
                inner_status = STALLED
                break
        area_res = abs(obj.area - params.target_area) / params.target_area if has_area else 0.0
        log.debug("phase %d: mu=%g lam=%.6g inner=%d status=%s area_res=%.3e energy=%.8g",
                  phase, mu, lam, inner, inner_status, area_res, obj.energy)
        if inner_status == DEGENERATE:
            status = DEGENERATE
            break
        if not has_area:
            status = inner_status or ITERATION_LIMIT
            break
        if inner_status in (CONVERGED, STALLED) and area_res < config.area_tol:
            status = inner_status
            break
        if it_total >= config.max_iterations:
            status = ITERATION_LIMIT
            break
        idle = idle + 1 if inner == 0 else 0
        if idle >= 3:
            # multiplier updates no longer move the iterate: the area target is
            # not reachable from here (e.g. surface pinned to the container)
            status = STALLED
            break
        lam += mu * (obj.area - params.target_area)
        phase += 1
        if phase > 50:
            status = ITERATION_LIMIT
            break

    mesh = initial.moved(x)
    final_params = replace(params, lam=lam)
    kkt = kkt_extract(mesh, final_params, container, tol,
                      fixed_lam=None if has_area else 0.0)
    area_res = abs(obj.area - params.target_area) / params.target_area if has_area else 0.0
    viol = float(max(0.0, -np.min(container.sdf(x)))) if container is not None else 0.0
    log.debug("minimize finished: status=%s iterations=%d energy=%.8g", status, it_total, obj.energy)
    return SolveResult(
        final_mesh=mesh,
        energy=float(obj.energy),
        energy_trace=np.array(trace),
        phase_trace=np.array(phases, dtype=int),
        lam=kkt.lam if has_area and not kkt.interior_degenerate else lam,
        contact_measure=kkt.contact_measure,
        kkt_residual=kkt.kkt_residual,
        area_residual=float(area_res),
        containment_violation=viol,
        status=status,
        iterations=it_total,
        interior_degenerate=kkt.interior_degenerate,
        log=records,
    )


def mesh_min_area(mesh: TriMesh) -> float:
    return float(face_areas(mesh.vertices, mesh.faces).min())
