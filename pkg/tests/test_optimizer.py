from __future__ import annotations

import math

import numpy as np
import pytest

from confined_helfrich.container import unit_ball
from confined_helfrich.errors import InfeasibleStart
from confined_helfrich.functionals import EnergyParams, area_value
from confined_helfrich.geometry import compute_geometry, diameter
from confined_helfrich.mesh import _tri_angles, ellipsoid, icosphere, jittered
from confined_helfrich.optimizer import (SolverConfig, kkt_extract, minimize,
                                         scalar_ele_residual, tangential_smooth)
from confined_helfrich.verification import reference_area


def radii(mesh):
    return np.linalg.norm(mesh.vertices, axis=1)


@pytest.fixture(scope="module")
def contact_h0_1():
    return minimize(icosphere(0.9, 4), EnergyParams(H0=1.0), unit_ball())


@pytest.fixture(scope="module")
def free_h0_3():
    return minimize(icosphere(0.8, 4), EnergyParams(H0=3.0), unit_ball())


def test_free_sphere_reaches_zero_energy(free_h0_3):
    r = free_h0_3
    assert r.converged
    assert r.energy < 0.05
    assert abs(radii(r.final_mesh).mean() / (2 / 3) - 1) < 0.02


def test_ellipsoid_relaxes_to_unit_sphere():
    # target is the reachable discrete counterpart of 4 pi
    params = EnergyParams(H0=1.0, target_area=reference_area(4))
    r = minimize(ellipsoid((0.9, 0.7, 0.7), 4), params, unit_ball())
    rr = radii(r.final_mesh)
    assert abs(r.energy / math.pi - 1) < 0.03
    assert rr.std() / rr.mean() < 1e-2
    assert r.area_residual < 1e-4


def test_unit_sphere_stays_minimal_at_h0_0():
    params = EnergyParams(H0=0.0, target_area=reference_area(4))
    r = minimize(icosphere(1, 4), params, unit_ball())
    assert abs(r.energy / (4 * math.pi) - 1) < 0.03


def test_contact_density_positive_and_uniform(contact_h0_1):
    r = contact_h0_1
    assert r.converged
    sig = r.contact_measure
    area = compute_geometry(r.final_mesh).area
    on = sig > 0
    assert on.mean() > 0.9
    dens = sig[on] / area[on]
    # scalar Euler-Lagrange equation on the unit sphere: sigma / A = (2 H0 - H0^2) / 2
    assert abs(dens.mean() - 0.5) < 0.02
    assert dens.std() / dens.mean() < 0.1
    assert sig.min() >= -1e-6 * sig.max()


def test_forced_contact_flags_negative_measure():
    k = kkt_extract(icosphere(1, 4), EnergyParams(H0=3.0), unit_ball(), fixed_lam=0.0)
    area = compute_geometry(icosphere(1, 4)).area
    assert np.all(k.contact_measure < 0)
    assert np.mean(k.contact_measure / area) == pytest.approx(-1.5, rel=0.02)


def test_interior_minimizer_has_empty_contact_set(free_h0_3):
    k = kkt_extract(free_h0_3.final_mesh, EnergyParams(H0=3.0), unit_ball())
    assert not np.any(k.contact)
    assert np.all(k.contact_measure == 0)
    assert k.kkt_residual < 5e-2


def test_free_sphere_area_multiplier():
    # a free sphere of radius r with area held fixed has Lambda = (2 H0 r - H0^2 r^2) / (4 r^2)
    m = icosphere(0.5, 4)
    k = kkt_extract(m, EnergyParams(H0=1.0, target_area=area_value(m)), None)
    assert k.lam == pytest.approx((2 * 0.5 - 0.25) / (4 * 0.25), rel=0.02)


def test_scalar_ele_residual_converges_on_unit_sphere():
    res = []
    for k in (3, 4, 5):
        p = EnergyParams(H0=1.0, lam=0.25)
        res.append(np.mean(np.abs(scalar_ele_residual(icosphere(1, k), p, None))))
    assert res[0] > res[1] > res[2]


def test_scalar_ele_residual_converges_on_zero_energy_sphere():
    res = [np.mean(np.abs(scalar_ele_residual(icosphere(2 / 3, k), EnergyParams(H0=3.0), None)))
           for k in (3, 4, 5)]
    assert res[0] > res[1] > res[2]


def test_scalar_ele_residual_reports_on_rough_mesh():
    r = scalar_ele_residual(jittered(icosphere(1, 3), 0.05, 1), EnergyParams(H0=1.0), None)
    assert np.all(np.isfinite(r)) and np.max(np.abs(r)) > 0


def test_tangential_smooth_examples():
    m = icosphere(1, 3)
    assert np.array_equal(tangential_smooth(m, 0.0).vertices, m.vertices)
    assert np.max(np.abs(radii(tangential_smooth(m, 0.5)) - 1)) < 1e-6
    j = jittered(icosphere(1, 3), 0.05, 4)
    s = j
    for _ in range(10):
        s = tangential_smooth(s, 0.5)
    assert _tri_angles(s.vertices, s.faces).min() > _tri_angles(j.vertices, j.faces).min()
    assert abs(area_value(s) / area_value(j) - 1) < 5e-3


def test_infeasible_start_rejected():
    with pytest.raises(InfeasibleStart):
        minimize(icosphere(1.1, 2), EnergyParams(H0=1.0), unit_ball())


def test_trace_invariants(contact_h0_1):
    r = minimize(jittered(icosphere(0.85, 3), 0.03, 2),
                 EnergyParams(H0=0.5, target_area=11.0), unit_ball(),
                 SolverConfig(max_iterations=300))
    for ph in np.unique(r.phase_trace):
        t = r.energy_trace[r.phase_trace == ph]
        assert np.all(np.diff(t) <= 1e-12 * np.abs(t[:-1]).max())
    assert all(rec["violation"] <= 1e-6 for rec in r.log)
    assert {"iteration", "energy", "area", "violation", "step"} <= set(r.log[0])


@pytest.mark.parametrize("fixture", ["contact_h0_1", "free_h0_3"])
def test_converged_result_invariants(fixture, request):
    r = request.getfixturevalue(fixture)
    H0 = 1.0 if fixture == "contact_h0_1" else 3.0
    m = r.final_mesh
    ball = unit_ball()
    d = ball.sdf(m.vertices)
    assert r.containment_violation == 0 or r.containment_violation < 1e-6
    # support and complementary slackness
    assert np.all(r.contact_measure[d > 1e-6] == 0)
    mass = np.abs(r.contact_measure).sum()
    assert np.sum(np.abs(r.contact_measure) * np.abs(d)) <= 1e-6 * max(mass, 1e-300)
    a = area_value(m)
    diam = diameter(m)
    assert diam <= (2 * r.energy + (2 * H0**2 + 1) * a) / math.pi
    assert diam >= math.sqrt(a / (2 * (r.energy + 1) + 2 * H0**2 * a))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(step_size=0)
    with pytest.raises(ValueError):
        SolverConfig(armijo_c=1.5)
    with pytest.raises(ValueError):
        SolverConfig(area_penalty_schedule=(1.0, -1.0))
