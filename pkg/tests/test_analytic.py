from __future__ import annotations

import math

import numpy as np
import pytest

from confined_helfrich.analytic import (catenoid_g_limit, diagnostics, fragment_geometry,
                                        gauss_curvature, interior_willmore_mass,
                                        interpolation_error, inverted_catenoid,
                                        laplace_normal_residual, mean_curvature, patch_to_mesh,
                                        sphere_patch, third_derivative_mass, w_vector)
from confined_helfrich.errors import EvaluationAtBranchPoint


def samples(n, rmin, rmax, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(rmin, rmax, n)
    t = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


CAT = inverted_catenoid()
SPH = sphere_patch(1.0)


def test_catenoid_conformal():
    d = diagnostics(CAT, samples(200, 1e-3, 0.9))
    assert d.conformality.max() < 1e-8


def test_catenoid_branch_point_image():
    for r in (1e-2, 1e-4, 1e-6):
        assert np.linalg.norm(CAT.evaluate([r, 0.0])) < 10 * r
    with pytest.raises(EvaluationAtBranchPoint):
        CAT.first([0.0, 0.0])
    with pytest.raises(EvaluationAtBranchPoint):
        w_vector(CAT, [0.0, 0.0])


def test_catenoid_third_component():
    r2 = 0.25
    expect = -r2 * math.log(r2) / ((1 + r2) ** 2 + r2 * math.log(r2) ** 2)
    assert CAT.evaluate([0.3, 0.4])[0, 2] == pytest.approx(expect, rel=1e-14)


def test_sphere_patch_curvatures():
    z = samples(50, 0, 0.95)
    for R in (1.0, 0.5):
        p = sphere_patch(R)
        assert np.allclose(mean_curvature(p, z), 2 / R, rtol=1e-6)
        assert np.allclose(gauss_curvature(p, z), 1 / R**2, rtol=1e-6)
    assert diagnostics(SPH, z).conformality.max() < 1e-12


def test_sphere_w_vector_vanishes():
    W = w_vector(SPH, samples(50, 0, 0.9))
    assert np.abs(W).max() < 1e-8


@pytest.mark.parametrize("patch,rmin", [(CAT, 1e-2), (SPH, 0.0)])
def test_w_identities(patch, rmin):
    d = diagnostics(patch, samples(50, rmin, 0.9, seed=3))
    assert d.w_dot_grad.max() < 1e-6
    assert d.w_cross_residual.max() < 1e-6


def test_laplace_normal_identity():
    z = samples(50, 0.1, 0.9, seed=4)
    assert np.linalg.norm(laplace_normal_residual(SPH, z), axis=1).max() < 1e-6
    assert np.linalg.norm(laplace_normal_residual(CAT, z), axis=1).max() < 1e-5
    # every term is invariant under scaling the immersion
    r1 = np.linalg.norm(laplace_normal_residual(SPH, z), axis=1).max()
    r2 = np.linalg.norm(laplace_normal_residual(sphere_patch(2.0), z), axis=1).max()
    assert r2 < 1e-6 and r1 < 1e-6


@pytest.mark.parametrize("patch,rmin", [(CAT, 1e-2), (SPH, 0.0)])
def test_first_derivatives_match_differences(patch, rmin):
    z = samples(30, rmin, 0.8, seed=5)
    h = 1e-4 * np.maximum(np.linalg.norm(z, axis=1), 0.1)
    fd = np.empty((len(z), 2, 3))
    for j in range(2):
        e = np.zeros(2)
        e[j] = 1
        s = h[:, None] * e
        f = lambda k: patch.evaluate(z + k * s)  # noqa: E731
        fd[:, j] = (-f(-3) + 9 * f(-2) - 45 * f(-1) + 45 * f(1) - 9 * f(2) + f(3)) / (60 * h[:, None])
    ex = patch.first(z)
    assert np.max(np.abs(fd - ex)) / np.max(np.abs(ex)) < 1e-8


def test_conformal_factor_identity():
    z = samples(40, 1e-2, 0.9, seed=6)
    for p in (CAT, SPH):
        d1 = p.first(z)
        e2l = np.exp(2 * p.conformal_factor(z))
        assert np.allclose(e2l, np.sum(d1[:, 0] ** 2, axis=1), rtol=1e-12)
        assert np.allclose(e2l, np.sum(d1[:, 1] ** 2, axis=1), rtol=1e-8)


def test_g_limit():
    assert catenoid_g_limit() == pytest.approx(-8, rel=0.01)


def test_third_derivative_mass_diverges_logarithmically():
    eps = np.array([1e-2, 1e-3, 1e-4])
    m = np.array([third_derivative_mass(e) for e in eps])
    c, _ = np.polyfit(np.log(1 / eps), m, 1)
    assert abs(c / (128 * math.pi) - 1) < 0.15
    assert third_derivative_mass(0.4) < third_derivative_mass(0.1)
    with pytest.raises(ValueError):
        third_derivative_mass(1e-7)


def test_sphere_patch_mesh_curvature():
    f = patch_to_mesh(SPH, 64)
    g = fragment_geometry(f)
    inner = ~f.boundary
    assert np.max(np.abs(g.mean_curvature[inner] / 2 - 1)) < 5e-3


def test_catenoid_mesh_finite_mass():
    f = patch_to_mesh(CAT, 48, inner_cutoff=0.05, outer_radius=0.9)
    m = interior_willmore_mass(f)
    assert np.isfinite(m) and m > 0
    with pytest.raises(ValueError):
        patch_to_mesh(CAT, 16)


@pytest.mark.parametrize("patch,cutoff,R,order", [(SPH, 0.0, 1.0, 1.9), (CAT, 0.05, 0.5, 1.7)])
def test_interpolation_converges_quadratically(patch, cutoff, R, order):
    res = np.array([8, 16, 32, 64])
    err = np.array([interpolation_error(patch, patch_to_mesh(patch, n, cutoff, R)) for n in res])
    p = -np.polyfit(np.log(res), np.log(err), 1)[0]
    assert p > order
