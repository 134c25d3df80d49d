"""Helfrich energy minimization of closed triangle meshes inside containers,
with analytic checks for round spheres and the inverted catenoid."""

from __future__ import annotations

from .analytic import (ConformalPatch, catenoid_g_limit, diagnostics, inverted_catenoid,
                       laplace_normal_residual, patch_to_mesh, sphere_patch,
                       third_derivative_mass)
from .cli_io import (RunConfig, main, parse_config, read_obj, write_obj, write_report,
                     write_sweep)
from .container import Ball, Box, Container, HalfSpace, Intersection, Union, unit_ball
from .errors import *  # noqa: F401,F403
from .functionals import (EnergyParams, area_value, gradient, helfrich_energy,
                          total_mean_curvature_value, volume_value, willmore_energy)
from .geometry import compute_geometry, diameter
from .mesh import (TriMesh, build_mesh, ellipsoid, icosphere, jittered,
                   sphere_lattice_with_necks, torus, validate)
from .optimizer import SolveResult, SolverConfig, kkt_extract, minimize
from .verification import (RigidityReport, inequality_audit, predicted_w,
                           prescribed_area_rigidity, rigidity_sweep, sqrt_growth_sweep)

__version__ = "0.1.0"
