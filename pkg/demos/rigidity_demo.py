"""Minimize the confined Helfrich energy over a few spontaneous curvatures and
compare with the closed-form infimum of spheres in the unit ball.

    python3 demos/rigidity_demo.py [subdivisions]
"""

from __future__ import annotations

import sys

from confined_helfrich.verification import inequality_audit, rigidity_sweep

sub = int(sys.argv[1]) if len(sys.argv) > 1 else 3
H0s = [0.5, 1.0, 2.0, 3.0]

print(f"{'H0':>5} {'energy':>10} {'predicted':>10} {'rel err':>8} {'radius':>8} {'start':>10} audit")
for rep in rigidity_sweep(H0s, subdivisions=sub):
    s = rep.minimizer_shape_stats
    ok = inequality_audit(rep.mesh, rep.H0).passed
    print(f"{rep.H0:5.2f} {rep.measured_min_energy:10.5f} {rep.predicted:10.5f} "
          f"{rep.relative_error:8.4f} {s.mean_radius:8.4f} {rep.best_start:>10} {ok}")
