"""Inverted catenoid: conformality, the radial limit -8 and the logarithmic
blow-up of the third-derivative mass near the branch point."""

from __future__ import annotations

import math

import numpy as np

from confined_helfrich.analytic import (catenoid_g_limit, diagnostics, inverted_catenoid,
                                        third_derivative_mass)

rng = np.random.default_rng(0)
r = rng.uniform(1e-2, 0.9, 200)
t = rng.uniform(0, 2 * np.pi, 200)
d = diagnostics(inverted_catenoid(), np.column_stack([r * np.cos(t), r * np.sin(t)]))
print(f"max conformality residual   {d.conformality.max():.2e}")
print(f"max relative W . grad Phi   {d.w_dot_grad.max():.2e}")
print(f"lim r g'(r)                 {catenoid_g_limit():.6f}")

eps = np.array([1e-2, 1e-3, 1e-4])
mass = np.array([third_derivative_mass(e) for e in eps])
c = np.polyfit(np.log(1 / eps), mass, 1)[0]
for e, m in zip(eps, mass):
    print(f"mass(eps={e:.0e}) = {m:.2f}")
print(f"slope in log(1/eps): {c:.2f}  (128 pi = {128 * math.pi:.2f})")
