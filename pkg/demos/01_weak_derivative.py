"""Weak derivatives of a function that is not locally integrable.

f(x) = 1/x^2 on (-1, 1) is not in L^1 near the origin, so it has no
distributional derivative in the usual sense. Weighted by v(x) = x^2 the
picture changes: v f and v^2 f' are bounded, and the pairing against test
functions of the form v^2 phi gives back the classical derivative.

Run with ``python demos/01_weak_derivative.py``.
"""
import numpy as np

from degenera.calculus import ScalarField, build_battery, leibniz_residual, weak_derivative_residual
from degenera.geometry import build_interval_mesh
from degenera.weights import RadialPower

v = RadialPower(2.0, 1, order=3)
f = ScalarField.from_1d(lambda x: x**-2.0, lambda x: -2 * x**-3.0, singular_points=(0.0,))

# graded towards the singularity, with the origin as a mesh node
mesh = build_interval_mesh(-1, 1, 32, q=3, c=0.0)
battery = build_battery(mesh, breakpoints=(0.0,))
print(f"{len(battery.functions)} test functions on a graded mesh with {len(mesh.cells)} cells")

good = weak_derivative_residual(f, f.d((1,)), v, (1,), battery)
print(f"candidate g = -2/x^3:  relative residual {good.relative:.2e}")

# flipping the sign should be caught immediately
bad = weak_derivative_residual(f, lambda x: 2 * x[:, 0] ** -3.0, v, (1,), battery)
print(f"candidate g = +2/x^3:  relative residual {bad.relative:.2e}")

# product rule for v^2 f, the identity used to move weights across the derivative
lb = leibniz_residual(f, v, 1, (1,), battery)
print(f"Leibniz on v^2 f:      relative residual {lb.relative:.2e}")

smooth = ScalarField.from_1d(np.sin, np.cos)
print(f"sanity, sin with v=x^2: {weak_derivative_residual(smooth, smooth.d((1,)), v, (1,), battery).relative:.2e}")
