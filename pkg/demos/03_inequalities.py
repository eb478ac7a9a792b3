"""Weighted Hardy-type inequalities on random fields.

Each check draws a field, evaluates both sides and reports the margin
C * rhs - lhs. A negative margin anywhere would be a counterexample.
"""
import numpy as np

from degenera.calculus import inequality_check, random_bump_field, random_radial_polynomial
from degenera.geometry import Domain, build_interval_mesh
from degenera.weights import AffineTrig, RadialPower

rng = np.random.Generator(np.random.Philox(0))

for d in (3, 5, 12):
    reps = [inequality_check("hardy", None, random_radial_polynomial(rng), 2, d) for _ in range(50)]
    print(f"Hardy, d = {d:2d}: constant {reps[0].constant_used:.4f}, min margin {min(r.margin for r in reps):.4g}")

reps = [inequality_check("kebiche_73", RadialPower(2.0, 12), random_radial_polynomial(rng), 2, 12)
        for _ in range(50)]
print(f"weighted, d = 12, v = |x|^2: constant {reps[0].constant_used:g}, "
      f"min margin {min(r.margin for r in reps):.4g}")

# one dimension, nonvanishing weight: needs a mesh and the gradient floor sigma
mesh = build_interval_mesh(-1, 1, 64)
v = AffineTrig(4, 1, 0.25)
line = Domain.interval(-1, 1)
reps = [inequality_check("oned_72", v, random_bump_field(rng, line), 2, 1, {"mesh": mesh, "sigma": 1 / 12})
        for _ in range(50)]
print(f"1D, v = 4 + sin(x/4): constant {reps[0].constant_used:g}, min margin {min(r.margin for r in reps):.4g}")
