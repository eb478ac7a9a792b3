"""A degenerate elliptic problem whose solution is not locally integrable.

Coefficients a = v^4 I, c = v^2 with v = |x| on the unit disk, and load
k = |x|^(1/2). The bilinear form is coercive on the weighted space, so a
unique weak solution exists, yet int |u| blows up near the origin. On a
sequence of graded meshes the energy settles while the mass near the
origin keeps growing.
"""
from degenera.fem import CoefficientSet, coercivity_check, divergence_study, nonintegrability_check
from degenera.geometry import Domain

coeffs = CoefficientSet.example(d=2, m=1, beta=0.5)
co = coercivity_check(coeffs, Domain.disk(1))
print(f"coercivity: {co.case}, gamma = {co.gamma:.4f}")

ni = nonintegrability_check(coeffs)
print(f"predicted non-integrable: {ni.holds}; int (k/v^2) = {ni.details['k_over_v2_integral']}")

table = divergence_study(coeffs, [(r, 32, 3.0) for r in (8, 16, 32, 64)], K_radius=0.25)
print(f"{'rings':>6} {'dofs':>7} {'mass':>10} {'ratio':>6} {'energy':>9}")
for row in table.rows:
    ratio = f"{row['mass_ratio']:.2f}" if row["level"] > 0 else "-"
    print(f"{row['rings']:6d} {row['dofs']:7d} {row['mass']:10.4f} {ratio:>6} {row['energy']:9.5f}")
print("verdicts:", {k: table.verdicts[k] for k in ("mass_growth", "energy_stable", "holds")})

# beta = -1/2 makes k/v^2 integrable, so the prediction must fail
neg = nonintegrability_check(CoefficientSet.example(d=2, m=1, beta=-0.5))
print(f"beta = -1/2: holds = {neg.holds}, failed {neg.witness['failed']}")
