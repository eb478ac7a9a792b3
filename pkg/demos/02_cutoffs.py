"""Cut-off functions chi_n = eta(n v) and how fast their derivatives grow.

For v(x) = x the derivatives of chi_n scale like n^|sigma|. That growth
is what the weight v^s(sigma) has to absorb, and the weighted error
||(1 - chi_n) f|| then shrinks as the transition layer moves to the
zero set of v.
"""
import numpy as np

from degenera.calculus import ScalarField, cutoff_error_norms
from degenera.cutoff import build_transition, chi_growth_fit
from degenera.geometry import Domain, build_interval_mesh
from degenera.weights import Polynomial, ShapeMap

eta = build_transition(4)
print("sup |eta^(k)|, k = 0..4:", " ".join(f"{s:.3g}" for s in eta.derivative_sup))

v = Polynomial([0.0, 1.0])
ns = [4, 8, 16, 32, 64]
for k in (1, 2):
    fit = chi_growth_fit(v, ShapeMap.abs(2), (k,), ns, Domain.interval(-1, 1))
    print(f"order {k}: sup |D chi_n| ~ {fit.constant:.3g} n^{fit.exponent:.3f}")

one = ScalarField.from_1d(np.ones_like, np.zeros_like)
norms = cutoff_error_norms(one, v, ShapeMap.abs(1), 2, ns, build_interval_mesh(-1, 1, 64))
for n in ns:
    print(f"n = {n:3d}  ||(1 - chi_n) f||_X = {norms[n]:.4f}")
