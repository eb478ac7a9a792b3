"""Weighted Sobolev spaces with degenerate weights: norms, identities, inequalities and Galerkin solves."""

__version__ = "0.1.0"

from .errors import HypothesisError, InvalidArgument, NonConvergenceError, SingularEvaluationError
from .geometry import (
    Domain,
    Mesh,
    QuadratureRule,
    build_disk_mesh,
    build_interval_mesh,
    build_square_mesh,
    integrate,
    integrate_radial,
)
from .weights import (
    HypothesisReport,
    One,
    RadialPower,
    AffineTrig,
    Polynomial,
    GridSampled,
    ShapeMap,
    WeightFamily,
    hypothesis_check,
    minimal_sigma,
    validate_shape_map,
)
from .cutoff import CutoffFamily, build_transition, chi_eval, chi_growth_fit, multiindex_partitions
from .calculus import (
    ScalarField,
    build_battery,
    ibp_residual,
    inequality_check,
    leibniz_residual,
    sobolev_norm,
    trace_eval,
    weak_derivative_residual,
    weighted_norm,
)
from .fem import (
    CoefficientSet,
    FESpace,
    assemble,
    coercivity_check,
    divergence_study,
    estimate_poincare,
    nonintegrability_check,
    solve,
)
