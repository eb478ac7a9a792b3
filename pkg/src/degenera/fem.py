"""P1 Galerkin discretization of the degenerate elliptic problem.

The bilinear form is

    B(f, g) = int a_ij d_i f d_j g + int g (b . grad f) + int c f g,

with ``a = v^4 a~``, ``b = v^3 b~`` and ``c = v^2 c~``. The trial space uses
interior nodes only, so every discrete function vanishes on the boundary.
Since P1 functions are piecewise polynomial, ``D_v`` is the classical
gradient on them.

The energy space norm is ``||f||_X^2 = ||v^2 grad f||^2 + ||v f||^2``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import HypothesisError, InvalidArgument, NonConvergenceError, SingularEvaluationError
from .geometry import (
    Domain,
    Mesh,
    QuadratureRule,
    build_disk_mesh,
    integrate_radial,
    sample_points,
)
from .weights import HypothesisReport, One, RadialPower, WeightFunction, hypothesis_check

SAFETY = 0.99
DENSE_LIMIT = 2000
GAMMA_TOL = 1e-6


# --------------------------------------------------------------------------
# spaces


class FESpace:
    """Continuous P1 functions on ``mesh`` with zero boundary values."""

    def __init__(self, mesh: Mesh, rule: QuadratureRule | None = None):
        self.mesh = mesh
        self.rule = rule or QuadratureRule(dim=mesh.dim)
        interior = mesh.interior_nodes()
        self.dof_nodes = interior
        self.dof_of_node = np.full(mesh.n_nodes, -1, dtype=int)
        self.dof_of_node[interior] = np.arange(interior.size)
        J = mesh.jacobians()
        det = np.linalg.det(J)
        if np.any(det == 0):
            raise InvalidArgument(f"degenerate cell {int(np.flatnonzero(det == 0)[0])}")
        Jinv = np.linalg.inv(J)  # rows are gradients of barycentrics 1..d
        g = np.concatenate([-Jinv.sum(axis=1, keepdims=True), Jinv], axis=1)
        self.grads = g  # (nc, d+1, d)
        ref = self.rule.points
        self.basis = np.column_stack([1.0 - ref.sum(axis=1), ref])  # (nq, d+1)
        self.points, self.weights = mesh.quadrature(self.rule)

    @property
    def ndofs(self) -> int:
        return int(self.dof_nodes.size)

    def full(self, x: np.ndarray) -> np.ndarray:
        """Nodal vector from dof values (zeros on the boundary)."""
        u = np.zeros(self.mesh.n_nodes)
        u[self.dof_nodes] = x
        return u

    def interpolate(self, fn: Callable) -> np.ndarray:
        return np.asarray(fn(self.mesh.nodes[self.dof_nodes]), dtype=float)

    def values_at_quadrature(self, x: np.ndarray) -> np.ndarray:
        u = self.full(x)[self.mesh.cells]  # (nc, d+1)
        return u @ self.basis.T  # (nc, nq)

    def gradients(self, x: np.ndarray) -> np.ndarray:
        u = self.full(x)[self.mesh.cells]
        return np.einsum("ck,ckd->cd", u, self.grads)


# --------------------------------------------------------------------------
# coefficients


def _const(value: float) -> Callable:
    return lambda x: np.full(x.shape[0], float(value))


def _identity(d: int) -> Callable:
    return lambda x: np.broadcast_to(np.eye(d), (x.shape[0], d, d)).copy()


@dataclass
class CoefficientSet:
    """Reduced coefficients ``a~, b~, c~`` with load ``k`` and weight ``v``.

    ``a_tilde`` maps ``(n, d)`` points to ``(n, d, d)``; ``b_tilde`` to
    ``(n, d)`` or is ``None``; ``c_tilde`` and ``k`` map to ``(n,)``.
    ``div_b`` evaluates ``div(v^3 b~)``; when missing it is approximated by
    central differences. ``powers`` optionally describes every coefficient
    as ``coef * |x|^exponent`` for the exponent-arithmetic checks.
    """

    v: WeightFunction
    a_tilde: Callable
    c_tilde: Callable
    k: Callable
    b_tilde: Callable | None = None
    div_b: Callable | None = None
    a_symmetric: bool = True
    powers: dict | None = None
    label: str = ""

    @property
    def dim(self) -> int:
        return self.v.dim

    @property
    def symmetric(self) -> bool:
        return self.b_tilde is None and self.a_symmetric

    def a(self, x):
        return self.a_tilde(x) * (self.v(x) ** 4)[:, None, None]

    def b(self, x):
        if self.b_tilde is None:
            return np.zeros((x.shape[0], self.dim))
        return self.b_tilde(x) * (self.v(x) ** 3)[:, None]

    def c(self, x):
        return self.c_tilde(x) * self.v(x) ** 2

    def divergence_b(self, x):
        if self.b_tilde is None:
            return np.zeros(x.shape[0])
        if self.div_b is not None:
            return self.div_b(x)
        h = 1e-6
        out = np.zeros(x.shape[0])
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            out += (self.b(x + e)[:, i] - self.b(x - e)[:, i]) / (2 * h)
        return out

    @classmethod
    def constant(cls, v: WeightFunction, a: float = 1.0, c: float = 1.0, k=1.0, b=None) -> "CoefficientSet":
        """``a~ = a I``, ``c~ = c``, optional constant drift ``b~ = b`` (vector)."""
        d = v.dim
        kf = k if callable(k) else _const(k)
        bt = None
        if b is not None:
            bv = np.asarray(b, dtype=float).reshape(d)
            bt = lambda x: np.broadcast_to(bv, (x.shape[0], d)).copy()  # noqa: E731
        return cls(v, lambda x: a * _identity(d)(x), _const(c), kf, bt)

    @classmethod
    def example(cls, d: int = 2, m: int = 1, beta: float = 0.5) -> "CoefficientSet":
        """``-div(|x|^(8m) grad f) + |x|^(4m) f = |x|^(2m - beta)`` on the unit ball.

        Here ``v = |x|^(2m)``, ``a~ = I``, ``b~ = 0`` and ``c~ = 1``.
        """
        if m < 1:
            raise InvalidArgument("m must be a positive integer")
        ek = 2.0 * m - beta
        v = RadialPower(2.0 * m, d, order=2)

        def k(x):
            return np.linalg.norm(x, axis=1) ** ek

        powers = {"v": 2.0 * m, "a": (1.0, 8.0 * m), "b": None, "c": (1.0, 4.0 * m), "k": (1.0, ek), "d": d}
        return cls(v, _identity(d), _const(1.0), k, powers=powers,
                   label=f"example d={d} m={m} beta={beta:g}")

    @classmethod
    def from_powers(cls, d: int, v_exp: float, a=(1.0, None), c=(1.0, None), k=(1.0, 0.0),
                    b=None) -> "CoefficientSet":
        """Radial power coefficients ``coef * |x|^e``.

        ``a``, ``c`` default to the reduced form ``v^4 I`` and ``v^2``;
        ``b`` is ``(vector, exponent)`` or ``None``.
        """
        v = RadialPower(v_exp, d, order=2)
        ea = 4 * v_exp if a[1] is None else a[1]
        ec = 2 * v_exp if c[1] is None else c[1]

        def r(x):
            return np.linalg.norm(x, axis=1)

        a_t = lambda x: (a[0] * r(x) ** (ea - 4 * v_exp))[:, None, None] * _identity(d)(x)  # noqa: E731
        c_t = lambda x: c[0] * r(x) ** (ec - 2 * v_exp)  # noqa: E731
        k_f = lambda x: k[0] * r(x) ** k[1]  # noqa: E731
        b_t = div_b = None
        if b is not None:
            bv, eb = np.asarray(b[0], dtype=float), float(b[1])
            b_t = lambda x: bv[None, :] * (r(x) ** (eb - 3 * v_exp))[:, None]  # noqa: E731
            # div(bv |x|^eb) = eb |x|^(eb - 2) bv . x
            div_b = lambda x: eb * r(x) ** (eb - 2) * (x @ bv)  # noqa: E731
        powers = {"v": v_exp, "a": (a[0], ea), "b": None if b is None else (tuple(b[0]), b[1]),
                  "c": (c[0], ec), "k": tuple(k), "d": d}
        return cls(v, a_t, c_t, k_f, b_t, div_b, powers=powers, label="power form")


# --------------------------------------------------------------------------
# assembly


@dataclass
class AssembledSystem:
    matrix: sp.csr_matrix
    load: np.ndarray
    symmetric: bool
    gram: sp.csr_matrix
    space: FESpace
    coeffs: CoefficientSet
    load_bound: float = math.nan

    @property
    def ndofs(self) -> int:
        return self.matrix.shape[0]

    def export_coo(self, stream=None) -> str:
        """Coordinate listing ``row col value`` (one entry per line)."""
        m = self.matrix.tocoo()
        buf = stream or io.StringIO()
        for r, c, val in zip(m.row, m.col, m.data):
            buf.write(f"{r} {c} {val:.17g}\n")
        return buf.getvalue() if stream is None else ""


def _scatter(space: FESpace, local: np.ndarray) -> sp.csr_matrix:
    cells = space.mesh.cells
    dof = space.dof_of_node[cells]  # (nc, d+1)
    rows = np.repeat(dof[:, :, None], dof.shape[1], axis=2)
    cols = np.repeat(dof[:, None, :], dof.shape[1], axis=1)
    keep = (rows >= 0) & (cols >= 0)
    n = space.ndofs
    return sp.coo_matrix((local[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()


def _check_finite(arr: np.ndarray, what: str):
    bad = ~np.isfinite(arr)
    if bad.any():
        cell = int(np.argwhere(bad)[0][0])
        raise SingularEvaluationError(f"non-finite {what} on cell {cell}", cell)


def _eval_q(space: FESpace, fn: Callable, shape_tail=()) -> np.ndarray:
    pts = space.points.reshape(-1, space.mesh.dim)
    with np.errstate(all="ignore"):
        vals = np.asarray(fn(pts), dtype=float)
    return vals.reshape(space.points.shape[:2] + shape_tail)


def _stiffness_local(space, A):
    # A: (nc, nq, d, d); entry [c, r, s] = sum_q w grad(l_s)^T A grad(l_r)
    g = space.grads
    return np.einsum("cq,cqij,csi,crj->crs", space.weights, A, g, g)


def _mass_local(space, c):
    B = space.basis
    return np.einsum("cq,cq,qr,qs->crs", space.weights, c, B, B)


def weighted_forms(space: FESpace, v: WeightFunction):
    """``(S, Q, L)`` with ``S = int v^4 grad.grad``, ``Q = int v^4 phi psi``, ``L = int v^2 phi psi``."""
    d = space.mesh.dim
    vq = _eval_q(space, v)
    _check_finite(vq, "weight")
    A = (vq**4)[:, :, None, None] * np.eye(d)[None, None]
    S = _scatter(space, _stiffness_local(space, A))
    Q = _scatter(space, _mass_local(space, vq**4))
    L = _scatter(space, _mass_local(space, vq**2))
    return S, Q, L


def load_dual_bound(coeffs: CoefficientSet, space: FESpace) -> float:
    """Upper bound ``||k / v||_{L^2}`` for the dual norm of ``g -> int k g``.

    Cauchy-Schwarz gives ``|int k g| <= ||k/v|| ||v g|| <= ||k/v|| ||g||_X``.
    """
    kv = _eval_q(space, lambda x: coeffs.k(x) / coeffs.v(x))
    _check_finite(kv, "k/v")
    return float(math.sqrt(np.sum(space.weights * kv**2)))


def assemble(coeffs: CoefficientSet, space: FESpace) -> AssembledSystem:
    """Matrix ``M[r, c] = B(phi_c, phi_r)``, load ``int k phi_r`` and the X-norm Gram matrix."""
    if coeffs.dim != space.mesh.dim:
        raise InvalidArgument("coefficient and mesh dimensions differ")
    A = _eval_q(space, coeffs.a, (space.mesh.dim, space.mesh.dim))
    _check_finite(A, "diffusion coefficient")
    local = _stiffness_local(space, A)
    c = _eval_q(space, coeffs.c)
    _check_finite(c, "reaction coefficient")
    local += _mass_local(space, c)
    if coeffs.b_tilde is not None:
        b = _eval_q(space, coeffs.b, (space.mesh.dim,))
        _check_finite(b, "drift coefficient")
        # int phi_r (b . grad phi_s)
        local += np.einsum("cq,qr,cqi,csi->crs", space.weights, space.basis, b, space.grads)
    M = _scatter(space, local)
    k = _eval_q(space, coeffs.k)
    _check_finite(k, "load")
    loc_load = np.einsum("cq,cq,qr->cr", space.weights, k, space.basis)
    dof = space.dof_of_node[space.mesh.cells]
    keep = dof >= 0
    load = np.bincount(dof[keep], weights=loc_load[keep], minlength=space.ndofs)
    S, _, L = weighted_forms(space, coeffs.v)
    return AssembledSystem(M, load, coeffs.symmetric, (S + L).tocsr(), space, coeffs,
                           load_dual_bound(coeffs, space))


# --------------------------------------------------------------------------
# coercivity


@dataclass
class CoercivityReport:
    case: str
    mu: float
    sigma: float
    gamma: float
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.gamma > 0) != (self.case != "none"):
            raise ValueError("gamma > 0 exactly when a case holds")


def _certified_inf(values: np.ndarray) -> float:
    # exact for constant samples, conservative otherwise
    lo = float(np.min(values))
    if np.ptp(values) == 0.0:
        return lo
    return lo * SAFETY if lo > 0 else lo / SAFETY


def _case1_gamma(mu, sigma, drift, d):
    lhs = math.sqrt(d) * drift
    if not (mu > 0 and sigma > 0 and lhs < 2 * math.sqrt(mu * sigma)):
        return 0.0
    lo, hi = 0.0, min(mu, sigma)
    if lhs < 2 * math.sqrt((mu - hi) * (sigma - hi)):
        return hi
    while hi - lo > GAMMA_TOL * min(mu, sigma):
        mid = 0.5 * (lo + hi)
        if lhs < 2 * math.sqrt((mu - mid) * (sigma - mid)):
            lo = mid
        else:
            hi = mid
    return lo


def coercivity_check(coeffs: CoefficientSet, domain: Domain, C_Omega: float | None = None,
                     n_samples: int = 4000) -> CoercivityReport:
    """Certify coercivity of ``B`` by the four sufficient conditions.

    Cases are tried in the order 1, 3a, 3b, 2 and the first that holds is
    returned. ``mu`` is the sampled infimum of the smallest eigenvalue of
    ``a~`` and ``sigma`` that of ``c~``; both are exact for constant fields and
    scaled by 0.99 otherwise. Case 2 is only tried when ``C_Omega`` is given.
    """
    d = coeffs.dim
    x = sample_points(domain, n_samples, avoid=list(coeffs.v.zero_set))
    at = coeffs.a_tilde(x)
    sym = 0.5 * (at + np.transpose(at, (0, 2, 1)))
    mu = _certified_inf(np.linalg.eigvalsh(sym)[:, 0])
    sigma = _certified_inf(coeffs.c_tilde(x))
    if coeffs.b_tilde is None:
        drift, drift4, div = 0.0, 0.0, np.zeros(x.shape[0])
    else:
        bt = coeffs.b_tilde(x)
        drift = float(np.max(np.abs(bt)))
        drift4 = float(np.max(np.abs(bt / coeffs.v(x)[:, None])))
        div = coeffs.divergence_b(x)
    details = {"drift": drift, "sqrt_d_drift": math.sqrt(d) * drift}

    g1 = _case1_gamma(mu, sigma, drift, d)
    details["case1"] = g1 > 0
    if g1 > 0:
        return CoercivityReport("case1", mu, sigma, g1, details)
    details["case3a"] = bool(np.all(div <= 0) and sigma > 0 and mu > 0)
    if details["case3a"]:
        return CoercivityReport("case3a", mu, sigma, min(mu, sigma), details)
    s3 = _certified_inf(coeffs.c_tilde(x) - 0.5 * div / coeffs.v(x) ** 2)
    details["sigma3b"] = s3
    details["case3b"] = bool(s3 > 0 and mu > 0)
    if details["case3b"]:
        return CoercivityReport("case3b", mu, s3, min(mu, s3), details)
    if C_Omega is not None:
        g2 = min(mu - C_Omega * math.sqrt(d) * drift4, sigma)
        details["case2"] = g2 > 0
        if g2 > 0:
            return CoercivityReport("case2", mu, sigma, g2, details)
    return CoercivityReport("none", mu, sigma, 0.0, details)


# --------------------------------------------------------------------------
# solvers


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    residual_norm: float
    energy_norm: float
    bilinear_energy: float
    bound: float
    bound_ok: bool
    method: str
    gamma: float = math.nan


def _jacobi(M):
    d = M.diagonal().copy()
    if np.any(d <= 0):
        d = np.abs(d)
        d[d == 0] = 1.0
    return 1.0 / np.sqrt(d)


def solve(system: AssembledSystem, method: str = "auto", tol: float = 1e-10, max_iter: int = 20000,
          gamma: float | None = None) -> SolveReport:
    """Solve ``M x = load`` and check the Lax-Milgram estimate.

    Iterative methods run on the diagonally scaled system
    ``D^-1/2 M D^-1/2 y = D^-1/2 load``; graded weights make raw entries
    span dozens of orders of magnitude. The reported residual is
    ``||M x - load|| / ||load||``.
    """
    M, b = system.matrix, system.load
    n = system.ndofs
    if method == "auto":
        method = "dense_lu" if n < DENSE_LIMIT else ("cg" if system.symmetric else "bicgstab")
    if method == "cg" and not system.symmetric:
        raise InvalidArgument("cg needs a symmetric system")
    bnorm = float(np.linalg.norm(b))
    iters = 0
    if bnorm == 0.0:
        x = np.zeros(n)
    elif method == "dense_lu":
        s = _jacobi(M)
        Ms = (M.multiply(s[:, None]).multiply(s[None, :])).toarray()
        x = s * sla.lu_solve(sla.lu_factor(Ms), s * b)
        iters = 1
    elif method in ("cg", "bicgstab"):
        s = _jacobi(M)
        Ms = sp.diags(s) @ M @ sp.diags(s)
        counter = [0]

        def cb(_):
            counter[0] += 1

        solver = spla.cg if method == "cg" else spla.bicgstab
        y, info = solver(Ms.tocsr(), s * b, rtol=tol, atol=0.0, maxiter=max_iter, callback=cb)
        iters = counter[0]
        if info != 0:
            res = float(np.linalg.norm(Ms @ y - s * b) / np.linalg.norm(s * b))
            raise NonConvergenceError(f"{method} did not converge in {max_iter} iterations", iters, res)
        x = s * y
    else:
        raise InvalidArgument(f"unknown solver {method!r}")
    res = float(np.linalg.norm(M @ x - b) / bnorm) if bnorm > 0 else 0.0
    energy = float(math.sqrt(max(x @ (system.gram @ x), 0.0)))
    bil = float(math.sqrt(max(x @ (M @ x), 0.0)))
    if gamma is None:
        gamma = coercivity_check(system.coeffs, system.space.mesh.domain).gamma
    bound = system.load_bound / gamma if gamma > 0 else math.inf
    return SolveReport(x, iters, res, energy, bil, bound, bool(energy <= 1.05 * bound), method, gamma)


# --------------------------------------------------------------------------
# Poincare constant


def estimate_poincare(space: FESpace, v: WeightFunction, p: float = 2.0, tol: float = 1e-8,
                      max_iter: int = 10000) -> float:
    """``1 / sqrt(lambda_min)`` for the pencil ``(int v^4 grad.grad, int v^4 phi psi)``.

    Inverse power iteration with shift 0 from the all-ones vector, stopped
    when the Rayleigh quotient changes by less than ``tol`` (relative).
    """
    if p != 2:
        raise InvalidArgument("the discrete Poincare constant is computed for p = 2 only")
    S, Q, _ = weighted_forms(space, v)
    lu = spla.splu(S.tocsc())
    x = np.ones(space.ndofs)
    lam_old = math.inf
    for it in range(1, max_iter + 1):
        y = lu.solve(Q @ x)
        y /= math.sqrt(y @ (Q @ y))
        lam = float((y @ (S @ y)) / (y @ (Q @ y)))
        if abs(lam - lam_old) <= tol * abs(lam):
            return 1.0 / math.sqrt(lam)
        lam_old, x = lam, y
    raise NonConvergenceError("inverse iteration stagnated", max_iter, abs(lam - lam_old))


# --------------------------------------------------------------------------
# non-integrability hypotheses


def _radial_integral(exponent: float, d: int) -> float:
    return integrate_radial(lambda r: r**exponent, d, 1.0)


def nonintegrability_check(coeffs: CoefficientSet, domain: Domain | None = None) -> HypothesisReport:
    """Check the four hypotheses forcing a non-locally-integrable solution.

    Coefficients must be radial powers ``coef * |x|^e`` (``coeffs.powers``)
    on the unit ball around the origin, with ``v = |x|^ev``:

    1. ``a v^-4`` bounded and ``grad a v^-3`` locally bounded,
    2. ``b v^-3`` bounded and ``grad b v^-2`` locally bounded,
    3. ``c v^-2`` bounded,
    4. ``k v^-1`` square integrable, ``k >= 0`` and ``k v^-2`` not locally integrable.

    Each flag comes from exponent arithmetic; the integrability claims are
    cross-checked by graded radial quadrature with divergence detection.
    """
    P = coeffs.powers
    if not P:
        raise InvalidArgument("nonintegrability_check needs coefficients in radial power form")
    if domain is None:
        domain = Domain.disk(1.0) if coeffs.dim == 2 else Domain.interval(-1.0, 1.0)
    d, ev = int(P["d"]), float(P["v"])
    flags, details = {}, {}

    def smooth(e):  # |x|^e is C^1 near 0 (or constant)
        return e == 0 or e >= 1

    ca, ea = P["a"]
    flags["a_bounds"] = bool(ea - 4 * ev >= 0 and (ea == 0 or ea - 1 - 3 * ev >= 0) and smooth(ea))
    if P.get("b") is None:
        flags["b_bounds"] = True
    else:
        _, eb = P["b"]
        flags["b_bounds"] = bool(eb - 3 * ev >= 0 and (eb == 0 or eb - 1 - 2 * ev >= 0) and smooth(eb))
    _, ec = P["c"]
    flags["c_bounded"] = bool(ec - 2 * ev >= 0)
    ck, ek = P["k"]
    # int |k/v|^2 = |S| int r^(2(ek - ev) + d - 1) dr
    e_l2 = 2 * (ek - ev)
    l2_finite = e_l2 + d > 0
    l1_exp = ek - 2 * ev
    l1_infinite = l1_exp + d <= 0
    q_l2 = _radial_integral(e_l2, d)
    q_l1 = _radial_integral(l1_exp, d)
    details.update({"k_over_v_sq_integral": q_l2, "k_over_v2_integral": q_l1,
                    "k_over_v_sq_exponent": e_l2, "k_over_v2_exponent": l1_exp})
    if math.isfinite(q_l2) != l2_finite or math.isinf(q_l1) != l1_infinite:
        details["quadrature_disagrees"] = True
    flags["k_l2"] = bool(l2_finite)
    flags["k_nonneg"] = bool(ck >= 0)
    flags["k_not_l1loc"] = bool(l1_infinite)
    floor = hypothesis_check("floor_29", coeffs.v, {"domain": domain, "K": Domain.disk(0.5) if d == 2
                                                     else Domain.interval(-0.5, 0.5)})
    flags["floor"] = floor.holds
    hyp4 = flags["k_l2"] and flags["k_nonneg"] and flags["k_not_l1loc"]
    details["hypotheses"] = {"1": flags["a_bounds"], "2": flags["b_bounds"], "3": flags["c_bounded"], "4": hyp4}
    holds = all(flags.values())
    details["flags"] = flags
    details["not_locally_integrable"] = holds
    witness = None
    if not holds:
        failed = [k for k, ok in flags.items() if not ok]
        witness = {"failed": failed, "point": (0.0,) * d}
    return HypothesisReport("nonintegrability", holds, witness, None, details)


# --------------------------------------------------------------------------
# divergence study


STUDY_COLUMNS = ("level", "rings", "dofs", "mass", "mass_ratio", "energy", "energy_rel_change", "gamma", "case")


@dataclass
class StudyTable:
    rows: list
    verdicts: dict | None
    aborted: str | None = None
    columns: tuple = STUDY_COLUMNS


def local_mass(space: FESpace, x: np.ndarray, radius: float) -> float:
    """``int_{|y| < radius} |f_h|`` by masking quadrature points."""
    vals = np.abs(space.values_at_quadrature(x))
    mask = np.linalg.norm(space.points, axis=2) < radius
    return float(np.sum(space.weights * vals * mask))


def divergence_study(coeffs: CoefficientSet, levels, K_radius: float = 0.25, R: float = 1.0,
                     growth_threshold: float = 1.3, stability_threshold: float = 0.05,
                     method: str = "auto", tol: float = 1e-10) -> StudyTable:
    """Solve on successively graded disk meshes and track local mass and energy.

    ``levels`` is a list of ``(rings, sectors, q)``. With three or more
    levels the verdicts report whether the mass grows by at least
    ``growth_threshold`` per level and whether the energy changed by at most
    ``stability_threshold`` between the last two levels.
    """
    domain = Domain.disk(R)
    coer = coercivity_check(coeffs, domain)
    if coer.case == "none":
        raise HypothesisError("no coercivity case holds", condition="coercivity")
    rows, bounds = [], []
    aborted = None
    for lvl, (rings, sectors, q) in enumerate(levels):
        space = FESpace(build_disk_mesh(R, rings, sectors, q))
        system = assemble(coeffs, space)
        try:
            rep = solve(system, method, tol, gamma=coer.gamma)
        except NonConvergenceError as exc:
            aborted = f"level {lvl}: {exc}"
            break
        mass = local_mass(space, rep.solution, K_radius)
        prev = rows[-1] if rows else None
        rows.append({
            "level": lvl, "rings": rings, "dofs": space.ndofs, "mass": mass,
            "mass_ratio": mass / prev["mass"] if prev and prev["mass"] > 0 else math.nan,
            "energy": rep.energy_norm,
            "energy_rel_change": abs(rep.energy_norm - prev["energy"]) / prev["energy"] if prev else math.nan,
            "gamma": coer.gamma, "case": coer.case,
        })
        bounds.append((rep.energy_norm, rep.bound, rep.bound_ok))
    verdicts = None
    if len(rows) >= 3 and aborted is None:
        ratios = [r["mass_ratio"] for r in rows[1:]]
        verdicts = {
            "min_mass_ratio": min(ratios),
            "mass_growth": all(r >= growth_threshold for r in ratios),
            "last_energy_change": rows[-1]["energy_rel_change"],
            "energy_stable": rows[-1]["energy_rel_change"] <= stability_threshold,
            "bound_ok": all(b[2] for b in bounds),
            "bound_ratio_max": max(b[0] / b[1] for b in bounds),
        }
        verdicts["holds"] = verdicts["mass_growth"] and verdicts["energy_stable"] and verdicts["bound_ok"]
    return StudyTable(rows, verdicts, aborted)
