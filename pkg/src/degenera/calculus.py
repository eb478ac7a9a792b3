"""Weighted norms, identity residuals, traces and inequality margins.

Identities are tested against a battery of compactly supported bumps. Every
product ``d^alpha(v^k phi)`` is expanded analytically with the Leibniz rule
over the declared derivatives of ``v`` and ``phi``, so residuals measure
quadrature error and nothing else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special

from . import combinatorics as cb
from .cutoff import CutoffFamily, TransitionProfile, build_transition, chi_eval
from .errors import HypothesisError, InvalidArgument, SingularEvaluationError
from .geometry import (
    Domain,
    Mesh,
    QuadratureRule,
    as_points,
    evaluate_on,
    insert_nodes,
    integrate,
    integrate_radial,
    refine,
    sample_points,
    sphere_area,
)
from .weights import (
    One,
    RadialPower,
    ShapeMap,
    WeightFamily,
    WeightFunction,
    hypothesis_check,
    minimal_sigma,
    window_value,
)

IDENTITY_TOL = 1e-6
SLACK = 1e-8


# --------------------------------------------------------------------------
# fields


@dataclass
class ScalarField:
    """A field ``x -> f(x)`` with candidate derivatives keyed by multi-index.

    Evaluators take ``(n, d)`` point arrays. ``derivatives[alpha]`` is the
    candidate ``D_v^alpha f`` (or the classical derivative when it exists).
    """

    value: Callable
    derivatives: dict = field(default_factory=dict)
    singular_points: tuple = ()
    dim: int = 1

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.value(as_points(x, self.dim)), dtype=float)

    def d(self, alpha) -> Callable:
        alpha = tuple(alpha)
        if cb.order(alpha) == 0:
            return self.value
        try:
            return self.derivatives[alpha]
        except KeyError:
            raise InvalidArgument(f"field has no declared derivative {alpha}") from None

    @classmethod
    def from_1d(cls, f, *derivs, singular_points=()) -> "ScalarField":
        """Wrap functions of a 1D array: ``derivs[k-1]`` is the k-th derivative."""
        ders = {(k + 1,): (lambda g: lambda x: g(x[:, 0]))(g) for k, g in enumerate(derivs)}
        return cls(lambda x: f(x[:, 0]), ders, tuple(singular_points), 1)

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(lambda x: c * self.value(x),
                           {a: (lambda g: lambda x: c * g(x))(g) for a, g in self.derivatives.items()},
                           self.singular_points, self.dim)


def _field_fn(f) -> Callable:
    if isinstance(f, (ScalarField, WeightFunction)):
        return f
    if callable(f):
        return f
    c = float(f)
    return lambda x: np.full(np.asarray(x).shape[0], c)


# --------------------------------------------------------------------------
# test-function battery


def _bump_derivative(t: np.ndarray, k: int) -> np.ndarray:
    """k-th derivative of ``exp(-1/(1 - t^2))`` (zero for ``|t| >= 1``)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    if not inside.any():
        return out
    ti = t[inside]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        g = -1.0 / (1.0 - ti * ti)
        e = np.exp(g)
        if k == 0:
            out[inside] = e
            return out

        def inner(beta):
            j = beta[0]
            f = math.factorial(j)
            return -0.5 * f * ((1.0 - ti) ** (-j - 1) + (-1.0) ** j * (1.0 + ti) ** (-j - 1))

        vals = cb.chain_rule([e] * (k + 1), inner, (k,))
    out[inside] = np.where(np.isfinite(vals), vals, 0.0)
    return out


@dataclass(frozen=True)
class TestFunction:
    """Tensor-product bump ``A prod_i psi((x_i - c_i) / r)`` supported in a cube."""

    center: tuple
    radius: float
    amplitude: float = 1.0

    __test__ = False  # not a pytest class

    def derivative(self, x: np.ndarray, alpha) -> np.ndarray:
        c = np.asarray(self.center)
        out = np.full(x.shape[0], self.amplitude)
        for i, a in enumerate(alpha):
            out = out * _bump_derivative((x[:, i] - c[i]) / self.radius, a) / self.radius**a
        return out

    def __call__(self, x):
        return self.derivative(as_points(x, len(self.center)), (0,) * len(self.center))


@dataclass
class TestFunctionBattery:
    """Localized bumps at every cell center, three radii each."""

    functions: list
    domain: Domain
    breakpoints: tuple = ()
    order: int = 4

    __test__ = False


def _fits(domain: Domain, c: np.ndarray, r: float) -> bool:
    if domain.kind == "interval":
        return domain.a < c[0] - r and c[0] + r < domain.b
    if domain.kind == "disk":
        return np.linalg.norm(c) + r * math.sqrt(len(c)) < domain.radius
    return bool(np.all(c - r > domain.a) and np.all(c + r < domain.b))


def build_battery(mesh: Mesh, scales=(1.0, 3.0, 9.0), seed: int | None = None,
                  breakpoints=(), order: int = 4) -> TestFunctionBattery:
    """Bumps centred at each cell center with radii ``scale * cell size``.

    Radii are shrunk to keep each support strictly inside the domain.
    ``seed`` draws amplitudes in ``[0.5, 2]``; without it amplitudes are 1.
    """
    rng = np.random.Generator(np.random.Philox(seed)) if seed is not None else None
    centers = mesh.cell_centers()
    sizes = np.abs(mesh.cell_measures()) ** (1.0 / mesh.dim)
    dom = mesh.domain
    funcs = []
    for c, h in zip(centers, sizes):
        for s in scales:
            r = s * h
            while r > 1e-14 * dom.diameter and not _fits(dom, c, r):
                r *= 0.5
            if not _fits(dom, c, r):
                continue
            amp = float(rng.uniform(0.5, 2.0)) if rng is not None else 1.0
            funcs.append(TestFunction(tuple(map(float, c)), float(r), amp))
    return TestFunctionBattery(funcs, dom, tuple(breakpoints), order)


def _support_rule(phi: TestFunction, breakpoints, rule: QuadratureRule, cells: int = 64):
    """Composite Gauss rule on the support cube of ``phi``.

    On the line the per-cell order is raised to 10: the bump's flat tails
    otherwise leave a 1e-10 floor on the identity residuals.
    """
    d = len(phi.center)
    t, w = special.roots_legendre(max(rule.order, 10) if d == 1 else rule.order)
    axes = []
    for i in range(d):
        lo, hi = phi.center[i] - phi.radius, phi.center[i] + phi.radius
        nodes = np.linspace(lo, hi, cells + 1)
        extra = [b[i] if np.ndim(b) else b for b in breakpoints]
        extra = [e for e in extra if lo < e < hi]
        # geometric nodes toward interior singular points
        for e in extra:
            span = max(e - lo, hi - e)
            geo = span * np.geomspace(1e-6, 1.0, 24)
            extra = extra + list(e - geo) + list(e + geo)
        nodes = np.unique(np.clip(np.concatenate([nodes, extra]), lo, hi))
        a, b = nodes[:-1], nodes[1:]
        pts = (0.5 * (b - a))[:, None] * t[None, :] + (0.5 * (a + b))[:, None]
        wts = (0.5 * (b - a))[:, None] * w[None, :]
        axes.append((pts.ravel(), wts.ravel()))
    if d == 1:
        return axes[0][0].reshape(-1, 1), axes[0][1]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    wts = np.prod(np.stack([g.ravel() for g in wgrids]), axis=0)
    return pts, wts


# --------------------------------------------------------------------------
# reports


@dataclass
class ResidualReport:
    """Largest identity residual over the battery.

    ``relative`` is the largest per-test ratio ``|LHS - RHS| / scale_t``
    where ``scale_t`` is the larger of the two sides integrated in absolute
    value.
    """

    residual: float
    scale: float
    relative: float
    per_test_function: list = field(default_factory=list)

    def to_row(self, kind: str, alpha) -> dict:
        return {"kind": kind, "alpha": "".join(map(str, alpha)), "residual": self.residual,
                "scale": self.scale, "relative": self.relative,
                "holds": self.relative <= IDENTITY_TOL}


@dataclass
class MarginReport:
    lhs: float
    rhs: float
    constant_used: float
    margin: float
    holds: bool
    details: dict = field(default_factory=dict)

    def to_row(self, kind: str) -> dict:
        return {"kind": kind, "lhs": self.lhs, "rhs": self.rhs, "constant": self.constant_used,
                "margin": self.margin, "holds": self.holds}


def _margin(lhs: float, rhs: float, constant: float, tol: float = SLACK, **details) -> MarginReport:
    margin = constant * rhs - lhs
    scale = max(abs(lhs), abs(constant * rhs))
    return MarginReport(lhs, rhs, constant, margin, bool(margin >= -tol * scale), details)


# --------------------------------------------------------------------------
# norms


def weighted_norm(f, w, p: float, mesh: Mesh, rule: QuadratureRule | None = None,
                  detect_divergence: bool = False) -> float:
    """``(int |f w|^p)^(1/p)`` by composite quadrature.

    With ``detect_divergence`` the integral is recomputed on two uniform
    refinements of ``mesh``; sustained growth above 10% per level returns
    ``math.inf``.
    """
    if not p >= 1:
        raise InvalidArgument(f"p must lie in [1, inf), got {p}")
    f, w = _field_fn(f), _field_fn(w)

    def integrand(x):
        return np.abs(f(x) * w(x)) ** p

    val = integrate(integrand, mesh, rule)
    if detect_divergence:
        m1 = refine(mesh)
        vals = [val, integrate(integrand, m1, rule), integrate(integrand, refine(m1), rule)]
        if vals[1] > 1.1 * vals[0] and vals[2] > 1.1 * vals[1]:
            return math.inf
        val = vals[-1]
    return val ** (1.0 / p)


def sobolev_norm(f: ScalarField, family: WeightFamily, p: float, mesh: Mesh,
                 rule: QuadratureRule | None = None) -> float:
    """``(sum_{|alpha| <= m} ||D_v^alpha f||^p_{L^p_{w_alpha}})^(1/p)``."""
    total = 0.0
    for alpha in family.indices():
        g = f.d(alpha)
        total += weighted_norm(g, lambda x, a=alpha: family.weight(a, x), p, mesh, rule) ** p
    return total ** (1.0 / p)


# --------------------------------------------------------------------------
# identity residuals


def _leibniz_power_phi(v: WeightFunction, k: int, phi: TestFunction, alpha, x) -> np.ndarray:
    """``d^alpha (v^k phi)`` expanded over the declared derivatives."""
    out = np.zeros(x.shape[0])
    for beta in cb.sub_indices(alpha):
        coeff = cb.binom(alpha, beta)
        out += coeff * v.power_derivative(x, beta, k) * phi.derivative(x, cb.sub(alpha, beta))
    return out


def _run_battery(battery, rule, sides, label):
    rule = rule or QuadratureRule(dim=battery.domain.dim)
    rows = []
    worst_abs, worst_rel, worst_scale = 0.0, 0.0, 0.0
    for idx, phi in enumerate(battery.functions):
        pts, wts = _support_rule(phi, battery.breakpoints, rule)
        try:
            lhs_vals, rhs_vals = sides(phi, pts)
        except SingularEvaluationError as exc:
            raise SingularEvaluationError(f"{label}: test function {idx} ({phi}): {exc}", exc.point) from exc
        for arr in (lhs_vals, rhs_vals):
            bad = ~np.isfinite(arr)
            if bad.any():
                pt = tuple(map(float, pts[bad][0]))
                raise SingularEvaluationError(f"{label}: test function {idx} ({phi}) singular at {pt}", pt)
        lhs = float(np.sum(lhs_vals * wts))
        rhs = float(np.sum(rhs_vals * wts))
        scale = max(float(np.sum(np.abs(lhs_vals) * wts)), float(np.sum(np.abs(rhs_vals) * wts)))
        res = abs(lhs - rhs)
        rel = res / scale if scale > 0 else 0.0
        rows.append({"index": idx, "center": phi.center, "radius": phi.radius,
                     "lhs": lhs, "rhs": rhs, "residual": res, "relative": rel})
        if rel > worst_rel:
            worst_rel, worst_scale = rel, scale
        worst_abs = max(worst_abs, res)
    if worst_scale == 0.0 and rows:
        worst_scale = max(max(abs(r["lhs"]), abs(r["rhs"])) for r in rows)
    return ResidualReport(worst_abs, worst_scale, worst_rel, rows)


def weak_derivative_residual(f, g_candidate, v: WeightFunction, alpha, battery: TestFunctionBattery,
                             rule: QuadratureRule | None = None) -> ResidualReport:
    """Residual of ``int f d^a(v^(|a|+1) phi) = (-1)^|a| int v^(|a|+1) phi g``.

    A small relative residual certifies ``g_candidate`` as the weak
    derivative ``D_v^alpha f`` on the battery.
    """
    alpha = cb.check_multi_index(alpha)
    if cb.order(alpha) < 1:
        raise InvalidArgument("the weak derivative needs |alpha| >= 1")
    if cb.order(alpha) > battery.order:
        raise InvalidArgument("battery derivatives do not reach the requested order")
    f, g = _field_fn(f), _field_fn(g_candidate)
    k = cb.order(alpha) + 1
    sign = (-1.0) ** cb.order(alpha)

    def sides(phi, x):
        lhs = f(x) * _leibniz_power_phi(v, k, phi, alpha, x)
        rhs = sign * v.power_derivative(x, cb.zero(v.dim), k) * phi.derivative(x, cb.zero(v.dim)) * g(x)
        return lhs, rhs

    return _run_battery(battery, rule, sides, "weak derivative")


def leibniz_residual(f: ScalarField, v: WeightFunction, m: int, alpha, battery: TestFunctionBattery,
                     rule: QuadratureRule | None = None) -> ResidualReport:
    """Residual of the product rule for ``v^(m+1) f`` in the classical weak sense.

    Tests ``(-1)^|a| int v^(m+1) f d^a phi = int phi sum_b C(a,b) D_v^b f d^(a-b) v^(m+1)``.
    """
    alpha = cb.check_multi_index(alpha)
    if cb.order(alpha) > m:
        raise InvalidArgument(f"|alpha| = {cb.order(alpha)} exceeds m = {m}")
    sign = (-1.0) ** cb.order(alpha)
    betas = cb.sub_indices(alpha)
    dfs = {b: f.d(b) for b in betas}

    def sides(phi, x):
        lhs = sign * v.power_derivative(x, cb.zero(v.dim), m + 1) * f(x) * phi.derivative(x, alpha)
        rhs = np.zeros(x.shape[0])
        for b in betas:
            rhs += cb.binom(alpha, b) * dfs[b](x) * v.power_derivative(x, cb.sub(alpha, b), m + 1)
        return lhs, rhs * phi.derivative(x, cb.zero(v.dim))

    return _run_battery(battery, rule, sides, "leibniz")


def ibp_residual(h: ScalarField, f: ScalarField, v: WeightFunction, alpha, mesh: Mesh,
                 rule: QuadratureRule | None = None, a_tilde: ScalarField | None = None) -> ResidualReport:
    """Residual of ``int h D^a(a f) = -int a f D_v^a h`` with ``a = a_tilde v^3``.

    ``D^a(a f)`` is expanded as ``f d^a a + a D_v^a f``. Raises
    :class:`HypothesisError` when ``v`` is unbounded or ``a_tilde`` is not a
    bounded C^1 field on the domain.
    """
    alpha = cb.check_multi_index(alpha)
    if cb.order(alpha) != 1:
        raise InvalidArgument("integration by parts is stated for |alpha| = 1")
    d = v.dim
    i = alpha.index(1)
    if a_tilde is None:
        a_tilde = ScalarField(lambda x: np.ones(x.shape[0]), {alpha: lambda x: np.zeros(x.shape[0])}, dim=d)
    pts = sample_points(mesh.domain, avoid=list(v.zero_set))
    vv = np.abs(v(pts))
    if not (np.isfinite(vv).all() and vv.max() < 1e12):
        raise HypothesisError("weight is not bounded on the domain", condition="v_bounded")
    at, dat = a_tilde(pts), a_tilde.d(alpha)(pts)
    if not (np.isfinite(at).all() and np.isfinite(dat).all() and np.abs(at).max() < 1e12 and np.abs(dat).max() < 1e12):
        raise HypothesisError("a_tilde is not a bounded C^1 field", condition="a_tilde_cb1")

    def a(x):
        return a_tilde(x) * v(x) ** 3

    def da(x):
        return a_tilde.d(alpha)(x) * v(x) ** 3 + 3.0 * a_tilde(x) * v(x) ** 2 * v.derivative(x, alpha)

    pts_q, wts = mesh.quadrature(rule)
    lhs_vals = evaluate_on(lambda x: h(x) * (f(x) * da(x) + a(x) * f.d(alpha)(x)), pts_q)
    rhs_vals = evaluate_on(lambda x: -a(x) * f(x) * h.d(alpha)(x), pts_q)
    lhs = float(np.sum(np.sum(lhs_vals * wts, axis=1)))
    rhs = float(np.sum(np.sum(rhs_vals * wts, axis=1)))
    scale = max(float(np.sum(np.abs(lhs_vals) * wts)), float(np.sum(np.abs(rhs_vals) * wts)))
    res = abs(lhs - rhs)
    return ResidualReport(res, scale, res / scale if scale > 0 else 0.0,
                          [{"lhs": lhs, "rhs": rhs, "direction": i}])


# --------------------------------------------------------------------------
# traces


@dataclass
class TraceResult:
    points: np.ndarray
    values: np.ndarray
    norm: float
    mode: str


def _floor_band(domain: Domain) -> Domain:
    if domain.kind == "interval":
        L = domain.b - domain.a
        return Domain.interval(domain.a + 0.1 * L, domain.b - 0.1 * L)
    if domain.kind == "disk":
        return Domain.disk(0.9 * domain.radius)
    L = domain.b - domain.a
    return Domain.square(domain.a + 0.1 * L, domain.b - 0.1 * L)


def trace_eval(f, v: WeightFunction, mode: str, mesh: Mesh, p: float = 2.0) -> TraceResult:
    """Boundary values of ``f`` (``tr1``) or ``v^2 f`` (``tr2``) and their L^p norm.

    ``tr1`` needs ``|v|`` bounded below near the boundary; ``tr2`` needs ``v``
    and ``grad v`` bounded. Where the boundary value is not finite it is
    replaced by the linear extrapolation from the two nearest mesh nodes
    (1D) or two inward points at the local mesh spacing (2D).
    """
    f = _field_fn(f)
    domain = mesh.domain
    if mode == "tr1":
        rep = hypothesis_check("floor_29", v, {"domain": domain, "K": _floor_band(domain)})
        if not rep.holds:
            raise HypothesisError(
                f"tr1 needs |v| bounded below near the boundary (floor_29); violated at {rep.witness['point']}",
                rep, "floor_29")
        g = f
    elif mode == "tr2":
        if not v.is_bounded_c1(domain):
            raise HypothesisError("tr2 needs v and grad v bounded (C_b^1)", condition="C_b^1")

        def g(x):
            with np.errstate(invalid="ignore", divide="ignore"):
                return v(x) ** 2 * f(x)
    else:
        raise InvalidArgument(f"unknown trace mode {mode!r}")

    bidx = mesh.boundary_nodes()
    bpts = mesh.nodes[bidx]
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.asarray(g(bpts), dtype=float)
    for j in np.flatnonzero(~np.isfinite(vals)):
        x0 = bpts[j]
        if mesh.dim == 1:
            order = np.argsort(np.abs(mesh.nodes[:, 0] - x0[0]))
            x1, x2 = mesh.nodes[order[1]], mesh.nodes[order[2]]
        else:
            others = np.linalg.norm(mesh.nodes - x0, axis=1)
            h = np.min(others[others > 0])
            inward = -x0 / max(np.linalg.norm(x0), 1e-300) if domain.kind == "disk" else np.zeros_like(x0)
            x1, x2 = x0 + h * inward, x0 + 2 * h * inward
        g1, g2 = g(x1.reshape(1, -1))[0], g(x2.reshape(1, -1))[0]
        t1, t2 = np.linalg.norm(x1 - x0), np.linalg.norm(x2 - x0)
        vals[j] = g1 - t1 * (g2 - g1) / (t2 - t1)
    if mesh.dim == 1:
        norm = float(np.sum(np.abs(vals) ** p) ** (1.0 / p))
    else:
        norm = _boundary_edge_norm(mesh, bidx, vals, p)
    return TraceResult(bpts, vals, norm, mode)


def _boundary_edge_norm(mesh, bidx, vals, p):
    lookup = {int(n): k for k, n in enumerate(bidx)}
    total = 0.0
    seen = set()
    for cell in mesh.cells:
        for i, j in ((cell[0], cell[1]), (cell[1], cell[2]), (cell[2], cell[0])):
            if i in lookup and j in lookup:
                key = (min(i, j), max(i, j))
                if key in seen:
                    continue
                seen.add(key)
                length = np.linalg.norm(mesh.nodes[i] - mesh.nodes[j])
                total += 0.5 * length * (abs(vals[lookup[i]]) ** p + abs(vals[lookup[j]]) ** p)
    return float(total ** (1.0 / p))


# --------------------------------------------------------------------------
# inequalities


def sphere_moment(p: float, d: int) -> float:
    """``int_{S^(d-1)} sum_i |omega_i|^p`` (equals the sphere area at ``p = 2``)."""
    if d == 1:
        return 2.0
    one = 2.0 * math.pi ** ((d - 1) / 2.0) * math.gamma((p + 1) / 2.0) / math.gamma((d + p) / 2.0)
    return d * one


def _radial_lp(g: Callable, p: float, d: int, R: float, vector: bool) -> float:
    """L^p norm over the ball of a radial scalar (``vector=False``) or of
    ``g(r) * x/|x|`` measured componentwise (``vector=True``)."""
    raw = integrate_radial(lambda r: np.abs(g(r)) ** p, d, R, check_divergence=False) / sphere_area(d)
    weight = sphere_moment(p, d) if vector else sphere_area(d)
    return (weight * raw) ** (1.0 / p)


def poincare_slab_constant(width: float, p: float) -> float:
    """Dirichlet Poincare constant ``width / pi_p`` of a slab (``pi_2 = pi``)."""
    if p == 1:
        pi_p = 2.0
    else:
        pi_p = 2.0 * math.pi * (p - 1.0) ** (1.0 / p) / (p * math.sin(math.pi / p))
    return width / pi_p


def _certify_gradient_window(v, p, d, domain, sigma):
    if sigma is None:
        sigma = minimal_sigma(v, p, domain)
    if not isinstance(v, (RadialPower, One)):
        rep = hypothesis_check("gradient_71", v, {"p": p, "domain": domain, "sigma": sigma})
        if not rep.holds:
            raise HypothesisError(f"gradient bound |grad v|_p <= sigma |v|/|x| fails (gradient_71): {rep.witness}",
                                  rep, "gradient_71")
    elif isinstance(v, RadialPower) and sigma < minimal_sigma(v, p, domain) * (1 - 1e-12):
        rep = hypothesis_check("gradient_71", v, {"p": p, "domain": domain, "sigma": sigma})
        raise HypothesisError("gradient bound fails for the supplied sigma (gradient_71)", rep, "gradient_71")
    rep = hypothesis_check("window_72", v, {"sigma": sigma, "p": p, "d": d})
    if not rep.holds:
        raise HypothesisError(
            f"dimension window 0 < 2 sigma p / (d - p) < 1 violated (window_72): value {rep.constant:.6g}",
            rep, "window_72")
    return sigma, rep.constant


def _null_trace(f: ScalarField, points: np.ndarray) -> None:
    vals = np.abs(f(points))
    if vals.max() > 1e-10:
        raise HypothesisError("test field does not vanish on the boundary", condition="null_trace")


def inequality_check(kind: str, v: WeightFunction, f: ScalarField, p: float, d: int,
                     params: dict | None = None) -> MarginReport:
    """Margin of one of the weighted Hardy-type inequalities.

    Kinds
    -----
    hardy
        ``||f/|x| ||_p <= p/(d-p) ||grad f||_p`` for radial ``f`` on the ball.
    kebiche_73
        ``||f grad(v^2)||_p <= 2 sigma p/(d-p-2 sigma p) ||v^2 grad f||_p``,
        radial ``v`` and ``f``; gradient bound and window certified first.
    oned_72
        The line version with constant ``2 sigma p/(p-1-2 sigma p)``; ``f`` is
        a 1D field on ``params["mesh"]``.
    poincare_cor
        ``||v^2 f||_p <= C ||v^2 grad f||_p`` with ``C`` from ``params`` or
        ``C_P (1 + K)``, ``C_P`` the slab Poincare constant and ``K`` the
        constant of the matching Hardy-type inequality.

    Radial fields are 1D :class:`ScalarField` objects in the variable ``r``
    with their first derivative declared. Vector norms are componentwise:
    ``||F||_p^p = sum_i ||F_i||_p^p``.
    """
    params = dict(params or {})
    tol = params.get("tolerance", SLACK)
    R = float(params.get("R", 1.0))
    if kind == "hardy":
        if not d > p:
            raise HypothesisError("Hardy's inequality needs d > p", condition="hardy_dimension")
        _null_trace(f, np.array([[R]]))
        fr, df = f.value, f.d((1,))
        lhs = _radial_lp(lambda r: fr(r.reshape(-1, 1)) / r, p, d, R, vector=False)
        rhs = _radial_lp(lambda r: df(r.reshape(-1, 1)), p, d, R, vector=True)
        return _margin(lhs, rhs, p / (d - p), tol)

    if kind in ("kebiche_73", "poincare_cor") and d >= 2:
        if not isinstance(v, (RadialPower, One)):
            raise InvalidArgument("the radial reduction needs a radial weight")
        ball = Domain.disk(R)
        sigma, window = _certify_gradient_window(v, p, d, ball, params.get("sigma"))
        K = 2.0 * sigma * p / (d - p - 2.0 * sigma * p)
        _null_trace(f, np.array([[R]]))
        beta = v.exponent if isinstance(v, RadialPower) else 0.0
        fr, df = f.value, f.d((1,))
        v2 = lambda r: r ** (2 * beta)  # noqa: E731
        rhs = _radial_lp(lambda r: v2(r) * df(r.reshape(-1, 1)), p, d, R, vector=True)
        if kind == "kebiche_73":
            dv2 = lambda r: 2 * beta * r ** (2 * beta - 1)  # noqa: E731
            lhs = _radial_lp(lambda r: fr(r.reshape(-1, 1)) * dv2(r), p, d, R, vector=True)
            return _margin(lhs, rhs, K, tol, sigma=sigma, window=window)
        c_p = poincare_slab_constant(2.0 * R, p)
        C = params.get("C_Omega", c_p * (1.0 + K))
        lhs = _radial_lp(lambda r: v2(r) * fr(r.reshape(-1, 1)), p, d, R, vector=False)
        return _margin(lhs, rhs, C, tol, sigma=sigma, window=window, C_P=c_p, kebiche_constant=K)

    if kind in ("oned_72", "poincare_cor", "kebiche_73") and d == 1:
        mesh: Mesh = params.get("mesh")
        if mesh is None:
            raise InvalidArgument("the line inequalities need params['mesh']")
        sigma, window = _certify_gradient_window(v, p, 1, mesh.domain, params.get("sigma"))
        K = 2.0 * sigma * p / (p - 1.0 - 2.0 * sigma * p)
        _null_trace(f, mesh.nodes[mesh.boundary_nodes()])
        rule = params.get("rule")
        df = f.d((1,))
        v1 = (1,)
        rhs = weighted_norm(df, lambda x: v(x) ** 2, p, mesh, rule)
        if kind in ("oned_72", "kebiche_73"):
            lhs = weighted_norm(f, lambda x: 2.0 * v(x) * v.derivative(x, v1), p, mesh, rule)
            return _margin(lhs, rhs, K, tol, sigma=sigma, window=window)
        c_p = poincare_slab_constant(mesh.domain.width, p)
        C = params.get("C_Omega", c_p * (1.0 + K))
        lhs = weighted_norm(f, lambda x: v(x) ** 2, p, mesh, rule)
        return _margin(lhs, rhs, C, tol, sigma=sigma, window=window, C_P=c_p, kebiche_constant=K)

    raise InvalidArgument(f"unknown inequality kind {kind!r} for d={d}")


# --------------------------------------------------------------------------
# random test fields


def random_radial_polynomial(rng: np.random.Generator, R: float = 1.0, terms: int = 4) -> ScalarField:
    """``f(r) = (1 - (r/R)^2) sum_k c_k (r/R)^(2k)`` with standard normal ``c_k``."""
    c = rng.standard_normal(terms)
    P = np.polynomial.Polynomial
    q = P(np.ravel(np.column_stack([c, np.zeros(terms)]))[: 2 * terms - 1])
    poly = P([1.0, 0.0, -1.0]) * q
    poly = poly.convert(domain=[-1, 1], window=[-1, 1])
    dpoly = poly.deriv()
    return ScalarField.from_1d(lambda r: poly(r / R), lambda r: dpoly(r / R) / R)


def random_bump_field(rng: np.random.Generator, domain: Domain, max_bumps: int = 3) -> ScalarField:
    """Sum of 1..max_bumps random bumps supported inside an interval domain."""
    L = domain.b - domain.a
    bumps = []
    for _ in range(int(rng.integers(1, max_bumps + 1))):
        r = float(rng.uniform(0.05, 0.5)) * L / 2
        c = float(rng.uniform(domain.a + r, domain.b - r))
        bumps.append(TestFunction((c,), r * (1 - 1e-9), float(rng.normal())))

    def make(k):
        return lambda x: sum(b.derivative(x, (k,)) for b in bumps)

    return ScalarField(make(0), {(k,): make(k) for k in range(1, 4)}, (), 1)


# --------------------------------------------------------------------------
# density of cutoffs


def _level_crossings(v: WeightFunction, mesh: Mesh, levels) -> list:
    x = mesh.nodes[:, 0]
    vals = v(x)
    out = []
    for lev in levels:
        for target in (lev, -lev):
            g = vals - target
            for i in np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0):
                out.append(optimize.brentq(lambda t: float(v(np.array([t]))[0]) - target, x[i], x[i + 1]))
    return out


def cutoff_error_norms(f: ScalarField, v: WeightFunction, s: ShapeMap, p: float, n_list, mesh: Mesh,
                       rule: QuadratureRule | None = None, profile: TransitionProfile | None = None) -> dict:
    """``||f - chi_n f||`` in the weighted Sobolev norm for each ``n``.

    Derivatives of ``chi_n f`` follow the product rule
    ``sum_b C(a,b) D_v^b f d^(a-b) chi_n``. On interval meshes, nodes are
    inserted where ``|v| = 1/n`` and ``|v| = 1/(2n)`` so the transition
    layer is resolved.
    """
    if v.dim != 1:
        raise InvalidArgument("cutoff error norms are implemented on interval meshes")
    profile = profile or build_transition(min(s.m, 4))
    family = WeightFamily(v, s, p)
    out = {}
    for n in n_list:
        fam = CutoffFamily(profile, v, int(n))
        local = insert_nodes(mesh, _level_crossings(v, mesh, (1.0 / n, 0.5 / n)))
        total = 0.0
        for alpha in family.indices():
            def diff(x, alpha=alpha):
                val = f.d(alpha)(x).astype(float)
                for b in cb.sub_indices(alpha):
                    val = val - cb.binom(alpha, b) * f.d(b)(x) * chi_eval(fam, x, cb.sub(alpha, b))
                return val
            total += weighted_norm(diff, lambda x, a=alpha: family.weight(a, x), p, local, rule) ** p
        out[int(n)] = total ** (1.0 / p)
    return out
