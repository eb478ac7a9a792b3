"""Weight functions, weight families, shape maps and hypothesis checks.

A weight function ``v`` carries its derivatives analytically and declares
its zero set. All hypothesis checks work on deterministic sample plans that
keep a relative distance of 1e-8 from the declared zeros.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from . import combinatorics as cb
from .errors import InvalidArgument, SingularEvaluationError
from .geometry import Domain, as_points, radial_directions, sample_points

SAFETY = 1.01
EXCLUSION = 1e-8


# --------------------------------------------------------------------------
# shape maps


@dataclass(frozen=True)
class ShapeMap:
    """A map ``s`` on the multi-indices of order at most ``m``.

    ``kind="abs"`` is ``s(alpha) = |alpha|``; ``kind="table"`` stores
    explicit values for every multi-index of ``pi_m``.
    """

    kind: str = "abs"
    m: int = 1
    d: int = 1
    table: dict = field(default_factory=dict, compare=False)

    @classmethod
    def abs(cls, m: int, d: int = 1) -> "ShapeMap":
        return cls("abs", m, d)

    @classmethod
    def from_function(cls, fn: Callable, m: int, d: int = 1) -> "ShapeMap":
        return cls("table", m, d, {a: float(fn(a)) for a in cb.multi_indices(m, d)})

    def __call__(self, alpha) -> float:
        alpha = tuple(alpha)
        if self.kind == "abs":
            return float(sum(alpha))
        try:
            return self.table[alpha]
        except KeyError:
            raise InvalidArgument(f"shape map not defined at {alpha}") from None


@dataclass
class HypothesisReport:
    """Outcome of a hypothesis check.

    ``witness`` is populated whenever ``holds`` is false; ``constant`` is the
    constant extracted by the check (C_K, C, delta, sigma, ...).
    """

    kind: str
    holds: bool
    witness: dict | None = None
    constant: float | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError("a failing report needs a witness")


def validate_shape_map(s: ShapeMap, m: int | None = None) -> HypothesisReport:
    """Check ``s(alpha) <= |alpha|`` and ``s(alpha-beta) + s(beta) <= s(alpha)`` on ``pi_m``."""
    m = s.m if m is None else m
    if m < 0:
        raise InvalidArgument(f"maximal order must be non-negative, got {m}")
    tol = 1e-12
    # superadditivity first: a constant map breaks it before the bound
    for alpha in cb.multi_indices(m, s.d):
        for beta in cb.sub_indices(alpha):
            lhs = s(cb.sub(alpha, beta)) + s(beta)
            if lhs > s(alpha) + tol:
                return HypothesisReport(
                    "shape_map", False,
                    {"condition": "superadditive", "alpha": alpha, "beta": beta, "lhs": lhs, "s_alpha": s(alpha)},
                )
    for alpha in cb.multi_indices(m, s.d):
        if s(alpha) > cb.order(alpha) + tol:
            return HypothesisReport(
                "shape_map", False,
                {"condition": "bounded", "alpha": alpha, "s_alpha": s(alpha), "order": cb.order(alpha)},
            )
        if s(alpha) < 0:
            return HypothesisReport("shape_map", False, {"condition": "nonnegative", "alpha": alpha})
    return HypothesisReport("shape_map", True)


# --------------------------------------------------------------------------
# weight functions


class WeightFunction:
    """A C^m weight ``v`` with analytic derivatives and a declared zero set."""

    kind = "abstract"

    def __init__(self, dim: int, order: int, zero_set=()):
        if dim < 1:
            raise InvalidArgument(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self.order = int(order)
        self.zero_set = tuple(np.atleast_1d(np.asarray(z, dtype=float)) for z in zero_set)

    def __call__(self, x) -> np.ndarray:
        return self.derivative(x, cb.zero(self.dim))

    def derivative(self, x, alpha) -> np.ndarray:
        alpha = cb.check_multi_index(alpha)
        if len(alpha) != self.dim:
            raise InvalidArgument(f"multi-index {alpha} does not match dimension {self.dim}")
        if cb.order(alpha) > self.order:
            raise InvalidArgument(f"derivative order {cb.order(alpha)} exceeds weight order {self.order}")
        return self._derivative(as_points(x, self.dim), alpha)

    def _derivative(self, x, alpha):
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        x = as_points(x, self.dim)
        return np.column_stack([self._derivative(x, cb.unit(self.dim, i)) for i in range(self.dim)])

    def power_derivative(self, x, beta, k: int) -> np.ndarray:
        """``d^beta (v^k)`` for a non-negative integer ``k``."""
        x = as_points(x, self.dim)
        beta = tuple(beta)
        vals = self._derivative(x, cb.zero(self.dim))
        if cb.order(beta) == 0:
            return vals**k
        outer = [cb.falling_factorial(k, j) * vals ** max(k - j, 0) if j <= k else np.zeros_like(vals)
                 for j in range(cb.order(beta) + 1)]
        return cb.chain_rule(outer, lambda g: self.derivative(x, g), beta)

    def is_bounded_c1(self, domain: Domain) -> bool:
        pts = sample_points(domain, avoid=self.zero_set)
        vals = np.abs(self(pts))
        grads = np.abs(self.gradient(pts)) if self.order >= 1 else np.zeros_like(pts)
        return bool(np.isfinite(vals).all() and np.isfinite(grads).all()
                    and vals.max() < 1e12 and grads.max() < 1e12)

    def to_dict(self) -> dict:
        raise NotImplementedError


class One(WeightFunction):
    """The constant weight ``v = 1``."""

    kind = "one"

    def __init__(self, dim: int = 1, order: int = 4):
        super().__init__(dim, order, ())

    def _derivative(self, x, alpha):
        return np.ones(x.shape[0]) if cb.order(alpha) == 0 else np.zeros(x.shape[0])

    def to_dict(self):
        return {"kind": "one", "dimension": self.dim, "m": self.order, "zero_set": "empty"}


class RadialPower(WeightFunction):
    """``v(x) = |x|**beta`` in R^d; its zero set is the origin when ``beta > 0``."""

    kind = "radial_power"

    def __init__(self, exponent: float, dim: int = 1, order: int = 2):
        zeros = [np.zeros(dim)] if exponent > 0 else []
        super().__init__(dim, order, zeros)
        self.exponent = float(exponent)

    def _derivative(self, x, alpha):
        u = np.sum(x * x, axis=1)
        half = 0.5 * self.exponent
        n = cb.order(alpha)
        if n == 0:
            # negative exponents are infinite at the origin, by design
            with np.errstate(divide="ignore"):
                return u**half
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = [cb.falling_factorial(half, j) * u ** (half - j) for j in range(n + 1)]

        def inner(g):
            k = cb.order(g)
            if k == 1:
                return 2.0 * x[:, g.index(1)]
            if k == 2 and max(g) == 2:
                return np.full(x.shape[0], 2.0)
            return np.zeros(x.shape[0])

        return cb.chain_rule(outer, inner, alpha)

    def to_dict(self):
        return {"kind": "radial_power", "exponent": self.exponent, "dimension": self.dim,
                "m": self.order, "zero_set": "origin" if self.zero_set else "empty"}


class AffineTrig(WeightFunction):
    """``v(x) = a + b sin(c x_axis)``; nonvanishing when ``|a| > |b|``."""

    kind = "affine_trig"

    def __init__(self, a: float, b: float, c: float, dim: int = 1, order: int = 4, axis: int = 0, zero_set=None):
        if zero_set is None:
            if abs(a) <= abs(b):
                raise InvalidArgument("a + b sin(cx) may vanish; pass its zero set explicitly")
            zero_set = ()
        super().__init__(dim, order, zero_set)
        self.a, self.b, self.c, self.axis = float(a), float(b), float(c), int(axis)

    def _derivative(self, x, alpha):
        n = cb.order(alpha)
        if n == 0:
            return self.a + self.b * np.sin(self.c * x[:, self.axis])
        if alpha[self.axis] != n:
            return np.zeros(x.shape[0])
        return self.b * self.c**n * np.sin(self.c * x[:, self.axis] + 0.5 * np.pi * n)

    def to_dict(self):
        return {"kind": "affine_trig", "a": self.a, "b": self.b, "c": self.c,
                "dimension": self.dim, "m": self.order,
                "zero_set": [list(map(float, z)) for z in self.zero_set] or "empty"}


class Polynomial(WeightFunction):
    """A 1D polynomial weight ``sum_k coeffs[k] x**k``; zeros are its real roots."""

    kind = "polynomial"

    def __init__(self, coeffs, order: int = 4):
        self.poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        roots = self.poly.roots() if self.poly.degree() > 0 else []
        real = sorted({float(np.real(r)) for r in roots if abs(np.imag(r)) < 1e-12})
        super().__init__(1, order, [[r] for r in real])
        self.coeffs = tuple(float(c) for c in coeffs)

    def _derivative(self, x, alpha):
        return self.poly.deriv(alpha[0])(x[:, 0]) if alpha[0] else self.poly(x[:, 0])

    def to_dict(self):
        return {"kind": "polynomial", "coefficients": list(self.coeffs), "dimension": 1,
                "m": self.order, "zero_set": [z[0] for z in self.zero_set] or "empty"}


class GridSampled(WeightFunction):
    """A 1D weight given by samples, interpolated by a cubic spline (``m <= 3``)."""

    kind = "grid_sampled"

    def __init__(self, xs, values, zero_set=(), order: int = 2):
        if order > 3:
            raise InvalidArgument("a cubic spline carries at most 3 derivatives")
        super().__init__(1, order, [[z] for z in np.atleast_1d(zero_set)])
        self.spline = CubicSpline(np.asarray(xs, float), np.asarray(values, float))
        self.xs = np.asarray(xs, float)
        self.values = np.asarray(values, float)

    def _derivative(self, x, alpha):
        return self.spline(x[:, 0], alpha[0])

    def to_dict(self):
        return {"kind": "grid_sampled", "dimension": 1, "m": self.order,
                "zero_set": [z[0] for z in self.zero_set] or "empty",
                "samples": len(self.xs)}


def weight_from_dict(spec: dict) -> WeightFunction:
    """Build a weight from its table form (the ``[weight]`` config section)."""
    kind = spec.get("kind")
    d = int(spec.get("dimension", 1))
    m = int(spec.get("m", 2))
    if kind == "one":
        return One(d, order=m)
    if kind == "radial_power":
        return RadialPower(float(spec["exponent"]), d, order=m)
    if kind == "affine_trig":
        zs = spec.get("zero_set")
        zs = None if zs in (None, "empty") else [[z] if np.isscalar(z) else z for z in zs]
        return AffineTrig(spec["a"], spec["b"], spec["c"], d, order=m, zero_set=zs)
    if kind == "polynomial":
        return Polynomial(spec["coefficients"], order=m)
    if kind == "grid_sampled":
        return GridSampled(spec["x"], spec["values"], spec.get("zero_set", ()), order=m)
    raise InvalidArgument(f"unknown weight kind {kind!r}")


# --------------------------------------------------------------------------
# weight families


class WeightFamily:
    """The family ``{w_alpha}`` over ``pi_m``.

    By default ``w_alpha = |v|^(s(alpha)+1)``; ``overrides`` replaces single
    entries with independent weight functions.
    """

    def __init__(self, base_v: WeightFunction, s: ShapeMap, p: float = 2.0, overrides: dict | None = None):
        self.v = base_v
        self.s = s
        self.p = float(p)
        self.m = s.m
        self.overrides = dict(overrides or {})

    def indices(self):
        return cb.multi_indices(self.m, self.v.dim)

    def is_shape_form(self, alpha) -> bool:
        return tuple(alpha) not in self.overrides

    def exponent(self, alpha) -> float:
        return self.s(alpha) + 1.0

    def weight(self, alpha, x) -> np.ndarray:
        alpha = tuple(alpha)
        if alpha in self.overrides:
            return self.overrides[alpha](x)
        return np.abs(self.v(x)) ** self.exponent(alpha)

    @property
    def w(self) -> Callable:
        return lambda x: self.weight(cb.zero(self.v.dim), x)


# --------------------------------------------------------------------------
# sigma and hypothesis checks


def _zeros_of(v: WeightFunction):
    return [z for z in v.zero_set]


def _sigma_ratio(v: WeightFunction, p: float, x: np.ndarray):
    vals = v(x)
    if np.any(vals == 0):
        bad = x[np.flatnonzero(vals == 0)[0]]
        raise SingularEvaluationError(f"weight vanishes at sample point {tuple(bad)}", tuple(bad))
    grad = v.gradient(x)
    gnorm = np.sum(np.abs(grad) ** p, axis=1) ** (1.0 / p)
    return gnorm * np.linalg.norm(x, axis=1) / np.abs(vals)


def radial_sigma(exponent: float, p: float, d: int) -> float:
    """Exact ``sup |grad v|_p |x| / |v|`` for ``v = |x|^beta`` in R^d."""
    if p <= 2:
        return abs(exponent) * d ** (1.0 / p - 0.5)
    return abs(exponent)


def minimal_sigma(v: WeightFunction, p: float, domain: Domain, sample_grid: np.ndarray | None = None) -> float:
    """Smallest ``sigma`` with ``|grad v(x)|_p <= sigma |v(x)| / |x|``.

    Exact for radial powers and constant weights; otherwise the sampled
    supremum times a 1.01 safety factor.
    """
    if isinstance(v, One):
        return 0.0
    if isinstance(v, RadialPower):
        return radial_sigma(v.exponent, p, v.dim)
    x = sample_grid if sample_grid is not None else sample_points(domain, avoid=_zeros_of(v) + [np.zeros(v.dim)])
    x = as_points(x, v.dim)
    x = x[np.linalg.norm(x, axis=1) > 0]
    return SAFETY * float(np.max(_sigma_ratio(v, p, x)))


def _annulus_points(v: WeightFunction, n: float, domain: Domain, per_annulus: int = 1000) -> np.ndarray:
    """Sample points with ``1/(2n) < |v| <= 1/n``."""
    lo, hi = 1.0 / (2.0 * n), 1.0 / n
    if isinstance(v, RadialPower) and v.exponent > 0:
        rlo, rhi = lo ** (1.0 / v.exponent), hi ** (1.0 / v.exponent)
        r = np.geomspace(rlo, rhi, per_annulus)[1:]
        if v.dim == 1:
            x = np.concatenate([-r, r]).reshape(-1, 1)
        else:
            dirs = radial_directions(v.dim, 2 * v.dim + 2)
            x = (r[:, None, None] * dirs[None]).reshape(-1, v.dim)
        return x[domain.contains(x)]
    x = sample_points(domain, n=20000, avoid=_zeros_of(v), exclusion=EXCLUSION)
    if v.dim == 1 and v.zero_set:
        # geometric refinement near each zero keeps shrinking annuli resolved
        extra = []
        for z in v.zero_set:
            t = np.geomspace(1e-6 / n, 1.0, 20 * per_annulus)
            extra += [z[0] - t, z[0] + t]
        x = np.vstack([x, np.concatenate(extra).reshape(-1, 1)])
        x = x[domain.contains(x)]
    a = np.abs(v(x))
    return x[(a > lo) & (a <= hi)]


def hypothesis_check(kind: str, v: WeightFunction, params: dict | None = None, sample_plan=None) -> HypothesisReport:
    """Certify one of the pointwise hypotheses on a weight.

    ``kind`` is one of ``domination_42`` (``|v|^(|a|+1) <= C_K |w_a|`` on a
    compact set), ``annulus_54`` (``|d^s v| <= C n^(s(s)-1)`` on the
    annuli ``M_n \\ M_2n``), ``floor_29`` (``|v| > delta`` off a compact
    set), ``gradient_71`` (``|grad v|_p <= sigma |v| / |x|``) and
    ``window_72`` (``0 < 2 sigma p / (d - p) < 1``).
    """
    params = dict(params or {})
    checks = {
        "domination_42": _check_domination,
        "annulus_54": _check_annulus,
        "floor_29": _check_floor,
        "gradient_71": _check_gradient,
        "window_72": _check_window,
    }
    if kind not in checks:
        raise InvalidArgument(f"unknown hypothesis kind {kind!r}")
    return checks[kind](v, params, sample_plan)


def _require(params, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise InvalidArgument(f"missing parameters: {', '.join(missing)}")


def _check_domination(v, params, plan):
    _require(params, "family", "K")
    family: WeightFamily = params["family"]
    K: Domain = params["K"]
    constants = {}
    worst = 0.0
    for alpha in family.indices():
        sups = []
        argmax = None
        for excl in (1e-4, EXCLUSION):
            x = plan if plan is not None and excl == EXCLUSION else sample_points(K, avoid=_zeros_of(v), exclusion=excl)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.abs(v(x)) ** (cb.order(alpha) + 1) / np.abs(family.weight(alpha, x))
            ratio = np.where(np.isnan(ratio), 0.0, ratio)
            i = int(np.argmax(ratio))
            sups.append(float(ratio[i]))
            argmax = x[i]
        coarse, fine = sups
        if not np.isfinite(fine) or fine > 10.0 * max(coarse, 1e-300) and fine > 1.0:
            return HypothesisReport(
                "domination_42", False,
                {"alpha": alpha, "point": tuple(map(float, argmax)), "ratio": fine, "coarse_ratio": coarse},
            )
        constants[alpha] = fine
        worst = max(worst, fine)
    return HypothesisReport("domination_42", True, constant=SAFETY * worst, details={"per_alpha": constants})


def _check_annulus(v, params, plan):
    _require(params, "s", "n_list", "domain")
    s: ShapeMap = params["s"]
    n_list = list(params["n_list"])
    domain: Domain = params["domain"]
    m = int(params.get("m", min(s.m, v.order)))
    per_n = {}
    skipped = []
    for n in n_list:
        x = _annulus_points(v, n, domain)
        if x.shape[0] == 0:
            skipped.append(n)
            continue
        c_n = 0.0
        for sig in cb.multi_indices(m, v.dim)[1:]:
            vals = np.abs(v.derivative(x, sig)) / float(n) ** (s(sig) - 1.0)
            c_n = max(c_n, float(vals.max()))
        per_n[n] = c_n
    if len(per_n) < 2:
        return HypothesisReport("annulus_54", True, constant=max(per_n.values(), default=0.0),
                                details={"per_n": per_n, "skipped": skipped, "vacuous": True})
    ns = np.array(sorted(per_n))
    cs = np.array([per_n[n] for n in ns])
    tiny = cs.max() * 1e-14 + 1e-300
    slope = float(np.polyfit(np.log(ns), np.log(cs + tiny), 1)[0])
    details = {"per_n": per_n, "skipped": skipped, "growth_slope": slope}
    if slope > 0.1:
        n_bad = int(ns[np.argmax(cs)])
        return HypothesisReport("annulus_54", False, {"n": n_bad, "constant_n": per_n[n_bad], "growth_slope": slope},
                                details=details)
    return HypothesisReport("annulus_54", True, constant=SAFETY * float(cs.max()), details=details)


def _outside(K, x):
    if K is None:
        return np.ones(x.shape[0], dtype=bool)
    return ~K.contains(x, closed=True)


def _check_floor(v, params, plan):
    if "domain" not in params:
        raise InvalidArgument("missing parameters: domain")
    domain: Domain = params["domain"]
    K: Domain | None = params.get("K")
    for z in v.zero_set:
        if z.size != v.dim:
            continue
        zp = z.reshape(1, -1)
        if domain.contains(zp, closed=True)[0] and _outside(K, zp)[0]:
            return HypothesisReport("floor_29", False, {"point": tuple(map(float, z)), "value": float(v(zp)[0])})
    x = plan if plan is not None else sample_points(domain, avoid=_zeros_of(v))
    x = as_points(x, v.dim)
    x = x[_outside(K, x)]
    if x.shape[0] == 0:
        return HypothesisReport("floor_29", True, constant=math.inf, details={"empty_complement": True})
    a = np.abs(v(x))
    i = int(np.argmin(a))
    if not a[i] > 1e-12:
        return HypothesisReport("floor_29", False, {"point": tuple(map(float, x[i])), "value": float(a[i])})
    return HypothesisReport("floor_29", True, constant=float(a[i]), details={"argmin": tuple(map(float, x[i]))})


def _check_gradient(v, params, plan):
    _require(params, "p", "domain")
    p = float(params["p"])
    domain = params["domain"]
    x = plan if plan is not None else sample_points(domain, avoid=_zeros_of(v) + [np.zeros(v.dim)])
    x = as_points(x, v.dim)
    x = x[np.linalg.norm(x, axis=1) > 0]
    ratio = _sigma_ratio(v, p, x)
    i = int(np.argmax(ratio))
    sigma_min = minimal_sigma(v, p, domain, x)
    sigma = params.get("sigma")
    if sigma is not None and ratio[i] > float(sigma) * (1 + 1e-12):
        return HypothesisReport("gradient_71", False,
                                {"point": tuple(map(float, x[i])), "ratio": float(ratio[i]), "sigma": float(sigma)},
                                constant=sigma_min)
    return HypothesisReport("gradient_71", True, constant=sigma_min, details={"sampled_sup": float(ratio[i])})


def window_value(sigma: float, p: float, d: int) -> float:
    """``2 sigma p / (d - p)``, or ``2 sigma p / (p - 1)`` on the line."""
    denom = (p - 1.0) if d == 1 else (d - p)
    if denom <= 0:
        return math.inf
    return 2.0 * sigma * p / denom


def _check_window(v, params, plan):
    _require(params, "sigma", "p", "d")
    sigma, p, d = float(params["sigma"]), float(params["p"]), int(params["d"])
    val = window_value(sigma, p, d)
    if 0.0 < val < 1.0:
        return HypothesisReport("window_72", True, constant=val)
    return HypothesisReport("window_72", False, {"value": val, "sigma": sigma, "p": p, "d": d}, constant=val)
