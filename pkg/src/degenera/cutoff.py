"""Smooth cutoff profile ``eta`` and the family ``chi_n = eta(n v)``.

``eta`` vanishes on ``[-1/2, 1/2]``, equals 1 outside ``[-1, 1]`` and is
built from the logistic form of the exponential smoothstep

    G(u) = e(u) / (e(u) + e(1 - u)),   e(u) = exp(-1/u) (u > 0), 0 otherwise,

which equals ``1 / (1 + exp(1/u - 1/(1-u)))`` on ``(0, 1)``. Derivatives of
``chi_n`` are evaluated with the multiset-partition chain rule.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import combinatorics as cb
from .combinatorics import MultisetPartition, multiindex_partitions  # noqa: F401
from .errors import InvalidArgument
from .geometry import Domain, as_points
from .weights import ShapeMap, WeightFunction, _annulus_points

MAX_ORDER = 4


def _logistic_derivatives(y: np.ndarray, kmax: int) -> list:
    s, t = expit(y), expit(-y)
    st = s * t
    out = [s, st]
    if kmax >= 2:
        out.append(st * (t - s))
    if kmax >= 3:
        out.append(st * (1.0 - 6.0 * st))
    if kmax >= 4:
        out.append(st * (t - s) * (1.0 - 12.0 * st))
    return out[: kmax + 1]


def smoothstep(u, k: int = 0) -> np.ndarray:
    """``G^{(k)}(u)`` for the exponential smoothstep; exactly 0/1 off ``(0, 1)``."""
    if k > MAX_ORDER:
        raise InvalidArgument(f"smoothstep derivatives only up to order {MAX_ORDER}")
    shape = np.shape(u)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros_like(u) if k else (u >= 1.0).astype(float)
    inside = (u > 0.0) & (u < 1.0)
    if not inside.any():
        return out.reshape(shape)
    ui = u[inside]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        y = -(1.0 / ui - 1.0 / (1.0 - ui))
        if k == 0:
            out[inside] = expit(y)
            return out.reshape(shape)
        outer = _logistic_derivatives(y, k)

        def inner(g):
            j = g[0]
            f = math.factorial(j)
            return -((-1.0) ** j * f * ui ** (-j - 1) - f * (1.0 - ui) ** (-j - 1))

        vals = cb.chain_rule(outer, inner, (k,))
    out[inside] = np.where(np.isfinite(vals), vals, 0.0)
    return out.reshape(shape)


@dataclass(frozen=True)
class TransitionProfile:
    """The even profile ``eta(t) = G(2(|t| - 1/2))`` with tabulated derivative bounds."""

    inner_radius: float = 0.5
    outer_radius: float = 1.0
    derivative_sup: tuple = field(default=())

    def __call__(self, t, k: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        width = self.outer_radius - self.inner_radius
        u = (np.abs(t) - self.inner_radius) / width
        sign = np.where(t < 0, -1.0, 1.0) ** k
        return sign * smoothstep(u, k) / width**k


def build_transition(order_hint: int = MAX_ORDER) -> TransitionProfile:
    """Return the canonical profile with ``sup |eta^(k)|`` sampled at 10^4 points, ``k <= order_hint``."""
    if order_hint < 0 or order_hint > MAX_ORDER:
        raise InvalidArgument(f"order_hint must lie in [0, {MAX_ORDER}]")
    profile = TransitionProfile()
    t = np.linspace(0.5, 1.0, 10_000)
    sups = tuple(float(np.max(np.abs(profile(t, k)))) for k in range(order_hint + 1))
    return TransitionProfile(derivative_sup=sups)


@dataclass(frozen=True)
class CutoffFamily:
    """``chi_n(x) = eta(n v(x))``: 1 where ``|v| > 1/n``, 0 where ``|v| <= 1/(2n)``."""

    profile: TransitionProfile
    v: WeightFunction
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument(f"n must be a positive integer, got {self.n}")


def chi_eval(family: CutoffFamily, x, alpha) -> np.ndarray:
    """Evaluate ``d^alpha chi_n`` at the points ``x``.

    ``alpha = 0`` gives ``chi_n`` itself. For ``|alpha| >= 1`` the value is
    ``sum_k eta^(k)(n v) n^k sum_{|pi| = k} prod_B d^B v`` and is exactly
    zero wherever ``|v| <= 1/(2n)`` or ``|v| >= 1/n``.
    """
    v = family.v
    alpha = cb.check_multi_index(alpha)
    if len(alpha) != v.dim:
        raise InvalidArgument(f"multi-index {alpha} does not match dimension {v.dim}")
    k_max = cb.order(alpha)
    if k_max > v.order:
        raise InvalidArgument(f"derivative order {k_max} exceeds the weight's order {v.order}")
    if k_max > MAX_ORDER:
        raise InvalidArgument(f"cutoff derivatives only up to order {MAX_ORDER}")
    x = as_points(x, v.dim)
    n = float(family.n)
    t = n * v(x)
    if k_max == 0:
        return family.profile(t, 0)
    outer = [None] + [family.profile(t, k) * n**k for k in range(1, k_max + 1)]
    active = np.zeros(t.shape, dtype=bool)
    for k in range(1, k_max + 1):
        active |= outer[k] != 0.0
    out = np.zeros(t.shape)
    if active.any():
        xa = x[active]
        outer_a = [None] + [o[active] for o in outer[1:]]
        out[active] = cb.chain_rule(outer_a, lambda g: v.derivative(xa, g), alpha)
    return out


@dataclass
class GrowthFit:
    constant: float
    exponent: float
    sups: dict
    skipped: list
    warning: str | None = None


def chi_growth_fit(
    v: WeightFunction,
    s: ShapeMap,
    sigma,
    n_list,
    domain: Domain,
    profile: TransitionProfile | None = None,
) -> GrowthFit:
    """Fit ``sup |d^sigma chi_n| ~ C n^e`` over the annuli ``M_n \\ M_2n``.

    The supremum is sampled per ``n``; ``(C, e)`` come from a least-squares
    line in log-log coordinates. Values of ``n`` with an empty annulus are
    skipped; with fewer than two usable values no fit is made and a warning
    is attached.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 4:
        raise InvalidArgument("need at least 4 values of n for a growth fit")
    sigma = cb.check_multi_index(sigma)
    profile = profile or build_transition(min(cb.order(sigma), MAX_ORDER))
    sups, skipped = {}, []
    for n in n_list:
        x = _annulus_points(v, n, domain)
        if x.shape[0] == 0:
            skipped.append(n)
            continue
        sups[n] = float(np.max(np.abs(chi_eval(CutoffFamily(profile, v, n), x, sigma))))
    if len(sups) < 2:
        msg = f"empty annulus for n in {skipped}; no fit"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return GrowthFit(math.nan, math.nan, sups, skipped, msg)
    ns = np.array(sorted(sups), dtype=float)
    ys = np.array([sups[int(n)] for n in ns])
    slope, intercept = np.polyfit(np.log(ns), np.log(ys), 1)
    msg = f"empty annulus for n in {skipped}" if skipped else None
    if msg:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return GrowthFit(float(math.exp(intercept)), float(slope), sups, skipped, msg)
