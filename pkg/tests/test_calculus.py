import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from degenera.calculus import (
    ScalarField,
    build_battery,
    cutoff_error_norms,
    ibp_residual,
    inequality_check,
    leibniz_residual,
    poincare_slab_constant,
    random_bump_field,
    random_radial_polynomial,
    sobolev_norm,
    sphere_moment,
    trace_eval,
    weak_derivative_residual,
    weighted_norm,
)
from degenera.errors import HypothesisError, InvalidArgument
from degenera.geometry import Domain, build_disk_mesh, build_interval_mesh, sphere_area
from degenera.weights import AffineTrig, One, Polynomial, RadialPower, ShapeMap, WeightFamily

V2 = RadialPower(2.0, 1, order=3)
INV_SQ = ScalarField.from_1d(lambda x: x**-2.0, lambda x: -2 * x**-3.0, singular_points=(0.0,))


@pytest.fixture(scope="module")
def graded():
    return build_interval_mesh(-1, 1, 32, q=3, c=0.0)


@pytest.fixture(scope="module")
def battery(graded):
    return build_battery(graded, breakpoints=(0.0,))


# norms


def test_weighted_norm_inverse_square(graded):
    assert weighted_norm(INV_SQ, V2, 2, graded) == pytest.approx(math.sqrt(2), abs=1e-6)


def test_weighted_norm_zero(graded):
    assert weighted_norm(lambda x: np.zeros(len(x)), V2, 2, graded) == 0.0


def test_weighted_norm_linear():
    val = weighted_norm(lambda x: x[:, 0], 1.0, 2, build_interval_mesh(0, 1, 16))
    assert val == pytest.approx(1 / math.sqrt(3), abs=1e-12)


def test_weighted_norm_rejects_small_p(graded):
    with pytest.raises(InvalidArgument):
        weighted_norm(INV_SQ, V2, 0.5, graded)


def test_weighted_norm_divergence_flag():
    mesh = build_interval_mesh(0, 1, 8, q=2, c=0.0)
    # int_0^1 x^-2 diverges
    assert weighted_norm(lambda x: x[:, 0] ** -1.0, 1.0, 2, mesh, detect_divergence=True) == math.inf
    assert math.isfinite(weighted_norm(lambda x: x[:, 0] ** -0.25, 1.0, 2, mesh, detect_divergence=True))


def test_sobolev_norm_sine():
    f = ScalarField.from_1d(lambda x: np.sin(np.pi * x), lambda x: np.pi * np.cos(np.pi * x))
    fam = WeightFamily(One(1), ShapeMap.abs(1), 2)
    val = sobolev_norm(f, fam, 2, build_interval_mesh(0, 1, 32))
    assert val == pytest.approx(math.sqrt((1 + math.pi**2) / 2), abs=1e-4)


def test_sobolev_norm_inverse_square(graded):
    # w0 = x^2, w1 = x^4: int 1 + int 4 x^2 = 2 + 8/3
    fam = WeightFamily(V2, ShapeMap.abs(1), 2)
    val = sobolev_norm(INV_SQ, fam, 2, graded)
    assert val == pytest.approx(math.sqrt(14 / 3), abs=1e-4)


def test_sobolev_norm_missing_derivative(graded):
    fam = WeightFamily(V2, ShapeMap.abs(1), 2)
    with pytest.raises(InvalidArgument):
        sobolev_norm(ScalarField.from_1d(lambda x: x), fam, 2, graded)


@given(c=st.floats(-50, 50).filter(lambda c: abs(c) > 1e-6), k=st.integers(1, 4))
def test_norm_homogeneity(c, k):
    mesh = build_interval_mesh(-1, 1, 8)
    f = lambda x: np.cos(k * x[:, 0])  # noqa: E731
    base = weighted_norm(f, V2, 2, mesh)
    assert weighted_norm(lambda x: c * f(x), V2, 2, mesh) == pytest.approx(abs(c) * base, rel=1e-12)


@given(seed=st.integers(0, 10_000), p=st.sampled_from([1.0, 2.0, 3.0]))
def test_norm_triangle(seed, p):
    rng = np.random.Generator(np.random.Philox(seed))
    f, g = random_bump_field(rng, Domain.interval(-1, 1)), random_bump_field(rng, Domain.interval(-1, 1))
    mesh = build_interval_mesh(-1, 1, 32)
    lhs = weighted_norm(lambda x: f(x) + g(x), V2, p, mesh)
    assert lhs <= weighted_norm(f, V2, p, mesh) + weighted_norm(g, V2, p, mesh) + 1e-12


# weak derivatives


def test_weak_derivative_inverse_square(battery):
    rep = weak_derivative_residual(INV_SQ, INV_SQ.d((1,)), V2, (1,), battery)
    assert rep.relative <= 1e-6
    assert len(rep.per_test_function) == len(battery.functions)


def test_weak_derivative_wrong_sign(battery):
    rep = weak_derivative_residual(INV_SQ, lambda x: 2 * x[:, 0] ** -3.0, V2, (1,), battery)
    assert rep.relative >= 0.1


@pytest.mark.parametrize("v", [V2, One(1), AffineTrig(4, 1, 0.25), Polynomial([0.0, 1.0])],
                         ids=["x2", "one", "trig", "x"])
@pytest.mark.parametrize("fname", ["sin", "exp"])
def test_classical_derivative_is_weak_derivative(v, fname, battery):
    f, g = {"sin": (np.sin, np.cos), "exp": (np.exp, np.exp)}[fname]
    rep = weak_derivative_residual(lambda x: f(x[:, 0]), lambda x: g(x[:, 0]), v, (1,), battery)
    assert rep.relative <= 1e-6


def test_weak_derivative_second_order(battery):
    rep = weak_derivative_residual(lambda x: np.sin(x[:, 0]), lambda x: -np.sin(x[:, 0]), V2, (2,), battery)
    assert rep.relative <= 1e-6


def test_weak_derivative_needs_order_one(battery):
    with pytest.raises(InvalidArgument):
        weak_derivative_residual(INV_SQ, INV_SQ, V2, (0,), battery)


def test_uniqueness_probe(battery):
    # perturbing the candidate by delta * psi moves the residual linearly in delta,
    # so two candidates passing at level eps differ by O(eps) in L^1_{v^2}
    mesh = build_interval_mesh(-1, 1, 64)
    psi = lambda x: np.cos(3 * x[:, 0])  # noqa: E731
    l1 = weighted_norm(psi, lambda x: V2(x) ** 2, 1, mesh)
    ratios = []
    for delta in (1e-2, 1e-3, 1e-4):
        g = lambda x, dl=delta: np.cos(x[:, 0]) + dl * psi(x)  # noqa: E731
        rep = weak_derivative_residual(lambda x: np.sin(x[:, 0]), g, V2, (1,), battery)
        ratios.append(delta * l1 / rep.relative)
    assert max(ratios) / min(ratios) < 1.01


def test_battery_supports_inside_domain(graded):
    bat = build_battery(graded, seed=3)
    for phi in bat.functions:
        assert -1 < phi.center[0] - phi.radius and phi.center[0] + phi.radius < 1
        assert 0.5 <= phi.amplitude <= 2.0
    again = build_battery(graded, seed=3)
    assert [p.amplitude for p in again.functions] == [p.amplitude for p in bat.functions]


# Leibniz


def test_leibniz_inverse_square(battery):
    assert leibniz_residual(INV_SQ, V2, 1, (1,), battery).relative <= 1e-6


def test_leibniz_constant_weight(battery):
    f = ScalarField.from_1d(np.exp, np.exp)
    assert leibniz_residual(f, One(1), 1, (1,), battery).relative <= 1e-10


def test_leibniz_corrupted_derivative(battery):
    bad = ScalarField.from_1d(lambda x: x**-2.0, lambda x: -2.2 * x**-3.0)
    assert leibniz_residual(bad, V2, 1, (1,), battery).relative >= 1e-2


def test_leibniz_order_guard(battery):
    with pytest.raises(InvalidArgument):
        leibniz_residual(INV_SQ, V2, 1, (2,), battery)


# integration by parts


@pytest.fixture(scope="module")
def fine():
    return build_interval_mesh(-1, 1, 512)


@given(seed=st.integers(0, 10_000))
def test_ibp_smooth_bumps(seed, fine):
    rng = np.random.Generator(np.random.Philox(seed))
    h = random_bump_field(rng, Domain.interval(-1, 1))
    f = random_bump_field(rng, Domain.interval(-1, 1))
    assert ibp_residual(h, f, V2, (1,), fine).residual <= 1e-8


def test_ibp_inverse_square_h(fine):
    rng = np.random.Generator(np.random.Philox(11))
    f = random_bump_field(rng, Domain.interval(-1, 1))
    rep = ibp_residual(INV_SQ, f, V2, (1,), fine)
    assert rep.residual <= 1e-6


def test_ibp_zero_field(fine):
    rng = np.random.Generator(np.random.Philox(2))
    h = random_bump_field(rng, Domain.interval(-1, 1))
    zero = ScalarField.from_1d(np.zeros_like, np.zeros_like)
    assert ibp_residual(h, zero, V2, (1,), fine).residual == 0.0


def test_ibp_boundary_term(fine):
    # f = h = e^x: the defect is the boundary term [a f h] = e^2 - e^-2 for a = x^6
    e = ScalarField.from_1d(np.exp, np.exp)
    rep = ibp_residual(e, e, V2, (1,), fine)
    assert rep.residual >= 1e-3
    assert rep.residual == pytest.approx(math.exp(2) - math.exp(-2), rel=1e-8)


def test_ibp_unbounded_weight():
    mesh = build_interval_mesh(0, 1, 16)
    e = ScalarField.from_1d(np.exp, np.exp)
    with pytest.raises(HypothesisError):
        ibp_residual(e, e, RadialPower(-1.0, 1), (1,), mesh)


# traces


def test_trace_tr1_vanishing():
    mesh = build_interval_mesh(0, 1, 16)
    res = trace_eval(lambda x: x[:, 0] * (1 - x[:, 0]), AffineTrig(2, 1, 1), "tr1", mesh)
    assert np.allclose(res.values, [0, 0]) and res.norm == 0.0


def test_trace_tr2_limit():
    mesh = build_interval_mesh(0, 1, 16)
    res = trace_eval(lambda x: 1 / x[:, 0], RadialPower(1.0, 1), "tr2", mesh)
    assert res.values == pytest.approx([0.0, 1.0], abs=1e-12)


def test_trace_tr1_floor_fails():
    mesh = build_interval_mesh(0, 1, 16)
    with pytest.raises(HypothesisError) as err:
        trace_eval(lambda x: np.ones(len(x)), RadialPower(1.0, 1), "tr1", mesh)
    assert err.value.condition == "floor_29"


def test_trace_disk_norm():
    mesh = build_disk_mesh(1.0, 4, 64)
    res = trace_eval(lambda x: np.ones(len(x)), One(2), "tr1", mesh)
    perimeter = 64 * 2 * math.sin(math.pi / 64)
    assert res.norm == pytest.approx(math.sqrt(perimeter), rel=1e-12)


def test_trace_unknown_mode():
    with pytest.raises(InvalidArgument):
        trace_eval(lambda x: x[:, 0], One(1), "tr3", build_interval_mesh(0, 1, 4))


# inequalities


def test_sphere_moment_reduces_to_area():
    for d in (2, 3, 12):
        assert sphere_moment(2, d) == pytest.approx(sphere_area(d), rel=1e-12)
    # d = 2, p = 1: int |cos| + |sin| over the circle = 8
    assert sphere_moment(1, 2) == pytest.approx(8.0, rel=1e-12)


def test_poincare_slab_constant():
    assert poincare_slab_constant(1.0, 2) == pytest.approx(1 / math.pi)


@pytest.mark.parametrize("d", [3, 12])
def test_hardy_random_radial(d):
    rng = np.random.Generator(np.random.Philox(100 + d))
    for _ in range(100):
        rep = inequality_check("hardy", None, random_radial_polynomial(rng), 2, d)
        assert rep.holds and rep.margin >= 0
        assert rep.constant_used == pytest.approx(2 / (d - 2))


@pytest.mark.parametrize("d", [11, 12])
def test_kebiche_random_radial(d):
    rng = np.random.Generator(np.random.Philox(200 + d))
    v = RadialPower(2.0, d)
    for _ in range(100):
        rep = inequality_check("kebiche_73", v, random_radial_polynomial(rng), 2, d)
        assert rep.holds and rep.margin >= 0
    assert rep.constant_used == pytest.approx(8 / (d - 10))


def test_kebiche_zero_field():
    zero = ScalarField.from_1d(np.zeros_like, np.zeros_like)
    rep = inequality_check("kebiche_73", RadialPower(2.0, 12), zero, 2, 12)
    assert rep.lhs == 0 and rep.rhs == 0 and rep.holds


def test_kebiche_window_violation():
    rng = np.random.Generator(np.random.Philox(1))
    with pytest.raises(HypothesisError) as err:
        inequality_check("kebiche_73", RadialPower(2.0, 3), random_radial_polynomial(rng), 2, 3)
    assert err.value.condition == "window_72"


def test_kebiche_needs_null_trace():
    f = ScalarField.from_1d(np.ones_like, np.zeros_like)
    with pytest.raises(HypothesisError):
        inequality_check("kebiche_73", RadialPower(2.0, 12), f, 2, 12)


def test_oned_random_bumps():
    rng = np.random.Generator(np.random.Philox(72))
    mesh = build_interval_mesh(-1, 1, 64)
    v = AffineTrig(4, 1, 0.25)
    for _ in range(100):
        f = random_bump_field(rng, Domain.interval(-1, 1))
        rep = inequality_check("oned_72", v, f, 2, 1, {"mesh": mesh, "sigma": 1 / 12})
        assert rep.holds and rep.margin >= 0
    assert rep.constant_used == pytest.approx(0.5)


def test_oned_sigma_too_small():
    rng = np.random.Generator(np.random.Philox(0))
    f = random_bump_field(rng, Domain.interval(-1, 1))
    with pytest.raises(HypothesisError) as err:
        inequality_check("oned_72", AffineTrig(4, 1, 0.25), f, 2, 1,
                         {"mesh": build_interval_mesh(-1, 1, 16), "sigma": 0.01})
    assert err.value.condition == "gradient_71"


def test_poincare_corollary_radial():
    rng = np.random.Generator(np.random.Philox(9))
    rep = inequality_check("poincare_cor", RadialPower(2.0, 12), random_radial_polynomial(rng), 2, 12)
    assert rep.holds
    assert rep.constant_used == pytest.approx(poincare_slab_constant(2.0, 2) * 5)


# density


def test_density_of_cutoffs():
    f = ScalarField.from_1d(np.ones_like, np.zeros_like)
    ns = [4, 8, 16, 32, 64]
    norms = cutoff_error_norms(f, Polynomial([0.0, 1.0]), ShapeMap.abs(1), 2, ns, build_interval_mesh(-1, 1, 64))
    vals = [norms[n] for n in ns]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.5 * vals[0]
