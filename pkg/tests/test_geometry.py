import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from degenera.errors import InvalidArgument, SingularEvaluationError
from degenera.geometry import (
    Domain,
    QuadratureRule,
    build_disk_mesh,
    build_interval_mesh,
    build_square_mesh,
    dump_mesh,
    integrate,
    integrate_radial,
    polygon_area,
    refine,
    sphere_area,
)


def test_uniform_interval_nodes():
    mesh = build_interval_mesh(0, 1, 4)
    assert np.allclose(mesh.nodes[:, 0], [0, 0.25, 0.5, 0.75, 1.0])
    assert mesh.boundary_nodes().tolist() == [0, 4]


def test_graded_interval_symmetric_about_center():
    mesh = build_interval_mesh(-1, 1, 8, q=2, c=0.0)
    x = mesh.nodes[:, 0]
    assert np.allclose(x, -x[::-1])
    h = np.diff(x)
    assert np.argmin(h) in (3, 4)
    # cell sizes grow monotonically away from 0
    assert np.all(np.diff(h[4:]) > 0) and np.all(np.diff(h[:4]) < 0)


def test_interval_errors():
    with pytest.raises(InvalidArgument):
        build_interval_mesh(0, 1, 0)
    with pytest.raises(InvalidArgument):
        build_interval_mesh(0, 1, 4, q=2, c=3.0)


def test_disk_mesh_small():
    mesh = build_disk_mesh(1.0, 2, 4, q=1)
    assert mesh.n_cells == 12
    assert np.all(mesh.cell_measures() > 0)
    # inscribed square of the unit circle has area 2
    assert mesh.cell_measures().sum() == pytest.approx(polygon_area(1.0, 4)) == pytest.approx(2.0)
    assert np.allclose(np.linalg.norm(mesh.nodes[mesh.boundary], axis=1), 1.0)


def test_disk_area_converges():
    mesh = build_disk_mesh(1.0, 4, 256, q=1)
    assert abs(integrate(lambda x: np.ones(len(x)), mesh) - math.pi) < 1e-3


def test_disk_polygon_area_monotone_in_sectors():
    areas = [build_disk_mesh(1.0, 3, s, q=2).cell_measures().sum() for s in (4, 8, 16, 32, 64)]
    assert all(b > a for a, b in zip(areas, areas[1:]))


def test_disk_errors():
    with pytest.raises(InvalidArgument):
        build_disk_mesh(1.0, 2, 2)


def test_integrate_square_polynomial():
    assert integrate(lambda x: x[:, 0] ** 2, build_interval_mesh(0, 1, 1)) == pytest.approx(1 / 3, abs=1e-15)


def test_integrate_inverse_sqrt_graded():
    mesh = build_interval_mesh(0, 1, 64, q=3, c=0.0)
    assert abs(integrate(lambda x: x[:, 0] ** -0.5, mesh) - 2.0) < 1e-4


def test_integrate_names_singular_point():
    mesh = build_interval_mesh(0, 1, 4)
    with pytest.raises(SingularEvaluationError) as err:
        integrate(lambda x: np.where(x[:, 0] > 0.6, np.nan, 1.0), mesh)
    assert err.value.point is not None and err.value.point[0] > 0.6


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=10))
def test_gauss_exactness_interval(coeffs):
    poly = np.polynomial.Polynomial(coeffs)
    exact = poly.integ()(1.0) - poly.integ()(0.0)
    got = integrate(lambda x: poly(x[:, 0]), build_interval_mesh(0, 1, 3))
    assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("i, j", [(0, 0), (3, 2), (9, 0), (4, 5), (0, 9)])
def test_triangle_rule_exactness(i, j):
    rule = QuadratureRule(5, 2)
    got = np.sum(rule.weights * rule.points[:, 0] ** i * rule.points[:, 1] ** j)
    exact = math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
    assert got == pytest.approx(exact, rel=1e-12)


def test_interval_measure_exact():
    mesh = build_interval_mesh(-2, 3, 17, q=2.5, c=0.5)
    assert mesh.cell_measures().sum() == pytest.approx(5.0, rel=1e-14)


def test_square_measure():
    assert build_square_mesh(0, 2, 5).cell_measures().sum() == pytest.approx(4.0)


def test_quadrature_order_of_convergence():
    rule = QuadratureRule(order=2)
    errs = [abs(integrate(lambda x: np.exp(x[:, 0]), build_interval_mesh(0, 1, n), rule) - (math.e - 1))
            for n in (2, 4, 8)]
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(abs(r - 4.0) < 0.2 for r in rates)


def test_radial_examples():
    assert integrate_radial(lambda r: np.ones_like(r), 3) == pytest.approx(4 * math.pi / 3, rel=1e-10)
    assert integrate_radial(lambda r: 1 / r, 3) == pytest.approx(2 * math.pi, rel=1e-8)
    assert integrate_radial(lambda r: r**-2.5, 2) == math.inf
    assert math.isfinite(integrate_radial(lambda r: r**-1.5, 2))


def test_radial_matches_disk_quadrature():
    g = lambda r: np.exp(-r * r)  # noqa: E731
    disk = integrate(lambda x: g(np.linalg.norm(x, axis=1)), build_disk_mesh(1.0, 16, 256, q=1))
    assert disk == pytest.approx(integrate_radial(g, 2), rel=2e-4)


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_refine_halves_cells():
    mesh = build_disk_mesh(1.0, 2, 6)
    fine = refine(mesh)
    assert fine.n_cells == 4 * mesh.n_cells
    assert fine.cell_measures().sum() == pytest.approx(mesh.cell_measures().sum())


def test_dump_mesh_lines():
    buf = io.StringIO()
    mesh = build_interval_mesh(0, 1, 2)
    dump_mesh(mesh, buf)
    assert len(buf.getvalue().strip().splitlines()) >= mesh.n_nodes + mesh.n_cells


def test_domain_validation():
    with pytest.raises(InvalidArgument):
        Domain.interval(1, 0)
    with pytest.raises(InvalidArgument):
        Domain.disk(0.0)
