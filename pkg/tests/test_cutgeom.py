from math import factorial, pi

import numpy as np
import pytest

from zoomfem.multiscale.cli import monte_carlo_area
from zoomfem.multiscale.cutgeom import (
    QuadratureRule,
    Side,
    classify,
    decompose,
    measures,
    multi_cut_cells,
    region_quadrature,
    subtessellate,
)
from zoomfem.multiscale.levelset import Circle, LevelSet, NodalField, pore_level_set
from zoomfem.multiscale.mesh import Mesh2, Rectangle, generate_rect
from zoomfem.multiscale.protocol import ConfigError, DegenerateCutError
from zoomfem.multiscale.utils import loglog_slope

UNIT_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _single_cell_mesh() -> Mesh2:
    return Mesh2(UNIT_TRIANGLE, np.array([[0, 1, 2]]), Rectangle(0, 0, 1, 1))


@pytest.mark.parametrize(
    "values, side",
    [
        ((-1, -2, -3), Side.NEGATIVE),
        ((1, 2, 3), Side.POSITIVE),
        ((-1, 1, 1), Side.CUT),
        ((0, 1, 1), Side.POSITIVE),
        ((0, -1, -1), Side.CUT),
    ],
)
def test_classify(values, side):
    assert classify(values) is side


def test_subtessellate_one_negative_node():
    cut = subtessellate(UNIT_TRIANGLE, (-1, 1, 1))
    assert cut.area(Side.NEGATIVE) == pytest.approx(0.125)
    assert cut.area(Side.POSITIVE) == pytest.approx(0.375)
    np.testing.assert_allclose(sorted(cut.segment.tolist()), [[0.0, 0.5], [0.5, 0.0]])
    assert cut.interface_length == pytest.approx(np.sqrt(0.5))
    assert np.all(cut.areas() > 0)


def test_subtessellate_negative_quadrilateral():
    cut = subtessellate(UNIT_TRIANGLE, (-1, -1, 1))
    assert int(np.sum(cut.signs == int(Side.NEGATIVE))) == 2
    assert cut.area(Side.NEGATIVE) == pytest.approx(0.375)
    assert cut.area(Side.POSITIVE) == pytest.approx(0.125)


def test_subtessellate_rejects_uncut_cells():
    with pytest.raises(DegenerateCutError):
        subtessellate(UNIT_TRIANGLE, (1, 1, 1))


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 6])
def test_reference_rules_integrate_monomials(degree):
    rule = QuadratureRule.on_triangles(UNIT_TRIANGLE[None], np.array([0]), degree)
    x, y = rule.points[:, 0], rule.points[:, 1]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            assert np.sum(rule.weights * x ** a * y ** b) == pytest.approx(exact, rel=1e-10, abs=1e-14)


def test_unknown_degree():
    with pytest.raises(ConfigError):
        QuadratureRule.on_triangles(UNIT_TRIANGLE[None], np.array([0]), 7)


def test_region_quadrature_on_one_cut_cell():
    mesh = _single_cell_mesh()
    decomp = decompose(mesh, NodalField(mesh, [-1.0, 1.0, 1.0]))
    negative = region_quadrature(decomp, Side.NEGATIVE, 2)
    positive = region_quadrature(decomp, Side.POSITIVE, 2)
    assert negative.measure == pytest.approx(0.125)
    assert positive.measure == pytest.approx(0.375)
    assert np.all(negative.cells == 0)
    with pytest.raises(ConfigError):
        region_quadrature(decomp, Side.CUT, 2)


def test_areas_partition_the_domain(plate):
    mesh = generate_rect(plate, 24, 20)
    ls = pore_level_set([Circle((6.013, 5.007), 1.0), Circle((2.5, 2.5), 0.7)])
    decomp = decompose(mesh, ls.project_p1(mesh))
    negative, positive, length = measures(decomp)
    assert negative + positive == pytest.approx(plate.area, rel=1e-12)
    assert region_quadrature(decomp, Side.NEGATIVE, 3).measure == pytest.approx(negative, rel=1e-12)
    assert region_quadrature(decomp, Side.POSITIVE, 1).measure == pytest.approx(positive, rel=1e-12)
    assert length > 0
    assert len(decomp.cut_cells) == len(decomp.cut)


def test_no_interface(plate):
    mesh = generate_rect(plate, 6, 5)
    decomp = decompose(mesh, pore_level_set([]).project_p1(mesh))
    negative, positive, length = measures(decomp)
    assert negative == pytest.approx(plate.area)
    assert positive == 0.0
    assert length == 0.0


def test_multi_cut_cells_flags_a_pore_hidden_inside_a_cell(plate):
    mesh = generate_rect(plate, 6, 5)
    # a small pore around the centroid of one cell never reaches its nodes
    centroid = mesh.centroids[7]
    ls = pore_level_set([Circle(centroid, 0.2)])
    flagged = multi_cut_cells(mesh, ls, ls.project_p1(mesh))
    assert 7 in flagged
    clean = pore_level_set([Circle((6.0, 5.0), 1.1)])
    fine = generate_rect(plate, 48, 40)
    assert len(multi_cut_cells(fine, clean, clean.project_p1(fine))) == 0


@pytest.mark.slow
def test_discrete_matrix_area_converges(plate):
    ls = pore_level_set([Circle((6.0, 5.0), 1.0)])
    exact = plate.area - pi
    hs, errors = [], []
    for nx, ny in ((48, 40), (96, 80), (192, 160), (384, 320)):
        mesh = generate_rect(plate, nx, ny)
        negative, positive, length = measures(decompose(mesh, ls.project_p1(mesh)))
        hs.append(mesh.h_max)
        errors.append(abs(negative - exact))
        assert negative + positive == pytest.approx(plate.area, rel=1e-12)
        assert length == pytest.approx(2 * pi, rel=0.01)
    assert hs[-1] == pytest.approx(1 / 32)
    assert loglog_slope(hs, errors) >= 1.9

    sampled, error = monte_carlo_area(ls, plate, 10_000_000, seed=0)
    assert abs(sampled - exact) <= 3 * error
    assert abs(sampled - negative) <= 3 * error


def test_level_set_scaling_keeps_the_decomposition(plate):
    mesh = generate_rect(plate, 12, 10)
    ls = LevelSet(Circle((6.013, 5.007), 1.0))
    a = measures(decompose(mesh, ls.project_p1(mesh)))
    b = measures(decompose(mesh, ls.scaled(1e4).project_p1(mesh)))
    np.testing.assert_allclose(a, b, rtol=1e-12)
