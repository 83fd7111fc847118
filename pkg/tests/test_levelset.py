import numpy as np
import pytest

from zoomfem.multiscale.levelset import (
    Box,
    Circle,
    HalfPlane,
    LevelSet,
    NodalField,
    SignConvention,
    pore_level_set,
    zoom_level_set,
)
from zoomfem.multiscale.mesh import Rectangle, generate_rect
from zoomfem.multiscale.protocol import ConfigError, DegenerateGradientError


def test_circle_is_positive_inside_the_pore():
    ls = pore_level_set([Circle((6, 5), 1)])
    assert ls.eval((6, 5)) == 1.0
    assert ls.eval((8, 5)) == -1.0


def test_circle_value_is_the_exact_signed_distance():
    ls = pore_level_set([Circle((6, 5), 1)])
    points = np.random.default_rng(3).uniform(0, 12, size=(200, 2))
    expected = 1.0 - np.linalg.norm(points - [6, 5], axis=1)
    np.testing.assert_allclose(ls.eval(points), expected, rtol=0, atol=1e-14)


def test_union_takes_the_larger_child():
    ls = pore_level_set([Circle((0, 0), 1), Circle((3, 0), 1)])
    assert ls.eval((1.5, 0)) == pytest.approx(-0.5)
    assert ls.eval((3, 0)) == pytest.approx(1.0)


def test_intersection_and_complement():
    a, b = Circle((0, 0), 1), Circle((1, 0), 1)
    points = np.array([[0.5, 0.0], [-0.5, 0.2], [2.0, 0.0]])
    np.testing.assert_allclose((a & b).value(points), np.minimum(a.value(points), b.value(points)))
    np.testing.assert_allclose((~a).value(points), -a.value(points))
    np.testing.assert_allclose((a | b).value(points), np.maximum(a.value(points), b.value(points)))


def test_box_distance():
    box = Box((0, 0), (2, 2))
    assert box.value(np.array([[1.0, 1.0]]))[0] == pytest.approx(1.0)
    assert box.value(np.array([[3.0, 1.0]]))[0] == pytest.approx(-1.0)
    assert box.value(np.array([[3.0, 3.0]]))[0] == pytest.approx(-np.sqrt(2))


def test_zoom_is_negative_inside():
    ls = zoom_level_set([Circle((0, 0), 1)])
    assert ls.eval((0, 0)) == -1.0
    assert ls.eval((3, 0)) == 2.0


def test_empty_geometries():
    p = np.array([[1.0, 2.0], [7.0, 3.0]])
    assert np.all(pore_level_set([]).eval(p) == -np.inf)
    assert np.all(zoom_level_set([]).eval(p) == np.inf)
    assert np.all(zoom_level_set([], whole_domain=True).eval(p) == -np.inf)


def test_unit_normal_examples():
    np.testing.assert_allclose(pore_level_set([Circle((6, 5), 1)]).unit_normal((7, 5)), [-1, 0], atol=1e-15)
    np.testing.assert_allclose(pore_level_set([Circle((0, 0), 2)]).unit_normal((0, -3)), [0, 1], atol=1e-15)
    half = LevelSet(HalfPlane((0, 0), (0, 1)))
    np.testing.assert_allclose(half.unit_normal(np.array([[1.0, 2.0], [-4.0, -1.0]])), [[0, 1], [0, 1]])


def test_unit_normal_has_unit_length_and_ignores_scaling():
    ls = pore_level_set([Circle((6, 5), 1), Circle((2, 2), 0.5)])
    points = np.random.default_rng(1).uniform(0, 12, size=(50, 2))
    normals = ls.unit_normal(points)
    np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(ls.scaled(1e3).unit_normal(points), normals, atol=1e-12)
    np.testing.assert_allclose(ls.scaled(1e3).eval(points), 1e3 * ls.eval(points))


def test_unit_normal_at_the_center_is_degenerate():
    with pytest.raises(DegenerateGradientError):
        pore_level_set([Circle((6, 5), 1)]).unit_normal((6, 5))


def test_project_p1_matches_pointwise_evaluation(unit_square):
    mesh = generate_rect(unit_square, 2, 2)
    ls = pore_level_set([Circle((0.5, 0.5), 1)])
    field = ls.project_p1(mesh)
    assert len(field) == 9
    np.testing.assert_array_equal(field.values, ls.eval(mesh.nodes))


def test_project_p1_node_on_the_center(plate):
    mesh = generate_rect(plate, 12, 10)
    field = pore_level_set([Circle((6, 5), 1)]).project_p1(mesh)
    node = int(np.flatnonzero(np.all(mesh.nodes == [6.0, 5.0], axis=1))[0])
    assert field.values[node] == 1.0


def test_interpolation_reproduces_linear_level_sets():
    mesh = generate_rect(Rectangle(0, 0, 3, 2), 3, 2)
    ls = LevelSet(HalfPlane((1.0, 0.5), (2.0, 1.0)), SignConvention.POSITIVE_OUTSIDE)
    field = ls.project_p1(mesh)
    points = np.random.default_rng(5).uniform([0, 0], [3, 2], size=(40, 2))
    np.testing.assert_allclose(field.interpolate(mesh.locate(points), points), ls.eval(points), atol=1e-13)


def test_invalid_geometry_is_a_config_error(unit_square):
    with pytest.raises(ConfigError):
        Circle((0, 0), 0.0)
    with pytest.raises(ConfigError):
        Circle((0, 0, 0), 1.0)
    with pytest.raises(ConfigError):
        NodalField(generate_rect(unit_square, 1, 1), np.zeros(3))
