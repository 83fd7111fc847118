import numpy as np
import pytest

from zoomfem.multiscale.levelset import Circle, zoom_level_set
from zoomfem.multiscale.mesh import BoundaryTag, CellSet, Mesh2, Rectangle, generate_rect, mark_near, refine
from zoomfem.multiscale.protocol import ConfigError, GeometryError


def test_generate_rect_counts(unit_square):
    mesh = generate_rect(unit_square, 2, 2)
    assert mesh.n_nodes == 9
    assert mesh.n_cells == 8
    assert np.all(mesh.areas > 0)


def test_generate_rect_plate(plate):
    mesh = generate_rect(plate, 12, 10)
    assert mesh.areas.sum() == pytest.approx(120.0, rel=1e-12)
    assert mesh.h_min == pytest.approx(1.0)
    assert mesh.h_max == pytest.approx(1.0)


def test_single_quad(plate):
    mesh = generate_rect(plate, 1, 1)
    np.testing.assert_allclose(mesh.areas, [60.0, 60.0])


def test_zero_counts_are_rejected(unit_square):
    with pytest.raises(ConfigError):
        generate_rect(unit_square, 0, 3)


def test_facet_adjacency_is_symmetric(unit_square):
    mesh = generate_rect(unit_square, 3, 2)
    for f, (a, b) in enumerate(mesh.facet_cells.tolist()):
        assert f in mesh.cell_facets[a]
        if b >= 0:
            assert f in mesh.cell_facets[b]
    assert len(mesh.boundary_facets) == 2 * (3 + 2)


def test_boundary_tags(unit_square):
    mesh = generate_rect(unit_square, 4, 4)
    for tag in BoundaryTag:
        assert len(mesh.tagged_facets(tag)) == 4
        assert len(mesh.tagged_nodes(tag)) == 5
    np.testing.assert_allclose(mesh.nodes[mesh.tagged_nodes("top"), 1], 1.0)


def test_refine_zero_levels_is_identity(unit_square):
    mesh = generate_rect(unit_square, 2, 2)
    assert refine(mesh, [0, 1], levels=0) is mesh
    assert refine(mesh, [], levels=3) is mesh


def test_refine_one_cell(unit_square):
    mesh = generate_rect(unit_square, 2, 2)
    fine = refine(mesh, CellSet([3], mesh.n_cells), levels=1)
    assert fine.areas.sum() == pytest.approx(1.0, rel=1e-12)
    assert int(np.sum(np.isclose(fine.areas, mesh.areas[3] / 4))) == 4
    fine.validate()


def test_refine_everything_twice(unit_square):
    mesh = generate_rect(unit_square, 2, 2)
    fine = refine(mesh, np.arange(mesh.n_cells), levels=2)
    assert fine.n_cells == 16 * mesh.n_cells
    assert fine.h_min == pytest.approx(0.125)
    assert fine.facet_lengths.min() == pytest.approx(0.125)


def test_uniform_refinement_halves_h(plate):
    mesh = generate_rect(plate, 6, 5)
    fine = refine(mesh, np.arange(mesh.n_cells))
    assert fine.h_max == pytest.approx(mesh.h_max / 2, abs=1e-12)
    assert fine.h_min <= fine.h_max


def test_repeated_local_refinement_stays_conforming(plate):
    mesh = generate_rect(plate, 12, 10)
    zoom = zoom_level_set([Circle((6, 5), 2)])
    for _ in range(3):
        mesh = refine(mesh, mark_near(mesh, zoom, 0.3), 1)
    mesh.validate()
    assert mesh.areas.sum() == pytest.approx(120.0, rel=1e-12)
    assert mesh.h_min == pytest.approx(0.125)
    assert mesh.h_max == pytest.approx(1.0)
    boundary = mesh.nodes[mesh.facets[mesh.boundary_facets]].reshape(-1, 2)
    assert np.all(plate.contains(boundary, tol=1e-12))
    x, y = boundary[:, 0], boundary[:, 1]
    on_edge = np.isclose(x, 0) | np.isclose(x, 12) | np.isclose(y, 0) | np.isclose(y, 10)
    assert np.all(on_edge)


def _is_conforming(mesh: Mesh2) -> bool:
    # a triangulation of a disc has V - E + F = 1; every hanging node adds an edge without a cell
    return mesh.n_nodes - len(mesh.facets) + mesh.n_cells == 1


@pytest.mark.parametrize("band", [0.0, 0.3, 0.5])
def test_deep_local_refinement_stays_conforming(plate, band):
    mesh = generate_rect(plate, 12, 10)
    zoom = zoom_level_set([Circle((6, 5), 2)])
    for level in range(4):
        mesh = refine(mesh, mark_near(mesh, zoom, band), 1)
        assert _is_conforming(mesh), f"pass {level + 1}"
    mesh.validate()
    assert mesh.h_min == pytest.approx(0.0625)
    assert mesh.areas.sum() == pytest.approx(120.0, rel=1e-12)
    assert np.all(mesh.areas > 0)


def test_refinement_of_a_finer_neighbourhood_stays_conforming(plate):
    mesh = generate_rect(plate, 12, 10)
    mesh = refine(mesh, mark_near(mesh, zoom_level_set([Circle((6, 5), 2)]), 0.3), 2)
    # the second target overlaps the green cells around the first
    mesh = refine(mesh, mark_near(mesh, zoom_level_set([Circle((8.5, 5), 1)]), 0.0), 2)
    mesh.validate()
    assert _is_conforming(mesh)
    assert mesh.areas.sum() == pytest.approx(120.0, rel=1e-12)


def test_mark_near(plate):
    mesh = generate_rect(plate, 12, 10)
    zoom = zoom_level_set([Circle((6, 5), 2)])
    assert len(mark_near(mesh, zoom, np.inf)) == mesh.n_cells
    assert len(mark_near(mesh, zoom_level_set([Circle((30, 30), 2)]), 0.0)) == 0
    marked = mark_near(mesh, zoom, 0.0)
    distance = np.linalg.norm(mesh.nodes - [6, 5], axis=1)
    expected = np.flatnonzero(np.any(distance[mesh.cells] <= 2.0, axis=1))
    np.testing.assert_array_equal(marked.indices, expected)


def test_locate(unit_square):
    mesh = generate_rect(unit_square, 4, 4)
    points = np.array([[0.1, 0.05], [0.9, 0.95], [2.0, 2.0]])
    cells = mesh.locate(points)
    assert cells[2] == -1
    bary = mesh.barycentric(cells[:2], points[:2])
    assert np.all(bary >= -1e-12)


def test_validate_rejects_inverted_cells(unit_square):
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    bad = Mesh2(nodes, np.array([[0, 2, 1], [0, 2, 3]]), unit_square)
    with pytest.raises(GeometryError):
        bad.validate()


def test_cell_set_bounds():
    with pytest.raises(ConfigError):
        CellSet([5], 3)
    s = CellSet([2, 0, 2], 3)
    assert list(s) == [0, 2]
    assert 2 in s and 1 not in s


def test_rectangle_needs_positive_extent():
    with pytest.raises(ConfigError):
        Rectangle(0, 0, 0, 1)
