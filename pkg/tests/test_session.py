import numpy as np
import pytest

from zoomfem.multiscale import assembly
from zoomfem.multiscale.data import Scenario
from zoomfem.multiscale.experiments.presets import scenario_names
from zoomfem.multiscale.mesh import BoundaryTag
from zoomfem.multiscale.post import CellDomain, field_difference
from zoomfem.multiscale.session import MultiscaleSession
from zoomfem.multiscale.solve import SolveOptions
from zoomfem.multiscale.utils import merged


def test_run_writes_every_output(tmp_path, small_scenario):
    result = MultiscaleSession(Scenario(small_scenario)).run(tmp_path)
    assert set(result.paths) == {"scenario", "vtk", "metrics"}
    for path in result.paths.values():
        assert path.is_file()
    assert result.paths["vtk"].name == "fields.vtk"
    top = 2 * result.mesh.tagged_nodes(BoundaryTag.TOP) + 1
    np.testing.assert_array_equal(result.u[top], -0.1)
    bottom = result.mesh.tagged_nodes(BoundaryTag.BOTTOM)
    np.testing.assert_array_equal(result.u[2 * bottom], 0.0)
    assert result.report.residual <= 1e-8
    assert result.energy.macro > 0 and result.energy.micro > 0
    assert result.l2_error is None
    lines = result.paths["metrics"].read_text().splitlines()
    assert len(lines) == 2


def test_results_do_not_depend_on_the_thread_count(tmp_path, small_scenario, monkeypatch):
    monkeypatch.setattr(assembly, "CHUNK_SIZE", 16)
    scenario = Scenario(small_scenario)
    serial = MultiscaleSession(scenario, threads=1).run(tmp_path / "serial")
    parallel = MultiscaleSession(scenario, threads=4).run(tmp_path / "parallel")
    for name in ("vtk", "metrics"):
        assert serial.paths[name].read_bytes() == parallel.paths[name].read_bytes()


def test_effective_scenario_reproduces_the_run(tmp_path, small_scenario):
    first = MultiscaleSession(Scenario(small_scenario)).run(tmp_path / "first")
    again = MultiscaleSession(Scenario.load(first.paths["scenario"])).run(tmp_path / "again")
    assert first.paths["vtk"].read_bytes() == again.paths["vtk"].read_bytes()
    assert first.paths["metrics"].read_bytes() == again.paths["metrics"].read_bytes()


def test_reference_comparison(tmp_path, small_scenario):
    document = merged(small_scenario, {"reference": {"mesh": {"nx": 24, "ny": 20}}})
    result = MultiscaleSession(Scenario(document)).run(tmp_path)
    assert result.l2_error is not None
    assert 0 <= result.l2_error < 0.1
    assert result.energy_error >= 0
    header, row = result.paths["metrics"].read_text().splitlines()
    assert row.split(",")[header.split(",").index("l2_error")] != ""
    assert MultiscaleSession(Scenario(document)).run(tmp_path / "skip", reference=False).l2_error is None


def test_condition_number_on_request(small_scenario):
    session = MultiscaleSession(Scenario(small_scenario), options=SolveOptions(condition=True))
    result = session.solve()
    assert result.report.condition > 1
    assert result.metrics().values["kappa"] == result.report.condition


def test_refinement_follows_the_zoom(small_scenario):
    document = merged(small_scenario, {"mesh": {"refine_levels": 2, "refine_band": 0.5}})
    mesh = MultiscaleSession(Scenario(document)).mesh
    assert mesh.h_min == pytest.approx(0.25)
    assert mesh.h_max == pytest.approx(1.0)
    near = np.linalg.norm(mesh.centroids - [6.0, 5.0], axis=1) < 2.0
    assert np.all(mesh.h_cells[near] <= 0.25 + 1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("two_eps", [0.1, 1.0])
def test_zoom_displacement_matches_the_full_microscale_run(two_eps):
    scenario = Scenario.load("quasi_uniform_two_zooms").with_overrides({"mixing": {"width": two_eps}})
    reference = MultiscaleSession(scenario.reference()).solve()
    result = MultiscaleSession(scenario).solve()
    zooms, pores = scenario.zoom_level_set, scenario.pore_level_set

    def deep_in_the_zooms(points):
        return (zooms.eval(points) < -two_eps) & (pores.eval(points) < 0)

    error = field_difference(result.mesh, result.u, reference.mesh, reference.u, deep_in_the_zooms, component=1)
    assert error <= 0.1


@pytest.mark.parametrize("name", scenario_names())
def test_preset_meshes_are_conforming(name):
    mesh = MultiscaleSession(Scenario.load(name)).mesh
    mesh.validate()
    assert mesh.n_nodes - len(mesh.facets) + mesh.n_cells == 1
    assert mesh.h_min < mesh.h_max


@pytest.mark.slow
@pytest.mark.parametrize("name", scenario_names())
def test_preset_mixed_stress_lies_between_the_scales(name):
    scenario = Scenario.load(name)
    field = MultiscaleSession(scenario).solve().stress
    for values in (field.macro, field.micro, field.mixed):
        assert np.all(np.isfinite(values))
    transition = field.domains == CellDomain.TRANSITION
    assert np.any(transition) != scenario.zoom_everywhere
    low = np.minimum(field.macro, field.micro)[transition]
    high = np.maximum(field.macro, field.micro)[transition]
    mixed = field.mixed[transition]
    assert np.all(mixed >= low - 1e-12)
    assert np.all(mixed <= high + 1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("name", scenario_names())
def test_preset_outputs_do_not_depend_on_the_thread_count(tmp_path, name, monkeypatch):
    monkeypatch.setattr(assembly, "CHUNK_SIZE", 64)
    scenario = Scenario.load(name)
    serial = MultiscaleSession(scenario, threads=1).run(tmp_path / "serial", reference=False)
    parallel = MultiscaleSession(scenario, threads=8).run(tmp_path / "parallel", reference=False)
    for output in ("vtk", "metrics"):
        assert serial.paths[output].read_bytes() == parallel.paths[output].read_bytes()
