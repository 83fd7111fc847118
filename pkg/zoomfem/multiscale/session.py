import logging
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from backports.cached_property import cached_property

from zoomfem.multiscale.assembly import AssembledSystem, assemble
from zoomfem.multiscale.cutgeom import multi_cut_cells
from zoomfem.multiscale.data import Scenario
from zoomfem.multiscale.mesh import Mesh2, generate_rect, mark_near, refine
from zoomfem.multiscale.post import (
    Energies,
    MetricsRow,
    StressField,
    energies,
    export_metrics,
    export_vtk,
    field_difference,
    stresses,
)
from zoomfem.multiscale.solve import SolveOptions, SolveReport, solve_spd
from zoomfem.multiscale.utils import output_dir, write_json

logger = logging.getLogger(__name__)


class RunResult:
    def __init__(
        self,
        scenario: Scenario,
        system: AssembledSystem,
        report: SolveReport,
        u: np.ndarray,
        stress: StressField,
        energy: Energies,
    ):
        self.scenario = scenario
        self.system = system
        self.report = report
        self.u = u
        self.stress = stress
        self.energy = energy
        self.l2_error: Optional[float] = None
        self.energy_error: Optional[float] = None
        self.paths: Dict[str, Path] = {}

    @property
    def mesh(self) -> Mesh2:
        return self.system.mesh

    def metrics(self) -> MetricsRow:
        s = self.scenario
        return MetricsRow(
            h_min=self.mesh.h_min,
            h_max=self.mesh.h_max,
            two_eps=s.mixing.full_width,
            beta=s.beta,
            mode=s.mode.value,
            dofs=len(self.system.free_dofs),
            kappa=self.report.condition,
            iterations=self.report.iterations,
            l2_error=self.l2_error,
            energy_error=self.energy_error,
        )

    def __repr__(self):
        return f"<RunResult {self.scenario.name} dofs={len(self.system.free_dofs)} {self.report!r}>"


class MultiscaleSession:
    def __init__(self, scenario: Scenario, threads: int = 1, options: SolveOptions = None):
        """
        :param scenario: what to run
        :param threads: workers for the assembly; results do not depend on it
        :param options: solver tunables
        """
        self.scenario = scenario
        self.threads = max(1, int(threads))
        self.options = options or SolveOptions()

    def __repr__(self):
        return f"<MultiscaleSession {self.scenario.name} threads={self.threads}>"

    @cached_property
    def mesh(self) -> Mesh2:
        s = self.scenario
        mesh = generate_rect(s.domain, s.nx, s.ny)
        for _ in range(s.refine_levels):
            marked = mark_near(mesh, s.refine_level_set, s.refine_band)
            if len(marked) == 0:
                break
            mesh = refine(mesh, marked, 1)
        logger.info("mesh ready: %r", mesh)
        return mesh

    def check_geometry(self) -> int:
        """
        :return: the number of cells whose pore geometry the P1 level set misses
        """
        ls = self.scenario.pore_level_set
        return len(multi_cut_cells(self.mesh, ls, ls.project_p1(self.mesh)))

    @cached_property
    def system(self) -> AssembledSystem:
        s = self.scenario
        return assemble(self.mesh, s.pore_level_set, s.zoom_level_set, s.multiscale_config, threads=self.threads)

    def solve(self) -> RunResult:
        system = self.system
        report = solve_spd(system.reduced(), self.options)
        u = system.expand(report.solution)
        s = self.scenario
        stress = stresses(u, system.mesh, system.phi1, system.phi2, s.multiscale_config)
        energy = energies(u, system)
        logger.info("%r", energy)
        return RunResult(s, system, report, u, stress, energy)

    def compare(self, result: RunResult, reference: RunResult) -> None:
        """
        fills the error columns of result against a finer full microscale run, both measured on the matrix
        """
        ls = self.scenario.pore_level_set
        result.l2_error = field_difference(
            result.mesh, result.u, reference.mesh, reference.u, region=lambda p: ls.eval(p) < 0
        )
        ref_energy = reference.energy.macro + reference.energy.micro
        mine = result.energy.macro + result.energy.micro
        result.energy_error = abs(mine - ref_energy) / ref_energy if ref_energy > 0 else abs(mine)
        logger.info("l2 error %.4e, energy error %.4e against the reference", result.l2_error, result.energy_error)

    def run(self, out: Union[str, Path], reference: bool = True) -> RunResult:
        """
        the full pipeline; writes the effective scenario, the field file and the metrics row under out
        """
        out = output_dir(out)
        s = self.scenario
        paths = {"scenario": write_json(out / "scenario.effective.json", s.effective_json)}
        self.check_geometry()
        result = self.solve()
        ref_scenario = s.reference() if reference else None
        if ref_scenario is not None:
            logger.info("running the reference %r", ref_scenario)
            self.compare(result, MultiscaleSession(ref_scenario, self.threads, self.options).solve())
        cell_data = {
            "macro_weight": result.system.macro_weight / result.mesh.areas,
            "micro_weight": result.system.micro_weight / result.mesh.areas,
        }
        paths["vtk"] = export_vtk(out / s.vtk_name, result.mesh, result.u, result.stress, cell_data, title=s.name)
        paths["metrics"] = export_metrics([result.metrics()], out / s.metrics_name)
        result.paths = paths
        return result
