"""
   Command line entry point: zoomfem {run, condstudy, homogenize, validate}. Every output goes under --out; a
   failure prints one line "error category=<category> message=<text>" and exits with 1.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from zoomfem.multiscale.cutgeom import decompose, measures, multi_cut_cells
from zoomfem.multiscale.data import RVE_INSIDE_ZOOMS, RVE_WHOLE_DOMAIN, Scenario, Sweep
from zoomfem.multiscale.experiments.condstudy import run_condstudy
from zoomfem.multiscale.experiments.rve import rve_modulus
from zoomfem.multiscale.homogenize import PorePopulation, mmt_effective, mmt_trajectory
from zoomfem.multiscale.levelset import LevelSet
from zoomfem.multiscale.mesh import Rectangle
from zoomfem.multiscale.post import write_csv
from zoomfem.multiscale.protocol import MultiscaleError
from zoomfem.multiscale.session import MultiscaleSession
from zoomfem.multiscale.solve import SolveOptions
from zoomfem.multiscale.utils import output_dir, write_json

logger = logging.getLogger(__name__)

MC_BATCH: int = 1_000_000


def _report(line: str) -> None:
    print(line, flush=True)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = Scenario.load(args.config)
    options = SolveOptions(condition=not args.no_kappa)
    result = MultiscaleSession(scenario, args.threads, options).run(args.out, reference=not args.no_reference)
    row = result.metrics().values
    _report(
        f"run {scenario.name}: dofs={row['dofs']} iterations={row['iterations']} "
        f"residual={result.report.residual:.3e} kappa={row['kappa']}"
    )
    e = result.energy
    _report(f"energy macro={e.macro:.6e} micro={e.micro:.6e} ghost={e.ghost:.6e}")
    if result.l2_error is not None:
        _report(f"reference l2_error={result.l2_error:.6e} energy_error={result.energy_error:.6e}")
    for name, path in sorted(result.paths.items()):
        _report(f"wrote {name}: {path}")
    return 0


def cmd_condstudy(args: argparse.Namespace) -> int:
    sweep = Sweep.load(args.config)
    result = run_condstudy(sweep, args.out, args.threads, SolveOptions())
    for mode, two_eps, beta, ox, oy, n, slope in result.slopes:
        _report(f"series mode={mode} two_eps={two_eps:g} beta={beta:g} offset=({ox:g}, {oy:g}) points={n}")
        _report(f"  slope={slope:.4f}")
    _report(f"{result!r}")
    for name, path in sorted(result.paths.items()):
        _report(f"wrote {name}: {path}")
    return 0


def cmd_homogenize(args: argparse.Namespace) -> int:
    scenario = Scenario.load(args.config)
    rve = args.rve or scenario.rve
    population = PorePopulation(scenario.pores, scenario.domain.area)
    if rve == RVE_INSIDE_ZOOMS:
        population = population.inside(scenario.zooms)
    e0 = scenario.micro_material.young
    steps = mmt_trajectory(e0, population, scenario.mmt_params)
    modulus = steps[-1][1] if steps else e0
    _report(f"rve={rve} pores={len(population)} porosity={population.porosity:.6f} E0={e0:g}")
    for i, (porosity, value) in enumerate(steps, start=1):
        _report(f"step {i}: porosity={porosity:.6f} E={value:.6f}")
    _report(f"E_M={modulus:.6f}")
    out = output_dir(args.out)
    write_csv(
        out / "homogenize.csv",
        ("step", "porosity", "modulus"),
        [[str(i), format(p, ".17g"), format(v, ".17g")] for i, (p, v) in enumerate(steps, start=1)],
    )
    if args.fem_h:
        # the finite element check always resolves every pore of the plate
        whole = mmt_effective(e0, PorePopulation(scenario.pores, scenario.domain.area), scenario.mmt_params)
        fem = rve_modulus(scenario.pores, scenario.domain, args.fem_h, scenario.micro_material)
        _report(f"E_fem={fem.modulus:.6f} E_mmt_whole_domain={whole:.6f}")
        _report(f"relative_difference={abs(fem.modulus - whole) / fem.modulus:.4f}")
    return 0


def monte_carlo_area(ls: LevelSet, domain: Rectangle, samples: int, seed: int):
    """
    :return: the area where ls is negative and its standard error, from uniform samples
    """
    rng = np.random.default_rng(seed)
    hits, done = 0, 0
    while done < samples:
        n = min(MC_BATCH, samples - done)
        points = np.column_stack(
            [rng.uniform(domain.xmin, domain.xmax, n), rng.uniform(domain.ymin, domain.ymax, n)]
        )
        hits += int(np.sum(ls.eval(points) < 0))
        done += n
    p = hits / samples
    return domain.area * p, domain.area * float(np.sqrt(p * (1 - p) / samples))


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = Scenario.load(args.config)
    session = MultiscaleSession(scenario, args.threads)
    mesh = session.mesh
    ls = scenario.pore_level_set
    field = ls.project_p1(mesh)
    matrix_area, pore_area, interface = measures(decompose(mesh, field))
    flagged = multi_cut_cells(mesh, ls, field)
    report = {
        "h_min": mesh.h_min,
        "h_max": mesh.h_max,
        "cells": mesh.n_cells,
        "matrix_area": matrix_area,
        "pore_area": pore_area,
        "interface_length": interface,
        "analytic_pore_area": float(sum(p.area for p in scenario.pores)),
        "analytic_interface_length": float(sum(p.perimeter for p in scenario.pores)),
        "multi_cut_cells": len(flagged),
    }
    report["analytic_matrix_area"] = scenario.domain.area - report["analytic_pore_area"]
    if args.samples:
        area, error = monte_carlo_area(ls, scenario.domain, args.samples, args.seed)
        report["monte_carlo_matrix_area"] = area
        report["monte_carlo_standard_error"] = error
    for key, value in report.items():
        _report(f"{key}={value:.12g}" if isinstance(value, float) else f"{key}={value}")
    if flagged:
        _report(f"warning: {len(flagged)} cells cut more than once, refine the mesh near the pores")
    write_json(output_dir(args.out) / "validate.json", report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zoomfem", description="unfitted concurrent multiscale elasticity")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, what: str) -> None:
        p.add_argument("--config", required=True, help=f"{what} file or bundled preset name")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--threads", type=int, default=1, help="assembly workers; results do not depend on it")
        p.add_argument("--seed", type=int, default=0, help="seed for sampling oracles")

    run = commands.add_parser("run", help="solve one scenario and export fields and metrics")
    common(run, "scenario")
    run.add_argument("--no-kappa", action="store_true", help="skip the condition number estimate")
    run.add_argument("--no-reference", action="store_true", help="skip the reference run even if configured")
    run.set_defaults(handler=cmd_run)

    cond = commands.add_parser("condstudy", help="condition numbers over a sweep of meshes and parameters")
    common(cond, "sweep")
    cond.set_defaults(handler=cmd_condstudy)

    homog = commands.add_parser("homogenize", help="effective macro modulus of the scenario's pores")
    common(homog, "scenario")
    homog.add_argument("--rve", choices=[RVE_WHOLE_DOMAIN, RVE_INSIDE_ZOOMS], help="override the scenario's RVE")
    homog.add_argument("--fem-h", type=float, help="also run the finite element RVE check with this mesh size")
    homog.set_defaults(handler=cmd_homogenize)

    validate = commands.add_parser("validate", help="discrete geometry against analytic values")
    common(validate, "scenario")
    validate.add_argument("--samples", type=int, default=0, help="Monte Carlo samples for the matrix area")
    validate.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except MultiscaleError as e:
        print(e.reason, file=sys.stderr, flush=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
