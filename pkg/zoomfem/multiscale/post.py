"""
   Stress recovery, energies and the files a run leaves behind: a legacy VTK field file and a CSV metrics table.
"""
import csv
import logging
from enum import IntEnum
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from zoomfem.multiscale.assembly import AssembledSystem, MultiscaleConfig, cell_dofs, strain_operators
from zoomfem.multiscale.cutgeom import QuadratureRule, Side, decompose
from zoomfem.multiscale.levelset import NodalField
from zoomfem.multiscale.mesh import Mesh2
from zoomfem.multiscale.protocol import ConfigError, OutputError

logger = logging.getLogger(__name__)

VTK_HEADER: str = "# vtk DataFile Version 3.0"
METRICS_HEADER = (
    "h_min",
    "h_max",
    "two_eps",
    "beta",
    "mode",
    "dofs",
    "kappa",
    "iterations",
    "l2_error",
    "energy_error",
)


class CellDomain(IntEnum):
    MACRO = 0
    TRANSITION = 1
    MICRO = 2
    VOID = 3


class StressField:
    def __init__(
        self, macro: np.ndarray, micro: np.ndarray, mixed: np.ndarray, alpha: np.ndarray, domains: np.ndarray
    ):
        """
        :param macro: (m, 3) D_M eps per cell, Voigt order (xx, yy, xy)
        :param micro: (m, 3) D_m eps per cell, zero on void cells
        :param mixed: (m, 3) the blended stress
        :param alpha: the macro weight at each centroid
        :param domains: CellDomain code per cell
        """
        self.macro = macro
        self.micro = micro
        self.mixed = mixed
        self.alpha = alpha
        self.domains = domains

    @property
    def n_cells(self) -> int:
        return len(self.mixed)

    def component(self, name: str, which: str = "mixed") -> np.ndarray:
        index = {"xx": 0, "yy": 1, "xy": 2}[name]
        return getattr(self, which)[:, index]

    def __repr__(self):
        counts = {d.name.lower(): int(np.sum(self.domains == d)) for d in CellDomain}
        return f"<StressField cells={self.n_cells} {counts}>"


def cell_strains(mesh: Mesh2, u: np.ndarray) -> np.ndarray:
    """
    :return: (m, 3) constant engineering strains (e_xx, e_yy, 2 e_xy) per cell
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (2 * mesh.n_nodes,):
        raise ConfigError(f"displacement has {u.size} entries for {mesh.n_nodes} nodes")
    return np.einsum("mij,mj->mi", strain_operators(mesh), u[cell_dofs(mesh.cells)])


def stresses(u: np.ndarray, mesh: Mesh2, phi1: NodalField, phi2: NodalField, config: MultiscaleConfig) -> StressField:
    """
    per-cell macro, micro and mixed stresses; the weight is taken at the centroid
    """
    strain = cell_strains(mesh, u)
    macro = strain @ config.macro.hooke_voigt().T
    micro = strain @ config.micro.hooke_voigt().T

    eps = config.eps
    phi = phi2.cell_values().mean(axis=1)
    alpha = np.asarray(config.mixing.alpha(phi), dtype=float).reshape(-1)
    domains = np.full(mesh.n_cells, int(CellDomain.TRANSITION))
    domains[phi >= eps] = int(CellDomain.MACRO)
    domains[phi <= -eps] = int(CellDomain.MICRO)
    sides = decompose(mesh, phi1).sides
    void = (domains == int(CellDomain.MICRO)) & (sides == int(Side.POSITIVE))
    domains[void] = int(CellDomain.VOID)
    micro[void] = 0.0

    mixed = alpha[:, None] * macro + (1.0 - alpha[:, None]) * micro
    mixed[alpha == 1.0] = macro[alpha == 1.0]
    mixed[alpha == 0.0] = micro[alpha == 0.0]
    return StressField(macro, micro, mixed, alpha, domains)


class Energies:
    def __init__(self, macro: float, micro: float, ghost: float):
        self.macro = macro
        self.micro = micro
        self.ghost = ghost

    @property
    def total(self) -> float:
        return self.macro + self.micro + self.ghost

    def __repr__(self):
        return f"<Energies macro={self.macro:.6e} micro={self.micro:.6e} ghost={self.ghost:.6e}>"


def energies(u: np.ndarray, system: AssembledSystem) -> Energies:
    """
    half the weighted strain energies of both models and of the ghost penalty; void cells carry no micro weight
    """
    strain = cell_strains(system.mesh, u)
    config = system.config
    dm = np.einsum("mi,ij,mj->m", strain, config.macro.hooke_voigt(), strain)
    dmu = np.einsum("mi,ij,mj->m", strain, config.micro.hooke_voigt(), strain)
    return Energies(
        macro=0.5 * float(system.macro_weight @ dm),
        micro=0.5 * float(system.micro_weight @ dmu),
        ghost=system.ghost_energy(u),
    )


def evaluate(mesh: Mesh2, u: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    :return: (n, 2) displacement of the P1 field at physical points, nan outside the mesh
    """
    cells = mesh.locate(points)
    out = np.full((len(points), 2), np.nan)
    inside = cells >= 0
    if np.any(inside):
        bary = mesh.barycentric(cells[inside], points[inside])
        nodal = np.asarray(u, dtype=float).reshape(-1, 2)[mesh.cells[cells[inside]]]
        out[inside] = np.einsum("ik,ikd->id", bary, nodal)
    return out


def field_difference(
    mesh: Mesh2,
    u: np.ndarray,
    reference_mesh: Mesh2,
    reference_u: np.ndarray,
    region: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    component: Optional[int] = None,
) -> float:
    """
    relative L2 difference integrated on the reference mesh
    :param region: a mask over points; the whole reference mesh if omitted
    :param component: 0 or 1 for one displacement component, both if omitted
    """
    rule = QuadratureRule.on_triangles(reference_mesh.cell_coords, np.arange(reference_mesh.n_cells), 2)
    points, weights = rule.points, rule.weights
    if region is not None:
        keep = np.asarray(region(points), dtype=bool)
        points, weights, cells = points[keep], weights[keep], rule.cells[keep]
    else:
        cells = rule.cells
    if len(points) == 0:
        raise ConfigError("comparison region contains no quadrature points")
    bary = reference_mesh.barycentric(cells, points)
    nodal = np.asarray(reference_u, dtype=float).reshape(-1, 2)[reference_mesh.cells[cells]]
    ref = np.einsum("ik,ikd->id", bary, nodal)
    mine = evaluate(mesh, u, points)
    if component is not None:
        ref, mine = ref[:, component : component + 1], mine[:, component : component + 1]
    found = np.all(np.isfinite(mine), axis=1)
    diff = float(np.sum(weights[found] * np.sum((mine[found] - ref[found]) ** 2, axis=1)))
    norm = float(np.sum(weights[found] * np.sum(ref[found] ** 2, axis=1)))
    return float(np.sqrt(diff / norm)) if norm > 0 else float(np.sqrt(diff))


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _scalars(name: str, values: Iterable, kind: str = "double") -> List[str]:
    lines = [f"SCALARS {name} {kind} 1", "LOOKUP_TABLE default"]
    if kind == "int":
        lines += [str(int(v)) for v in values]
    else:
        lines += [_fmt(v) for v in values]
    return lines


def export_vtk(
    path: Union[str, Path],
    mesh: Mesh2,
    u: np.ndarray,
    stress: StressField,
    cell_data: Optional[Dict[str, np.ndarray]] = None,
    title: str = "zoomfem multiscale solution",
) -> Path:
    """
    a legacy ASCII unstructured grid: displacement as point vectors, stresses, weight and domain codes per cell
    """
    path = Path(path)
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    if len(u) != mesh.n_nodes or stress.n_cells != mesh.n_cells:
        raise ConfigError("field sizes do not match the mesh")
    lines = [VTK_HEADER, title, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_nodes} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0" for x, y in mesh.nodes.tolist()]
    lines.append(f"CELLS {mesh.n_cells} {4 * mesh.n_cells}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.cells.tolist()]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += ["5"] * mesh.n_cells
    lines += [f"POINT_DATA {mesh.n_nodes}", "VECTORS displacement double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0" for x, y in u.tolist()]
    lines.append(f"CELL_DATA {mesh.n_cells}")
    for which in ("mixed", "macro", "micro"):
        for comp in ("xx", "yy", "xy"):
            lines += _scalars(f"sigma_{comp}_{which}", stress.component(comp, which))
    lines += _scalars("alpha", stress.alpha)
    lines += _scalars("domain", stress.domains, "int")
    for name, values in sorted((cell_data or {}).items()):
        lines += _scalars(name, values)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(e, path) from e
    logger.info("wrote %s (%d cells)", path, mesh.n_cells)
    return path


def _read_lines(path: Union[str, Path]) -> List[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise OutputError(e, path) from e


def read_vtk_points(path: Union[str, Path]) -> np.ndarray:
    lines = _read_lines(path)
    for i, line in enumerate(lines):
        if line.startswith("POINTS "):
            n = int(line.split()[1])
            return np.array([[float(t) for t in row.split()[:2]] for row in lines[i + 1 : i + 1 + n]])
    raise ConfigError(f"{path} has no POINTS section")


def read_vtk_cell_scalars(path: Union[str, Path], name: str) -> np.ndarray:
    lines = _read_lines(path)
    n = None
    for i, line in enumerate(lines):
        if line.startswith("CELL_DATA "):
            n = int(line.split()[1])
        elif n is not None and line.startswith(f"SCALARS {name} "):
            return np.array([float(t) for t in lines[i + 2 : i + 2 + n]])
    raise ConfigError(f"{path} has no cell scalars named {name!r}")


class MetricsRow:
    def __init__(
        self,
        h_min: float,
        h_max: float,
        two_eps: float,
        beta: float,
        mode: str,
        dofs: int,
        kappa: float = None,
        iterations: int = None,
        l2_error: float = None,
        energy_error: float = None,
        **extra,
    ):
        """
        :param extra: further columns, written only when the header names them
        """
        self.values = dict(
            h_min=h_min,
            h_max=h_max,
            two_eps=two_eps,
            beta=beta,
            mode=mode,
            dofs=dofs,
            kappa=kappa,
            iterations=iterations,
            l2_error=l2_error,
            energy_error=energy_error,
        )
        self.values.update(extra)

    @property
    def h_min(self) -> float:
        return float(self.values["h_min"])

    def cells(self, header: Sequence[str]) -> List[str]:
        out = []
        for key in header:
            value = self.values.get(key)
            if value is None:
                out.append("")
            elif isinstance(value, float):
                out.append(_fmt(value))
            else:
                out.append(str(value))
        return out

    def __repr__(self):
        return f"<MetricsRow {self.values}>"


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise OutputError(e, path) from e
    return path


def _coarse_first(row: MetricsRow) -> Tuple[bool, float]:
    # a row whose mesh failed has no h_min and goes last
    h = row.h_min
    return (True, 0.0) if np.isnan(h) else (False, -h)


def export_metrics(rows: Sequence[MetricsRow], path: Union[str, Path], header: Sequence[str] = METRICS_HEADER) -> Path:
    """
    one row per run, coarsest mesh first and rows without a mesh last
    """
    ordered = sorted(rows, key=_coarse_first)
    path = write_csv(path, header, [row.cells(header) for row in ordered])
    logger.info("wrote %d metrics rows to %s", len(ordered), path)
    return path
