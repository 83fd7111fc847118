"""
   Condition number sweeps: assemble every combination of a sweep, estimate kappa of the reduced matrix and fit
   the log-log slope of kappa against h per series.
"""
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

from zoomfem.multiscale.data import Sweep, SweepPoint
from zoomfem.multiscale.post import METRICS_HEADER, MetricsRow, export_metrics, write_csv
from zoomfem.multiscale.protocol import MultiscaleError
from zoomfem.multiscale.session import MultiscaleSession
from zoomfem.multiscale.solve import SolveOptions, cond_estimate
from zoomfem.multiscale.utils import loglog_slope, output_dir

logger = logging.getLogger(__name__)

STATUS_OK: str = "ok"
CONDSTUDY_HEADER = METRICS_HEADER + ("offset_x", "offset_y", "status")
SLOPES_HEADER = ("mode", "two_eps", "beta", "offset_x", "offset_y", "points", "slope")


def condition_row(point: SweepPoint, threads: int = 1, options: SolveOptions = None) -> MetricsRow:
    """
    kappa for one combination; a failure is recorded in the status column instead of raised
    """
    options = options or SolveOptions()
    common = dict(two_eps=point.two_eps, beta=point.beta, mode=point.mode)
    offset = dict(offset_x=point.offset[0], offset_y=point.offset[1])
    h_min = h_max = float("nan")
    try:
        session = MultiscaleSession(point.scenario(), threads, options)
        mesh = session.mesh
        h_min, h_max = mesh.h_min, mesh.h_max
        reduced = session.system.reduced()
        kappa = cond_estimate(reduced.matrix, options=options)
    except MultiscaleError as e:
        logger.warning("sweep point %r failed: %s", point, e.reason)
        return MetricsRow(h_min=h_min, h_max=h_max, dofs=None, status=f"{e.category}: {e.message}", **common, **offset)
    logger.info("h=%.4g %s 2eps=%g beta=%g kappa=%.4e", h_min, point.mode, point.two_eps, point.beta, kappa)
    return MetricsRow(
        h_min=h_min,
        h_max=h_max,
        dofs=reduced.dimension,
        kappa=kappa,
        status=STATUS_OK,
        **common,
        **offset,
    )


def _cell(value) -> str:
    return format(value, ".17g") if isinstance(value, float) else str(value)


def fit_slopes(points: List[SweepPoint], rows: List[MetricsRow]) -> List[Tuple]:
    """
    :return: one (mode, 2eps, beta, offset_x, offset_y, points, slope) tuple per series with two or more good rows
    """
    series: Dict[Tuple, List[MetricsRow]] = {}
    for point, row in zip(points, rows):
        if row.values.get("status") == STATUS_OK:
            series.setdefault(point.series, []).append(row)
    out = []
    for (mode, two_eps, beta, offset), members in series.items():
        if len(members) < 2:
            continue
        slope = loglog_slope([r.h_min for r in members], [r.values["kappa"] for r in members])
        logger.info("series %s 2eps=%g beta=%g offset=%s: kappa ~ h^%.3f", mode, two_eps, beta, offset, slope)
        out.append((mode, two_eps, beta, offset[0], offset[1], len(members), slope))
    return out


class CondStudyResult:
    def __init__(self, rows: List[MetricsRow], slopes: List[Tuple], paths: Dict[str, Path]):
        self.rows = rows
        self.slopes = slopes
        self.paths = paths

    def __repr__(self):
        failed = sum(r.values.get("status") != STATUS_OK for r in self.rows)
        return f"<CondStudyResult rows={len(self.rows)} failed={failed} series={len(self.slopes)}>"


def run_condstudy(
    sweep: Sweep, out: Union[str, Path], threads: int = 1, options: SolveOptions = None
) -> CondStudyResult:
    out = output_dir(out)
    points = sweep.points()
    rows = [condition_row(p, threads, options) for p in points]
    slopes = fit_slopes(points, rows)
    paths = {
        "table": export_metrics(rows, out / sweep.table_name(), CONDSTUDY_HEADER),
        "slopes": write_csv(out / sweep.slopes_name(), SLOPES_HEADER, [[_cell(v) for v in s] for s in slopes]),
    }
    return CondStudyResult(rows, slopes, paths)
