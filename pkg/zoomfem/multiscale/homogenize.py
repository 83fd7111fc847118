"""
   Effective macro modulus of a porous matrix by the incremental Mori-Tanaka scheme: pores are added one at a
   time and each step softens the current effective medium.
"""
import logging
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from zoomfem.multiscale.levelset import Circle
from zoomfem.multiscale.protocol import ConfigError, PorosityRangeError

logger = logging.getLogger(__name__)

DEFAULT_ESHELBY: float = 3.0


class AccumulationMode(Enum):
    INCREMENTAL = "incremental"
    CUMULATIVE = "cumulative"


class MMTParams:
    def __init__(self, eshelby: float = DEFAULT_ESHELBY, mode: AccumulationMode = AccumulationMode.INCREMENTAL):
        """
        :param eshelby: the scalar Eshelby parameter of a circular void
        :param mode: incremental uses each pore's own area fraction, cumulative the running void fraction
        """
        if not eshelby > 0:
            raise ConfigError(f"Eshelby parameter must be positive, got {eshelby!r}")
        self.eshelby = float(eshelby)
        self.mode = AccumulationMode(mode)

    def __repr__(self):
        return f"<MMTParams L={self.eshelby:g} {self.mode.value}>"


class PorePopulation:
    def __init__(self, pores: Sequence[Circle], reference_area: float):
        """
        :param pores: circular pores in insertion order
        :param reference_area: the RVE area the porosities refer to
        """
        self.pores = list(pores)
        self.reference_area = float(reference_area)
        if not self.reference_area > 0:
            raise ConfigError(f"reference area must be positive, got {reference_area!r}")
        if self.void_area >= self.reference_area:
            raise ConfigError(f"pore area {self.void_area:.6g} fills the reference area {self.reference_area:.6g}")

    @property
    def void_area(self) -> float:
        return float(sum(p.area for p in self.pores))

    @property
    def porosity(self) -> float:
        return self.void_area / self.reference_area

    def inside(self, zooms: Sequence[Circle]) -> "PorePopulation":
        """
        the zoom RVE: pores centred inside a zoom, measured against the zoom area
        """
        if not zooms:
            raise ConfigError("an inside_zooms RVE needs at least one zoom")
        kept = [p for p in self.pores if any(np.linalg.norm(p.center - z.center) < z.radius for z in zooms)]
        return PorePopulation(kept, sum(z.area for z in zooms))

    def reordered(self, order: Sequence[int]) -> "PorePopulation":
        return PorePopulation([self.pores[i] for i in order], self.reference_area)

    def __len__(self):
        return len(self.pores)

    def __repr__(self):
        return f"<PorePopulation n={len(self.pores)} porosity={self.porosity:.4f}>"


def mmt_step(e_prev: float, porosity: float, eshelby: float = DEFAULT_ESHELBY) -> float:
    """
    :return: (1 - p) E / (p L + 1 - p)
    """
    if not 0.0 <= porosity < 1.0:
        raise PorosityRangeError(porosity)
    return (1.0 - porosity) * e_prev / (porosity * eshelby + (1.0 - porosity))


def mmt_trajectory(e0: float, pores: PorePopulation, params: MMTParams = None) -> List[Tuple[float, float]]:
    """
    :return: (porosity used, modulus after the step) per inserted pore
    """
    params = params or MMTParams()
    steps = []
    modulus = float(e0)
    accumulated = 0.0
    for pore in pores.pores:
        fraction = pore.area / pores.reference_area
        accumulated += fraction
        porosity = accumulated if params.mode is AccumulationMode.CUMULATIVE else fraction
        modulus = mmt_step(modulus, porosity, params.eshelby)
        steps.append((porosity, modulus))
    return steps


def mmt_effective(e0: float, pores: PorePopulation, params: MMTParams = None) -> float:
    if not e0 > 0:
        raise ConfigError(f"matrix modulus must be positive, got {e0!r}")
    steps = mmt_trajectory(e0, pores, params)
    modulus = steps[-1][1] if steps else float(e0)
    logger.debug("effective modulus %.6g from %d pores (porosity %.4f)", modulus, len(pores), pores.porosity)
    return modulus
