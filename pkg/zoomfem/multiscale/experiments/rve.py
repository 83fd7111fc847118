"""
   A finite element check of the homogenized modulus: a pore-resolving strip test compared with the same test
   on the solid plate.
"""
import logging
from typing import Sequence

import numpy as np

from zoomfem.multiscale.assembly import (
    DEFAULT_BETA,
    DirichletCondition,
    Material,
    MultiscaleConfig,
    assemble,
)
from zoomfem.multiscale.levelset import Circle, pore_level_set, zoom_level_set
from zoomfem.multiscale.mesh import BoundaryTag, Rectangle, generate_rect
from zoomfem.multiscale.mixing import MixingWeight
from zoomfem.multiscale.protocol import ConfigError
from zoomfem.multiscale.solve import SolveOptions, solve_spd

logger = logging.getLogger(__name__)


class RveResult:
    def __init__(self, modulus: float, reaction: float, solid_reaction: float, porosity: float):
        """
        :param modulus: the apparent Young's modulus of the porous plate
        :param reaction: the vertical force on the loaded edge with pores
        :param solid_reaction: the same force without pores
        :param porosity: the resolved pore area fraction
        """
        self.modulus = modulus
        self.reaction = reaction
        self.solid_reaction = solid_reaction
        self.porosity = porosity

    def __repr__(self):
        return f"<RveResult E={self.modulus:.6g} porosity={self.porosity:.4f}>"


def _strip_reaction(
    pores: Sequence[Circle], domain: Rectangle, h: float, material: Material, strain: float, beta: float
) -> float:
    mesh = generate_rect(domain, max(1, int(round(domain.width / h))), max(1, int(round(domain.height / h))))
    # rollers on bottom and left, the top pulled down uniformly
    dirichlet = [
        DirichletCondition(BoundaryTag.TOP, (None, -strain * domain.height)),
        DirichletCondition(BoundaryTag.BOTTOM, (None, 0.0)),
        DirichletCondition(BoundaryTag.LEFT, (0.0, None)),
    ]
    config = MultiscaleConfig(
        micro=material, macro=material, mixing=MixingWeight(h), dirichlet=dirichlet, beta=beta,
    )
    system = assemble(mesh, pore_level_set(pores), zoom_level_set([], whole_domain=True), config)
    u = system.expand(solve_spd(system.reduced(), SolveOptions()).solution)
    top = 2 * mesh.tagged_nodes(BoundaryTag.TOP) + 1
    return float(-np.sum(system.reactions(u)[top]))


def rve_modulus(
    pores: Sequence[Circle],
    domain: Rectangle,
    h: float,
    material: Material,
    strain: float = 1e-3,
    beta: float = DEFAULT_BETA,
) -> RveResult:
    """
    :param pores: circular pores inside the domain
    :param domain: the plate
    :param h: the mesh size of the structured background grid
    :param material: the matrix material; its modulus scales the result
    :param strain: the imposed vertical compression
    :param beta: ghost penalty parameter of the pore-resolving run
    """
    if not h > 0:
        raise ConfigError(f"mesh size must be positive, got {h!r}")
    porous = _strip_reaction(pores, domain, h, material, strain, beta)
    solid = _strip_reaction([], domain, h, material, strain, beta)
    porosity = sum(p.area for p in pores) / domain.area
    result = RveResult(material.young * porous / solid, porous, solid, porosity)
    logger.info("finite element RVE: %r", result)
    return result
