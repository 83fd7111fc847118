from typing import Any, Dict

import numpy as np
import pytest

from zoomfem.multiscale.assembly import DirichletCondition, Material, MultiscaleConfig, TractionCondition
from zoomfem.multiscale.mesh import BoundaryTag, Rectangle
from zoomfem.multiscale.mixing import MixingWeight


@pytest.fixture
def unit_square() -> Rectangle:
    return Rectangle(0.0, 0.0, 1.0, 1.0)


@pytest.fixture
def plate() -> Rectangle:
    return Rectangle(0.0, 0.0, 12.0, 10.0)


def homogeneous_config(
    young: float = 1.0,
    poisson: float = 0.0,
    half_width: float = 0.5,
    beta: float = 0.005,
    dirichlet=None,
    tractions=(),
    **kwargs,
) -> MultiscaleConfig:
    """
    the same material on both scales, rollers on bottom and left unless told otherwise
    """
    material = Material(young, poisson)
    if dirichlet is None:
        dirichlet = [
            DirichletCondition(BoundaryTag.BOTTOM, (None, 0.0)),
            DirichletCondition(BoundaryTag.LEFT, (0.0, None)),
        ]
    return MultiscaleConfig(
        micro=material,
        macro=material,
        mixing=MixingWeight(half_width),
        dirichlet=dirichlet,
        tractions=list(tractions),
        beta=beta,
        **kwargs,
    )


def top_traction(value: float) -> TractionCondition:
    return TractionCondition(BoundaryTag.TOP, (0.0, value))


def linear_field(nodes: np.ndarray, grad: np.ndarray, shift=(0.0, 0.0)) -> np.ndarray:
    """
    :return: the interleaved dof vector of u(x) = grad @ x + shift at the nodes
    """
    u = nodes @ np.asarray(grad, dtype=float).T + np.asarray(shift, dtype=float)
    return u.reshape(-1)


@pytest.fixture
def small_scenario() -> Dict[str, Any]:
    """
    one pore inside one zoom on a coarse plate, displaced on top
    """
    return {
        "name": "small",
        "domain": [0.0, 0.0, 12.0, 10.0],
        "mesh": {"nx": 12, "ny": 10},
        "pores": [{"center": [6.1, 5.05], "radius": 0.8}],
        "zooms": [{"center": [6.0, 5.0], "radius": 2.5}],
        "mixing": {"width": 1.0},
        "bcs": {"clamped": "bottom", "loaded": "top", "displacement": [0.0, -0.1]},
        "output": {"vtk": "fields.vtk", "metrics": "metrics.csv"},
    }
