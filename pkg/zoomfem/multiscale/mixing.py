from enum import Enum

import numpy as np

from zoomfem.multiscale.levelset import NodalField
from zoomfem.multiscale.mesh import CellSet, Mesh2
from zoomfem.multiscale.protocol import ConfigError


class MixingProfile(Enum):
    SINE = "sine"
    LINEAR = "linear"


class MixingWeight:
    """
    alpha is the macro weight: 0 deep inside a zoom, 1 in the macro region. the micro weight is 1 - alpha
    """

    def __init__(self, half_width: float, profile: MixingProfile = MixingProfile.SINE):
        if not half_width > 0:
            raise ConfigError(f"mixing half-width must be positive, got {half_width!r}")
        self.half_width = float(half_width)
        self.profile = MixingProfile(profile)

    @staticmethod
    def from_full_width(width: float, profile: MixingProfile = MixingProfile.SINE) -> "MixingWeight":
        """
        :param width: the transition width 2*eps as scenarios state it
        """
        return MixingWeight(0.5 * width, profile)

    @property
    def full_width(self) -> float:
        return 2.0 * self.half_width

    def alpha(self, phi):
        eps = self.half_width
        clipped = np.clip(np.asarray(phi, dtype=float), -eps, eps)
        if self.profile is MixingProfile.SINE:
            value = 0.5 * (1.0 + np.sin(np.pi / (2.0 * eps) * clipped))
        else:
            value = (clipped + eps) / (2.0 * eps)
        return float(value) if np.ndim(value) == 0 else value

    def micro(self, phi):
        return 1.0 - self.alpha(phi)

    def __repr__(self):
        return f"<MixingWeight 2eps={self.full_width:g} {self.profile.value}>"


def alpha(w: MixingWeight, phi):
    return w.alpha(phi)


def transition_cells(mesh: Mesh2, field: NodalField, eps: float) -> CellSet:
    """
    cells whose nodal range of the zoom level set meets [-eps, eps]
    """
    if not eps > 0:
        raise ConfigError(f"transition half-width must be positive, got {eps!r}")
    values = field.cell_values()
    return CellSet.from_mask((values.min(axis=1) <= eps) & (values.max(axis=1) >= -eps))
