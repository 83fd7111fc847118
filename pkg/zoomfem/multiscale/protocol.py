from pathlib import Path
from typing import Optional, Union

CATEGORY_CONFIG: str = "config"
CATEGORY_GEOMETRY: str = "geometry"
CATEGORY_ASSEMBLY: str = "assembly"
CATEGORY_SOLVER: str = "solver"
CATEGORY_IO: str = "io"


class MultiscaleError(Exception):
    """
    root of every error raised by the solver. the category is what the command line reports
    """

    category: str = CATEGORY_CONFIG

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    @property
    def reason(self) -> str:
        return f"error category={self.category} message={self.message}"


class ConfigError(MultiscaleError, ValueError):
    category = CATEGORY_CONFIG


class PorosityRangeError(ConfigError):
    def __init__(self, porosity: float):
        super().__init__(f"porosity {porosity!r} outside [0, 1)")
        self.porosity = porosity


class GeometryError(MultiscaleError):
    category = CATEGORY_GEOMETRY


class DegenerateGradientError(GeometryError):
    def __init__(self, point, norm: float):
        super().__init__(f"level set gradient vanishes at {tuple(point)} (norm {norm:.3e})")
        self.point = point
        self.norm = norm


class DegenerateCutError(GeometryError):
    pass


class AssemblyError(MultiscaleError):
    category = CATEGORY_ASSEMBLY


class BoundaryFacetError(AssemblyError):
    def __init__(self, facet: int):
        super().__init__(f"facet {facet} lies on the boundary, ghost penalty needs two cells")
        self.facet = facet


class SingularSystemError(AssemblyError):
    pass


class SolverError(MultiscaleError):
    category = CATEGORY_SOLVER


class NotPositiveDefiniteError(SolverError):
    pass


class NonConvergenceError(SolverError):
    def __init__(self, iterations: int, residual: Optional[float] = None):
        detail = f", relative residual {residual:.3e}" if residual is not None else ""
        super().__init__(f"conjugate gradients did not converge in {iterations} iterations{detail}")
        self.iterations = iterations
        self.residual = residual


class OutputError(MultiscaleError):
    category = CATEGORY_IO

    def __init__(self, ex: OSError, path: Union[str, Path]):
        """
        :param ex: the underlying I/O error
        :param path: the file that was being read or written
        """
        self.original = ex
        self.path = Path(path)
        detail = ex.strerror or str(ex)
        super().__init__(f"{self.path}: {detail}")
