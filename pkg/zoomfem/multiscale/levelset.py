"""
   Geometry as composable signed distance functions. Shapes are positive inside; a LevelSet adds the
   sign convention, so pores read positive inside the pores and zooms read positive outside the zooms.
"""
from abc import ABC, abstractmethod
from enum import Enum
from typing import TYPE_CHECKING, Sequence, Tuple

import numpy as np

from zoomfem.multiscale.protocol import ConfigError, DegenerateGradientError

if TYPE_CHECKING:
    from zoomfem.multiscale.mesh import Mesh2

GRADIENT_TOLERANCE: float = 1e-12


def _as_points(p) -> Tuple[np.ndarray, bool]:
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != 2:
        raise ConfigError(f"points must be 2d, got shape {np.shape(p)}")
    return pts, single


class Shape(ABC):
    """ a region of the plane with a signed distance that is positive inside """

    @abstractmethod
    def value(self, points: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def gradient(self, points: np.ndarray) -> np.ndarray:
        ...

    def __or__(self, other: "Shape") -> "Shape":
        return Union([self, other])

    def __and__(self, other: "Shape") -> "Shape":
        return Intersection([self, other])

    def __invert__(self) -> "Shape":
        return Complement(self)


class Circle(Shape):
    def __init__(self, center: Sequence[float], radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.center.shape != (2,):
            raise ConfigError(f"circle center must be a 2d point, got {center!r}")
        if not self.radius > 0:
            raise ConfigError(f"circle radius must be positive, got {radius!r}")

    @property
    def area(self) -> float:
        return np.pi * self.radius ** 2

    @property
    def perimeter(self) -> float:
        return 2 * np.pi * self.radius

    def value(self, points):
        return self.radius - np.linalg.norm(points - self.center, axis=-1)

    def gradient(self, points):
        d = points - self.center
        norm = np.linalg.norm(d, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(norm > 0, -d / norm, 0.0)
        return g

    def __repr__(self):
        return f"<Circle center=({self.center[0]:g}, {self.center[1]:g}) radius={self.radius:g}>"


class HalfPlane(Shape):
    """
    the side of a line the normal points to. the distance grows along the normal
    """

    def __init__(self, point: Sequence[float], normal: Sequence[float]):
        self.point = np.asarray(point, dtype=float)
        normal = np.asarray(normal, dtype=float)
        length = np.linalg.norm(normal)
        if length == 0:
            raise ConfigError("half-plane normal must be nonzero")
        self.normal = normal / length

    def value(self, points):
        return (points - self.point) @ self.normal

    def gradient(self, points):
        return np.broadcast_to(self.normal, points.shape).copy()

    def __repr__(self):
        return f"<HalfPlane point={tuple(self.point)} normal={tuple(self.normal)}>"


class Box(Shape):
    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if np.any(self.upper <= self.lower):
            raise ConfigError(f"box corners out of order: {lower!r}, {upper!r}")
        self._center = 0.5 * (self.lower + self.upper)
        self._half = 0.5 * (self.upper - self.lower)

    def _offsets(self, points):
        rel = points - self._center
        return rel, np.abs(rel) - self._half

    def value(self, points):
        _, q = self._offsets(points)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return -(outside + inside)

    def gradient(self, points):
        rel, q = self._offsets(points)
        sign = np.where(rel < 0, -1.0, 1.0)
        qpos = np.maximum(q, 0.0)
        outside = np.linalg.norm(qpos, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            g_out = np.where(outside > 0, qpos / outside, 0.0)
        axis = np.argmax(q, axis=-1)
        g_in = np.zeros_like(q)
        g_in[np.arange(len(q)), axis] = 1.0
        g = np.where(outside > 0, g_out, g_in)
        return -sign * g


class EmptyShape(Shape):
    """ contains nothing: the distance is -inf everywhere """

    def value(self, points):
        return np.full(len(points), -np.inf)

    def gradient(self, points):
        return np.zeros_like(points)

    def __repr__(self):
        return "<EmptyShape>"


class _Composite(Shape):
    def __init__(self, children: Sequence[Shape]):
        self.children = list(children)
        if not self.children:
            raise ConfigError(f"{type(self).__name__} needs at least one child")

    def _stack(self, points):
        return np.stack([c.value(points) for c in self.children], axis=0)

    @abstractmethod
    def _select(self, values: np.ndarray) -> np.ndarray:
        ...

    def value(self, points):
        values = self._stack(points)
        return values[self._select(values), np.arange(values.shape[1])]

    def gradient(self, points):
        # ties go to the first child (argmax/argmin return the first hit)
        active = self._select(self._stack(points))
        grads = np.stack([c.gradient(points) for c in self.children], axis=0)
        return grads[active, np.arange(len(points))]

    def __repr__(self):
        return f"<{type(self).__name__} of {len(self.children)}>"


class Union(_Composite):
    def _select(self, values):
        return np.argmax(values, axis=0)


class Intersection(_Composite):
    def _select(self, values):
        return np.argmin(values, axis=0)


class Complement(Shape):
    def __init__(self, child: Shape):
        self.child = child

    def value(self, points):
        return -self.child.value(points)

    def gradient(self, points):
        return -self.child.gradient(points)

    def __repr__(self):
        return f"<Complement of {self.child!r}>"


class SignConvention(Enum):
    POSITIVE_INSIDE = "positive_inside"
    POSITIVE_OUTSIDE = "positive_outside"


class LevelSet:
    def __init__(
        self, shape: Shape, convention: SignConvention = SignConvention.POSITIVE_INSIDE, scale: float = 1.0,
    ):
        """
        :param shape: the region, positive inside
        :param convention: which side of the zero set reads positive
        :param scale: a positive factor applied to every value
        """
        if not scale > 0:
            raise ConfigError(f"level set scale must be positive, got {scale!r}")
        self.shape = shape
        self.convention = convention
        self.scale = float(scale)

    @property
    def _sign(self) -> float:
        return self.scale if self.convention is SignConvention.POSITIVE_INSIDE else -self.scale

    def eval(self, p) -> np.ndarray:
        """
        :param p: a point or an (n, 2) array of points
        :return: the signed distance, a float for a single point
        """
        pts, single = _as_points(p)
        values = self._sign * self.shape.value(pts)
        return float(values[0]) if single else values

    def gradient(self, p) -> np.ndarray:
        pts, single = _as_points(p)
        grads = self._sign * self.shape.gradient(pts)
        return grads[0] if single else grads

    def unit_normal(self, p) -> np.ndarray:
        pts, single = _as_points(p)
        grads = np.atleast_2d(self.gradient(pts))
        norms = np.linalg.norm(grads, axis=-1)
        bad = norms < GRADIENT_TOLERANCE
        if np.any(bad):
            i = int(np.argmax(bad))
            raise DegenerateGradientError(pts[i], float(norms[i]))
        normals = grads / norms[:, None]
        return normals[0] if single else normals

    def scaled(self, factor: float) -> "LevelSet":
        return LevelSet(self.shape, self.convention, self.scale * factor)

    def project_p1(self, mesh: "Mesh2") -> "NodalField":
        return NodalField(mesh, self.eval(mesh.nodes))

    def __repr__(self):
        return f"<LevelSet {self.convention.value} {self.shape!r}>"


class NodalField:
    """
    one value per mesh node; the P1 interpolant of these values is the discrete level set
    """

    def __init__(self, mesh: "Mesh2", values: np.ndarray):
        values = np.array(values, dtype=float)
        if values.shape != (mesh.n_nodes,):
            raise ConfigError(f"nodal field has {values.size} values for {mesh.n_nodes} nodes")
        values.flags.writeable = False
        self.mesh = mesh
        self.values = values

    def __len__(self):
        return len(self.values)

    def cell_values(self) -> np.ndarray:
        return self.values[self.mesh.cells]

    def interpolate(self, cells: np.ndarray, points: np.ndarray) -> np.ndarray:
        """
        :param cells: the cell containing each point
        :param points: (n, 2) physical points
        :return: the P1 interpolant at the points
        """
        bary = self.mesh.barycentric(cells, points)
        return np.einsum("ij,ij->i", bary, self.values[self.mesh.cells[cells]])

    def __repr__(self):
        return f"<NodalField nodes={len(self.values)}>"


def project_p1(ls: LevelSet, mesh: "Mesh2") -> NodalField:
    return ls.project_p1(mesh)


def pore_level_set(pores: Sequence[Circle]) -> LevelSet:
    """
    :return: positive inside the pores, negative in the matrix
    """
    shape = Union(pores) if pores else EmptyShape()
    return LevelSet(shape, SignConvention.POSITIVE_INSIDE)


def zoom_level_set(zooms: Sequence[Circle], whole_domain: bool = False) -> LevelSet:
    """
    :param zooms: the zoom discs
    :param whole_domain: zoom everywhere, i.e. a pure micro model
    :return: negative inside the zooms, positive in the macro region
    """
    if whole_domain:
        return LevelSet(Complement(EmptyShape()), SignConvention.POSITIVE_OUTSIDE)
    shape = Union(zooms) if zooms else EmptyShape()
    return LevelSet(shape, SignConvention.POSITIVE_OUTSIDE)
