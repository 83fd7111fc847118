import logging
from enum import IntEnum
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from zoomfem.multiscale.levelset import LevelSet, NodalField
from zoomfem.multiscale.mesh import CellSet, Mesh2
from zoomfem.multiscale.protocol import ConfigError, DegenerateCutError

logger = logging.getLogger(__name__)

SNAP_TOLERANCE: float = 1e-12


class Side(IntEnum):
    NEGATIVE = -1
    CUT = 0
    POSITIVE = 1


def _snap(values: np.ndarray, tol) -> np.ndarray:
    # zeros go to the positive side
    return np.where(np.abs(values) < tol, tol, values)


def classify(values, tol: float = SNAP_TOLERANCE) -> Side:
    """
    :param values: the three nodal level set values of a cell
    :param tol: values closer to zero than this are treated as +tol
    """
    v = _snap(np.asarray(values, dtype=float), tol)
    if np.all(v < 0):
        return Side.NEGATIVE
    if np.all(v > 0):
        return Side.POSITIVE
    return Side.CUT


def classify_cells(cell_values: np.ndarray, tol) -> np.ndarray:
    v = _snap(cell_values, np.asarray(tol, dtype=float)[..., None] if np.ndim(tol) else tol)
    neg = np.all(v < 0, axis=1)
    pos = np.all(v > 0, axis=1)
    return np.where(neg, int(Side.NEGATIVE), np.where(pos, int(Side.POSITIVE), int(Side.CUT)))


def _signed_area(tri: np.ndarray) -> float:
    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    return 0.5 * float(e1[0] * e2[1] - e1[1] * e2[0])


class CutCell:
    """
    the subtessellation of one cut cell
    """

    def __init__(self, triangles: np.ndarray, signs: np.ndarray, segment: np.ndarray):
        self.triangles = triangles
        self.signs = signs
        self.segment = segment

    def areas(self) -> np.ndarray:
        return np.array([_signed_area(t) for t in self.triangles])

    def area(self, side: Side) -> float:
        return float(self.areas()[self.signs == int(side)].sum())

    @property
    def interface_length(self) -> float:
        return float(np.linalg.norm(self.segment[1] - self.segment[0]))

    def __repr__(self):
        return f"<CutCell {len(self.triangles)} sub-triangles>"


def subtessellate(coords, values, tol: float = SNAP_TOLERANCE) -> CutCell:
    """
    split a cut cell along the zero line of the linear interpolant
    :param coords: (3, 2) counter-clockwise vertices
    :param values: the nodal level set values
    :return: one sub-triangle on the lone node's side, two on the other
    """
    x = np.asarray(coords, dtype=float)
    v = _snap(np.asarray(values, dtype=float), tol)
    positive = v > 0
    if positive.all() or (~positive).all():
        raise DegenerateCutError(f"cell with values {tuple(values)} is not cut")
    lone = int(np.flatnonzero(positive if positive.sum() == 1 else ~positive)[0])
    i, j, k = lone, (lone + 1) % 3, (lone + 2) % 3

    def crossing(a: int, b: int) -> np.ndarray:
        t = v[a] / (v[a] - v[b])
        if not 0.0 < t < 1.0:
            raise DegenerateCutError(f"interface endpoint at edge parameter {t!r}")
        return x[a] + t * (x[b] - x[a])

    pij, pik = crossing(i, j), crossing(i, k)
    lone_sign = 1 if v[i] > 0 else -1
    triangles = np.array([[x[i], pij, pik], [pij, x[j], x[k]], [pij, x[k], pik]])
    signs = np.array([lone_sign, -lone_sign, -lone_sign])
    for t in triangles:
        if not _signed_area(t) > 0:
            raise DegenerateCutError(f"zero-area sub-triangle in cell {x.tolist()}")
    return CutCell(triangles, signs, np.array([pij, pik]))


class CutDecomposition:
    def __init__(self, mesh: Mesh2, field: NodalField, sides: np.ndarray, cut: Dict[int, CutCell]):
        self.mesh = mesh
        self.field = field
        self.sides = sides
        self.cut = cut

    @property
    def cut_cells(self) -> CellSet:
        return CellSet.from_mask(self.sides == int(Side.CUT))

    def cells_on(self, side: Side) -> np.ndarray:
        return np.flatnonzero(self.sides == int(side))

    def __repr__(self):
        counts = {s.name.lower(): int(np.sum(self.sides == int(s))) for s in Side}
        return f"<CutDecomposition {counts}>"


def decompose(mesh: Mesh2, field: NodalField, tol_scale: float = SNAP_TOLERANCE) -> CutDecomposition:
    tol = tol_scale * mesh.h_cells
    sides = classify_cells(field.cell_values(), tol)
    cut = {}
    for c in np.flatnonzero(sides == int(Side.CUT)).tolist():
        cut[c] = subtessellate(mesh.cell_coords[c], field.cell_values()[c], tol[c])
    logger.debug("decomposed %d cells, %d cut", mesh.n_cells, len(cut))
    return CutDecomposition(mesh, field, sides, cut)


def _permutations(a: float, b: float, c: float) -> np.ndarray:
    rows = {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}
    return np.array(sorted(rows))


def _symmetric_orbit(a: float) -> np.ndarray:
    return _permutations(a, a, 1.0 - 2.0 * a)


def _reference_rules() -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
    # barycentric points, weights relative to the triangle area
    centroid = (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]))
    three = (_symmetric_orbit(1 / 6), np.full(3, 1 / 3))
    six = (
        np.vstack([_symmetric_orbit(0.445948490915965), _symmetric_orbit(0.091576213509771)]),
        np.concatenate([np.full(3, 0.223381589678011), np.full(3, 0.109951743655322)]),
    )
    seven = (
        np.vstack([centroid[0], _symmetric_orbit(0.470142064105115), _symmetric_orbit(0.101286507323456)]),
        np.concatenate([[0.225], np.full(3, 0.132394152788506), np.full(3, 0.125939180544827)]),
    )
    twelve = (
        np.vstack(
            [
                _symmetric_orbit(0.249286745170910),
                _symmetric_orbit(0.063089014491502),
                _permutations(0.053145049844817, 0.310352451033784, 0.636502499121399),
            ]
        ),
        np.concatenate([np.full(3, 0.116786275726379), np.full(3, 0.050844906370207), np.full(6, 0.082851075618374)]),
    )
    return {1: centroid, 2: three, 3: six, 4: six, 5: seven, 6: twelve}


REFERENCE_RULES = _reference_rules()


def reference_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    try:
        return REFERENCE_RULES[degree]
    except KeyError:
        raise ConfigError(f"quadrature degree must be in 1..6, got {degree!r}") from None


class QuadratureRule:
    def __init__(self, points: np.ndarray, weights: np.ndarray, cells: np.ndarray, degree: int):
        """
        :param points: (q, 2) physical points
        :param weights: (q,) weights in area units
        :param cells: the background cell owning each point
        :param degree: polynomial exactness per triangle
        """
        self.points = points
        self.weights = weights
        self.cells = cells
        self.degree = degree

    @staticmethod
    def empty(degree: int) -> "QuadratureRule":
        return QuadratureRule(np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=np.int64), degree)

    @staticmethod
    def on_triangles(triangles: np.ndarray, owners: np.ndarray, degree: int) -> "QuadratureRule":
        bary, w = reference_rule(degree)
        if len(triangles) == 0:
            return QuadratureRule.empty(degree)
        points = np.einsum("qk,tkd->tqd", bary, triangles).reshape(-1, 2)
        e1 = triangles[:, 1] - triangles[:, 0]
        e2 = triangles[:, 2] - triangles[:, 0]
        areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        weights = (areas[:, None] * w[None, :]).reshape(-1)
        cells = np.repeat(np.asarray(owners, dtype=np.int64), len(w))
        return QuadratureRule(points, weights, cells, degree)

    def concat(self, other: "QuadratureRule") -> "QuadratureRule":
        return QuadratureRule(
            np.vstack([self.points, other.points]),
            np.concatenate([self.weights, other.weights]),
            np.concatenate([self.cells, other.cells]),
            min(self.degree, other.degree),
        )

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f"<QuadratureRule points={len(self)} degree={self.degree} measure={self.measure:.6g}>"


def region_quadrature(
    decomp: CutDecomposition, side: Side, degree: int, cells: Optional[Iterable[int]] = None
) -> QuadratureRule:
    """
    :param decomp: the cut decomposition
    :param side: which sign region to integrate over
    :param degree: exactness degree per (sub-)triangle
    :param cells: restrict to these cells, all cells if omitted
    """
    if side is Side.CUT:
        raise ConfigError("integrate over the negative or the positive side")
    reference_rule(degree)
    mesh = decomp.mesh
    if cells is None:
        selected = np.arange(mesh.n_cells)
    else:
        selected = np.asarray(list(cells) if not isinstance(cells, np.ndarray) else cells, dtype=np.int64)
    sides = decomp.sides[selected]
    whole = selected[sides == int(side)]
    rule = QuadratureRule.on_triangles(mesh.cell_coords[whole], whole, degree)

    pieces, owners = [], []
    for c in selected[sides == int(Side.CUT)].tolist():
        entry = decomp.cut[c]
        keep = entry.signs == int(side)
        pieces.append(entry.triangles[keep])
        owners += [c] * int(keep.sum())
    if pieces:
        rule = rule.concat(QuadratureRule.on_triangles(np.concatenate(pieces), np.array(owners), degree))
    return rule


def measures(decomp: CutDecomposition) -> Tuple[float, float, float]:
    """
    :return: negative area, positive area, interface length
    """
    areas = decomp.mesh.areas
    negative = float(areas[decomp.sides == int(Side.NEGATIVE)].sum())
    positive = float(areas[decomp.sides == int(Side.POSITIVE)].sum())
    length = 0.0
    for entry in decomp.cut.values():
        negative += entry.area(Side.NEGATIVE)
        positive += entry.area(Side.POSITIVE)
        length += entry.interface_length
    return negative, positive, length


def _lattice(order: int) -> np.ndarray:
    return np.array(
        [(i / order, j / order, (order - i - j) / order) for i in range(order + 1) for j in range(order + 1 - i)]
    )


def multi_cut_cells(mesh: Mesh2, ls: LevelSet, field: NodalField, order: int = 6) -> CellSet:
    """
    cells where the exact geometry has sign structure the P1 field misses: an uncut cell whose samples
    change sign, or a cut cell with an edge crossed more than once
    :param order: barycentric lattice order; multiples of 3 include the centroid
    """
    bary = _lattice(order)
    points = np.einsum("qk,mkd->mqd", bary, mesh.cell_coords)
    exact = ls.eval(points.reshape(-1, 2)).reshape(mesh.n_cells, len(bary))
    tol = SNAP_TOLERANCE * mesh.h_cells
    sides = classify_cells(field.cell_values(), tol)
    exact_sign = np.where(_snap(exact, tol[:, None]) > 0, 1, -1)

    flagged = np.zeros(mesh.n_cells, dtype=bool)
    uncut = sides != int(Side.CUT)
    flagged[uncut] = np.any(exact_sign[uncut] != sides[uncut, None], axis=1)

    t = np.linspace(0.0, 1.0, order + 1)
    c = mesh.cell_coords
    for a, b in ((0, 1), (1, 2), (2, 0)):
        edge = c[:, a, None, :] + t[None, :, None] * (c[:, b] - c[:, a])[:, None, :]
        s = np.sign(ls.eval(edge.reshape(-1, 2)).reshape(mesh.n_cells, -1))
        changes = np.sum(s[:, 1:] * s[:, :-1] < 0, axis=1)
        flagged |= changes > 1
    if flagged.any():
        logger.warning("%d cells carry geometry the P1 level set cannot represent", int(flagged.sum()))
    return CellSet.from_mask(flagged)
