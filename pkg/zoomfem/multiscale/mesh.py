import logging
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from backports.cached_property import cached_property
from scipy.spatial import cKDTree

from zoomfem.multiscale.levelset import LevelSet
from zoomfem.multiscale.protocol import ConfigError, GeometryError

logger = logging.getLogger(__name__)

AREA_TOLERANCE: float = 1e-12
MAX_CONFORMING_PASSES: int = 32
_LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])


class BoundaryTag(Enum):
    BOTTOM = "bottom"
    RIGHT = "right"
    TOP = "top"
    LEFT = "left"


_TAG_CODES: Dict[BoundaryTag, int] = {tag: i for i, tag in enumerate(BoundaryTag)}
NO_TAG: int = -1


class Rectangle:
    def __init__(self, xmin: float, ymin: float, xmax: float, ymax: float):
        if not (xmax > xmin and ymax > ymin):
            raise ConfigError(f"empty rectangle [{xmin}, {xmax}]x[{ymin}, {ymax}]")
        self.xmin, self.ymin, self.xmax, self.ymax = float(xmin), float(ymin), float(xmax), float(ymax)

    @staticmethod
    def from_sequence(values: Sequence[float]) -> "Rectangle":
        if len(values) != 4:
            raise ConfigError(f"a rectangle is [xmin, ymin, xmax, ymax], got {values!r}")
        return Rectangle(*values)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        p = np.atleast_2d(points)
        return (
            (p[:, 0] >= self.xmin - tol)
            & (p[:, 0] <= self.xmax + tol)
            & (p[:, 1] >= self.ymin - tol)
            & (p[:, 1] <= self.ymax + tol)
        )

    def as_list(self) -> List[float]:
        return [self.xmin, self.ymin, self.xmax, self.ymax]

    def __repr__(self):
        return f"<Rectangle [{self.xmin:g}, {self.xmax:g}]x[{self.ymin:g}, {self.ymax:g}]>"


class CellSet:
    """
    sorted, unique cell indices of one mesh
    """

    def __init__(self, indices: Iterable[int], n_cells: int):
        idx = np.unique(np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= n_cells):
            raise ConfigError(f"cell indices out of range [0, {n_cells})")
        idx.flags.writeable = False
        self.indices = idx
        self.n_cells = n_cells

    @staticmethod
    def from_mask(mask: np.ndarray) -> "CellSet":
        return CellSet(np.flatnonzero(mask), len(mask))

    def mask(self) -> np.ndarray:
        m = np.zeros(self.n_cells, dtype=bool)
        m[self.indices] = True
        return m

    def __len__(self):
        return int(self.indices.size)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices.tolist())

    def __contains__(self, item) -> bool:
        i = np.searchsorted(self.indices, item)
        return bool(i < self.indices.size and self.indices[i] == item)

    def __eq__(self, other):
        return isinstance(other, CellSet) and np.array_equal(self.indices, other.indices)

    def __repr__(self):
        return f"<CellSet {len(self)}/{self.n_cells}>"


class Mesh2:
    def __init__(
        self,
        nodes: np.ndarray,
        cells: np.ndarray,
        domain: Rectangle,
        midpoints: Optional[Dict[Tuple[int, int], int]] = None,
        green_family: Optional[np.ndarray] = None,
        green_parents: Optional[np.ndarray] = None,
    ):
        """
        :param nodes: (n, 2) coordinates
        :param cells: (m, 3) counter-clockwise node triples
        :param domain: the background rectangle; boundary facets are tagged by the side they lie on
        :param midpoints: edge midpoints created by refinement, keyed by the sorted node pair
        :param green_family: per cell, the index of its green closure family or -1
        :param green_parents: per family, the node triple the green pair replaced
        """
        self.nodes = np.array(nodes, dtype=float)
        self.cells = np.array(cells, dtype=np.int64)
        self.domain = domain
        self.midpoints: Dict[Tuple[int, int], int] = dict(midpoints or {})
        if green_family is None:
            green_family = np.full(len(self.cells), -1, dtype=np.int64)
        if green_parents is None:
            green_parents = np.zeros((0, 3), dtype=np.int64)
        self.green_family = np.array(green_family, dtype=np.int64)
        self.green_parents = np.array(green_parents, dtype=np.int64).reshape(-1, 3)
        for a in (self.nodes, self.cells, self.green_family, self.green_parents):
            a.flags.writeable = False

    def __repr__(self):
        return f"<Mesh2 nodes={self.n_nodes} cells={self.n_cells} h=[{self.h_min:.4g}, {self.h_max:.4g}]>"

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def cell_coords(self) -> np.ndarray:
        return self.nodes[self.cells]

    @cached_property
    def areas(self) -> np.ndarray:
        c = self.cell_coords
        e1 = c[:, 1] - c[:, 0]
        e2 = c[:, 2] - c[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.cell_coords.mean(axis=1)

    @cached_property
    def h_cells(self) -> np.ndarray:
        # the leg length of the structured right triangles
        return np.sqrt(2.0 * self.areas)

    @property
    def h_min(self) -> float:
        return float(self.h_cells.min())

    @property
    def h_max(self) -> float:
        return float(self.h_cells.max())

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """
        :return: (m, 3, 2) constant gradients of the three P1 hat functions on each cell
        """
        c = self.cell_coords
        x, y = c[..., 0], c[..., 1]
        two_a = 2.0 * self.areas
        g = np.empty((self.n_cells, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            g[:, i, 0] = (y[:, j] - y[:, k]) / two_a
            g[:, i, 1] = (x[:, k] - x[:, j]) / two_a
        return g

    @cached_property
    def _facet_data(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        edges = np.sort(self.cells[:, _LOCAL_EDGES], axis=-1).reshape(-1, 2)
        facets, inverse = np.unique(edges, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        owner = np.repeat(np.arange(self.n_cells), 3)
        order = np.argsort(inverse, kind="stable")
        sorted_inv, sorted_owner = inverse[order], owner[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = sorted_inv[1:] != sorted_inv[:-1]
        counts = np.bincount(inverse, minlength=len(facets))
        if np.any(counts > 2):
            raise GeometryError(f"{int(np.sum(counts > 2))} facets shared by more than two cells")
        facet_cells = np.full((len(facets), 2), -1, dtype=np.int64)
        facet_cells[sorted_inv[first], 0] = sorted_owner[first]
        facet_cells[sorted_inv[~first], 1] = sorted_owner[~first]
        return facets, facet_cells, inverse.reshape(self.n_cells, 3)

    @property
    def facets(self) -> np.ndarray:
        return self._facet_data[0]

    @property
    def facet_cells(self) -> np.ndarray:
        """
        :return: (f, 2) incident cells per facet, the second is -1 on the boundary
        """
        return self._facet_data[1]

    @property
    def cell_facets(self) -> np.ndarray:
        return self._facet_data[2]

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @cached_property
    def interior_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_cells[:, 1] >= 0)

    @cached_property
    def boundary_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_cells[:, 1] < 0)

    @cached_property
    def facet_lengths(self) -> np.ndarray:
        p = self.nodes[self.facets]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=-1)

    @cached_property
    def facet_normals(self) -> np.ndarray:
        """
        :return: unit normals pointing out of the first incident cell
        """
        p = self.nodes[self.facets]
        t = p[:, 1] - p[:, 0]
        n = np.stack([t[:, 1], -t[:, 0]], axis=-1) / self.facet_lengths[:, None]
        mid = p.mean(axis=1)
        outward = np.einsum("ij,ij->i", n, mid - self.centroids[self.facet_cells[:, 0]])
        return np.where(outward[:, None] < 0, -n, n)

    @cached_property
    def facet_tags(self) -> np.ndarray:
        d = self.domain
        tol = AREA_TOLERANCE * max(d.width, d.height)
        tags = np.full(self.n_facets, NO_TAG, dtype=np.int64)
        p = self.nodes[self.facets[self.boundary_facets]]
        x, y = p[..., 0], p[..., 1]
        sides = {
            BoundaryTag.BOTTOM: np.all(np.abs(y - d.ymin) <= tol, axis=1),
            BoundaryTag.RIGHT: np.all(np.abs(x - d.xmax) <= tol, axis=1),
            BoundaryTag.TOP: np.all(np.abs(y - d.ymax) <= tol, axis=1),
            BoundaryTag.LEFT: np.all(np.abs(x - d.xmin) <= tol, axis=1),
        }
        for tag, on_side in sides.items():
            tags[self.boundary_facets[on_side]] = _TAG_CODES[tag]
        return tags

    def tagged_facets(self, tag: Union[BoundaryTag, str]) -> np.ndarray:
        return np.flatnonzero(self.facet_tags == _TAG_CODES[BoundaryTag(tag)])

    def tagged_nodes(self, tag: Union[BoundaryTag, str]) -> np.ndarray:
        return np.unique(self.facets[self.tagged_facets(tag)])

    def barycentric(self, cells: np.ndarray, points: np.ndarray) -> np.ndarray:
        c = self.cell_coords[cells]
        a = c[:, 0]
        e1 = c[:, 1] - a
        e2 = c[:, 2] - a
        r = np.asarray(points, dtype=float) - a
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        l1 = (e2[:, 1] * r[:, 0] - e2[:, 0] * r[:, 1]) / det
        l2 = (e1[:, 0] * r[:, 1] - e1[:, 1] * r[:, 0]) / det
        return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    def locate(self, points: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """
        :param points: (n, 2) points
        :return: the index of a cell containing each point, -1 for points outside the mesh
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = min(12, self.n_cells)
        _, candidates = self._centroid_tree.query(points, k=k)
        candidates = np.asarray(candidates).reshape(len(points), k)
        found = np.full(len(points), -1, dtype=np.int64)
        for j in range(k):
            todo = found < 0
            if not np.any(todo):
                break
            cand = candidates[todo, j]
            bary = self.barycentric(cand, points[todo])
            inside = np.all(bary >= -tol, axis=1)
            found[np.flatnonzero(todo)[inside]] = cand[inside]
        for i in np.flatnonzero(found < 0):
            bary = self.barycentric(np.arange(self.n_cells), np.broadcast_to(points[i], (self.n_cells, 2)))
            hits = np.flatnonzero(np.all(bary >= -tol, axis=1))
            if hits.size:
                found[i] = hits[0]
        return found

    def validate(self) -> None:
        """
        :raises GeometryError: on inverted cells, non-manifold facets, hanging nodes or lost area
        """
        if np.any(self.areas <= 0):
            raise GeometryError(f"{int(np.sum(self.areas <= 0))} cells with non-positive area")
        _ = self.facet_cells
        untagged = self.boundary_facets[self.facet_tags[self.boundary_facets] == NO_TAG]
        if untagged.size:
            raise GeometryError(f"{untagged.size} single-cell facets off the domain boundary (hanging nodes)")
        total = float(self.areas.sum())
        if abs(total - self.domain.area) > AREA_TOLERANCE * self.domain.area:
            raise GeometryError(f"cell areas sum to {total!r}, domain area is {self.domain.area!r}")


def generate_rect(domain: Rectangle, nx: int, ny: int) -> Mesh2:
    """
    a structured grid of nx by ny quads, each split along its rising diagonal
    """
    if nx < 1 or ny < 1:
        raise ConfigError(f"mesh counts must be at least 1, got nx={nx} ny={ny}")
    xs = np.linspace(domain.xmin, domain.xmax, nx + 1)
    ys = np.linspace(domain.ymin, domain.ymax, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.stack([X.ravel(), Y.ravel()], axis=-1)

    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    n0 = (j * (nx + 1) + i).ravel()
    n1 = n0 + 1
    n2 = n1 + nx + 1
    n3 = n0 + nx + 1
    lower = np.stack([n0, n1, n2], axis=-1)
    upper = np.stack([n0, n2, n3], axis=-1)
    cells = np.stack([lower, upper], axis=1).reshape(-1, 3)

    mesh = Mesh2(nodes, cells, domain)
    mesh.validate()
    logger.debug("generated %dx%d grid: %d nodes, %d cells", nx, ny, mesh.n_nodes, mesh.n_cells)
    return mesh


def _edge_key(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _cell_edges(tri: Tuple[int, int, int]) -> List[Tuple[int, int]]:
    a, b, c = tri
    return [_edge_key(a, b), _edge_key(b, c), _edge_key(c, a)]


class _RefinementPass:
    """ one red-green pass; green pairs touched by the refinement are merged back and refined red """

    def __init__(self, mesh: Mesh2):
        self.domain = mesh.domain
        self.nodes: List[List[float]] = mesh.nodes.tolist()
        self.midpoints = dict(mesh.midpoints)
        self.work: Dict[int, Tuple[int, int, int]] = {i: tuple(c) for i, c in enumerate(mesh.cells.tolist())}
        self.family_of: Dict[int, int] = {i: int(f) for i, f in enumerate(mesh.green_family) if f >= 0}
        self.families: Dict[int, Tuple[Tuple[int, int, int], List[int]]] = {}
        for cid, fid in self.family_of.items():
            parent = tuple(mesh.green_parents[fid].tolist())
            self.families.setdefault(fid, (parent, []))[1].append(cid)
        self.next_id = mesh.n_cells
        self.split: set = set()

    def _midpoint(self, a: int, b: int) -> int:
        key = _edge_key(a, b)
        node = self.midpoints.get(key)
        if node is None:
            pa, pb = self.nodes[a], self.nodes[b]
            self.nodes.append([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])])
            node = len(self.nodes) - 1
            self.midpoints[key] = node
        return node

    def _restore(self, fid: int, red: set, wanted: set) -> None:
        parent, children = self.families.pop(fid)
        pid = self.next_id
        self.next_id += 1
        self.work[pid] = parent
        was_wanted = False
        for c in children:
            del self.work[c]
            del self.family_of[c]
            red.discard(c)
            if c in wanted:
                wanted.discard(c)
                was_wanted = True
        red.add(pid)
        if was_wanted:
            wanted.add(pid)

    def hanging_edges(self) -> set:
        """
        :return: edges of work cells whose midpoint is already a vertex of another work cell
        """
        used = {n for tri in self.work.values() for n in tri}
        return {e for tri in self.work.values() for e in _cell_edges(tri) if self.midpoints.get(e) in used}

    def close(self, targets: Iterable[int], wanted: Optional[Iterable[int]] = None) -> Tuple[set, set]:
        """
        :param targets: cells to refine red
        :param wanted: cells whose descendants are refined by the next pass; defaults to the targets
        """
        red = set(int(t) for t in targets)
        wanted = set(red) if wanted is None else set(int(w) for w in wanted) | red
        while True:
            for cid in sorted(red):
                fid = self.family_of.get(cid)
                if fid is not None and fid in self.families:
                    self._restore(fid, red, wanted)
            split = {e for cid in red for e in _cell_edges(self.work[cid])} | self.hanging_edges()
            grow = []
            for cid in sorted(self.work):
                if cid in red:
                    continue
                n = sum(e in split for e in _cell_edges(self.work[cid]))
                if n >= 2 or (n == 1 and cid in self.family_of):
                    grow.append(cid)
            if not grow:
                self.split = split
                return red, wanted
            red.update(grow)

    def build(self, red: set, wanted: set) -> Tuple[Mesh2, List[int]]:
        split = self.split
        cells: List[Tuple[int, int, int]] = []
        green_family: List[int] = []
        green_parents: List[Tuple[int, int, int]] = []
        family_remap: Dict[int, int] = {}
        targets: List[int] = []

        for cid in sorted(self.work):
            a, b, c = tri = self.work[cid]
            if cid in red:
                mab, mbc, mca = self._midpoint(a, b), self._midpoint(b, c), self._midpoint(c, a)
                first = len(cells)
                cells += [(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)]
                green_family += [-1] * 4
                if cid in wanted:
                    targets += range(first, first + 4)
                continue
            edges = _cell_edges(tri)
            hit = [k for k, e in enumerate(edges) if e in split]
            if hit:
                k = hit[0]
                t0, t1, t2 = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
                m = self._midpoint(t0, t1)
                green_parents.append(tri)
                fid = len(green_parents) - 1
                if cid in wanted:
                    targets += [len(cells), len(cells) + 1]
                cells += [(t0, m, t2), (m, t1, t2)]
                green_family += [fid, fid]
                continue
            if cid in wanted:
                targets.append(len(cells))
            old = self.family_of.get(cid)
            if old is None:
                green_family.append(-1)
            else:
                if old not in family_remap:
                    green_parents.append(self.families[old][0])
                    family_remap[old] = len(green_parents) - 1
                green_family.append(family_remap[old])
            cells.append(tri)

        mesh = Mesh2(
            np.array(self.nodes),
            np.array(cells, dtype=np.int64),
            self.domain,
            midpoints=self.midpoints,
            green_family=np.array(green_family, dtype=np.int64),
            green_parents=np.array(green_parents, dtype=np.int64).reshape(-1, 3),
        )
        return mesh, targets


def refine(mesh: Mesh2, marked: Union[CellSet, Iterable[int]], levels: int = 1) -> Mesh2:
    """
    red refinement of the marked cells with green closure of their neighbours
    :param mesh: the input mesh, left untouched
    :param marked: the cells to refine
    :param levels: passes; each pass refines the red children of the previously refined cells again
    :return: a new conforming mesh
    """
    if levels < 0:
        raise ConfigError(f"refinement levels must be non-negative, got {levels}")
    if not isinstance(marked, CellSet):
        marked = CellSet(marked, mesh.n_cells)
    if levels == 0 or len(marked) == 0:
        return mesh

    current, targets = mesh, marked.indices.tolist()
    for level in range(levels):
        step = _RefinementPass(current)
        red, wanted = step.close(targets)
        current, targets = step.build(red, wanted)
        current, targets = _conform(current, targets)
        logger.debug(
            "refinement pass %d: %d red, %d cells, h_min=%.4g", level + 1, len(red), current.n_cells, current.h_min
        )
    current.validate()
    return current


def _conform(mesh: Mesh2, targets: List[int]) -> Tuple[Mesh2, List[int]]:
    # red children of a merged green parent can face a neighbour that is already finer
    for _ in range(MAX_CONFORMING_PASSES):
        step = _RefinementPass(mesh)
        if not step.hanging_edges():
            return mesh, targets
        red, wanted = step.close([], targets)
        mesh, targets = step.build(red, wanted)
        logger.debug("conforming pass: %d red, %d cells", len(red), mesh.n_cells)
    raise GeometryError(f"refinement still has hanging nodes after {MAX_CONFORMING_PASSES} conforming passes")


def mark_near(mesh: Mesh2, ls: LevelSet, band: float) -> CellSet:
    """
    :return: cells with a node inside the zoom or within band of its boundary
    """
    if band < 0:
        raise ConfigError(f"band must be non-negative, got {band!r}")
    values = ls.eval(mesh.nodes)
    near = values[mesh.cells].min(axis=1) <= band
    return CellSet.from_mask(near)
