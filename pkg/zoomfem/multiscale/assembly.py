import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from backports.cached_property import cached_property
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

from zoomfem.multiscale.cutgeom import CutDecomposition, QuadratureRule, Side, decompose, region_quadrature
from zoomfem.multiscale.levelset import LevelSet, NodalField
from zoomfem.multiscale.mesh import BoundaryTag, Mesh2
from zoomfem.multiscale.mixing import MixingWeight
from zoomfem.multiscale.protocol import BoundaryFacetError, ConfigError, SingularSystemError
from zoomfem.multiscale.solve import SparseSymSystem

logger = logging.getLogger(__name__)

CHUNK_SIZE: int = 4096
DEFAULT_BETA: float = 0.005

T = TypeVar("T")


class PlaneModel(Enum):
    STRAIN = "strain"
    STRESS = "stress"


class Material:
    def __init__(self, young: float, poisson: float, plane: PlaneModel = PlaneModel.STRAIN):
        if not young > 0:
            raise ConfigError(f"Young's modulus must be positive, got {young!r}")
        if not -1.0 < poisson < 0.5:
            raise ConfigError(f"Poisson ratio must lie in (-1, 0.5), got {poisson!r}")
        self.young = float(young)
        self.poisson = float(poisson)
        self.plane = PlaneModel(plane)

    @property
    def lame_lambda(self) -> float:
        e, nu = self.young, self.poisson
        return e * nu / ((1 + nu) * (1 - 2 * nu))

    @property
    def lame_mu(self) -> float:
        return self.young / (2 * (1 + self.poisson))

    def with_young(self, young: float) -> "Material":
        return Material(young, self.poisson, self.plane)

    def hooke_voigt(self) -> np.ndarray:
        """
        :return: the 3x3 constitutive matrix acting on (e_xx, e_yy, 2 e_xy)
        """
        if self.plane is PlaneModel.STRESS:
            e, nu = self.young, self.poisson
            c = e / (1 - nu ** 2)
            return c * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1 - nu)]])
        lam, mu = self.lame_lambda, self.lame_mu
        return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])

    def __repr__(self):
        return f"<Material E={self.young:g} nu={self.poisson:g} plane {self.plane.value}>"


def hooke_voigt(m: Material) -> np.ndarray:
    return m.hooke_voigt()


class RegularizationMode(Enum):
    CUT_ONLY = "cut_only"
    CUT_PLUS_TRANSITION_PORES = "cut_plus_transition_pores"
    ALL_PORE_ELEMENTS = "all_pore_elements"


class DirichletCondition:
    def __init__(self, tag: Union[BoundaryTag, str], values: Sequence[Optional[float]]):
        """
        :param tag: the boundary side
        :param values: prescribed (u_x, u_y); None leaves a component free
        """
        self.tag = BoundaryTag(tag)
        if len(values) != 2:
            raise ConfigError(f"displacement needs two components, got {values!r}")
        self.values = [None if v is None else float(v) for v in values]

    def __repr__(self):
        return f"<DirichletCondition {self.tag.value} {self.values}>"


class TractionCondition:
    def __init__(self, tag: Union[BoundaryTag, str], traction: Sequence[float]):
        self.tag = BoundaryTag(tag)
        self.traction = np.asarray(traction, dtype=float)
        if self.traction.shape != (2,):
            raise ConfigError(f"traction needs two components, got {traction!r}")

    def __repr__(self):
        return f"<TractionCondition {self.tag.value} {self.traction.tolist()}>"


def boundary_conditions(
    clamped: Union[BoundaryTag, str],
    loaded: Union[BoundaryTag, str],
    displacement: Optional[Sequence[float]] = None,
    traction: Optional[Sequence[float]] = None,
) -> Tuple[List[DirichletCondition], List[TractionCondition]]:
    """
    a clamped side and a loaded side that is either displaced or pulled
    """
    if (displacement is None) == (traction is None):
        raise ConfigError("the loaded side takes exactly one of displacement or traction")
    if BoundaryTag(clamped) is BoundaryTag(loaded):
        raise ConfigError(f"clamped and loaded sides must differ, both are {BoundaryTag(clamped).value}")
    if displacement is not None:
        # the clamped side wins at shared corner nodes
        return [DirichletCondition(loaded, displacement), DirichletCondition(clamped, (0.0, 0.0))], []
    return [DirichletCondition(clamped, (0.0, 0.0))], [TractionCondition(loaded, traction)]


class MultiscaleConfig:
    def __init__(
        self,
        micro: Material,
        macro: Material,
        mixing: MixingWeight,
        dirichlet: Sequence[DirichletCondition],
        tractions: Sequence[TractionCondition] = (),
        beta: float = DEFAULT_BETA,
        mode: RegularizationMode = RegularizationMode.CUT_ONLY,
        body_macro: Sequence[float] = (0.0, 0.0),
        body_micro: Sequence[float] = (0.0, 0.0),
        transition_degree: int = 4,
        cut_degree: int = 2,
    ):
        """
        :param micro: the pore-resolving matrix material
        :param macro: the homogenized material
        :param mixing: the transition weight
        :param dirichlet: displacement conditions, applied in order
        :param tractions: traction conditions
        :param beta: the ghost penalty parameter
        :param mode: which facets carry the ghost penalty
        :param body_macro: constant body force of the macro model
        :param body_micro: constant body force of the micro model
        :param transition_degree: quadrature degree where the weight varies inside a cell
        :param cut_degree: quadrature degree on cut sub-triangles outside the transition
        """
        self.micro = micro
        self.macro = macro
        self.mixing = mixing
        self.dirichlet = list(dirichlet)
        self.tractions = list(tractions)
        self.beta = float(beta)
        self.mode = RegularizationMode(mode)
        self.body_macro = np.asarray(body_macro, dtype=float)
        self.body_micro = np.asarray(body_micro, dtype=float)
        self.transition_degree = int(transition_degree)
        self.cut_degree = int(cut_degree)
        self.validate()

    def validate(self) -> None:
        if self.beta < 0:
            raise ConfigError(f"ghost penalty parameter must be non-negative, got {self.beta!r}")
        if not self.dirichlet:
            raise ConfigError("at least one displacement condition is required")
        fixed = {c.tag for c in self.dirichlet}
        pulled = {c.tag for c in self.tractions}
        if fixed & pulled:
            raise ConfigError(f"sides both displaced and pulled: {sorted(t.value for t in fixed & pulled)}")
        for degree in (self.transition_degree, self.cut_degree):
            if not 1 <= degree <= 6:
                raise ConfigError(f"quadrature degree must be in 1..6, got {degree}")
        if self.body_macro.shape != (2,) or self.body_micro.shape != (2,):
            raise ConfigError("body forces need two components")

    @property
    def eps(self) -> float:
        return self.mixing.half_width

    def __repr__(self):
        return f"<MultiscaleConfig {self.mixing!r} beta={self.beta:g} mode={self.mode.value}>"


def strain_operators(mesh: Mesh2) -> np.ndarray:
    """
    :return: (m, 3, 6) constant P1 strain-displacement matrices, dofs ordered (u_x, u_y) per node
    """
    g = mesh.basis_gradients
    b = np.zeros((mesh.n_cells, 3, 6))
    b[:, 0, 0::2] = g[:, :, 0]
    b[:, 1, 1::2] = g[:, :, 1]
    b[:, 2, 0::2] = g[:, :, 1]
    b[:, 2, 1::2] = g[:, :, 0]
    return b


def cell_dofs(cells: np.ndarray) -> np.ndarray:
    return np.stack([2 * cells, 2 * cells + 1], axis=-1).reshape(len(cells), -1)


def _strain_operator(coords: np.ndarray) -> np.ndarray:
    x, y = coords[:, 0], coords[:, 1]
    two_a = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0])
    b = np.zeros((3, 6))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        gx, gy = (y[j] - y[k]) / two_a, (x[k] - x[j]) / two_a
        b[0, 2 * i] = gx
        b[1, 2 * i + 1] = gy
        b[2, 2 * i] = gy
        b[2, 2 * i + 1] = gx
    return b


def element_stiffness(coords, d: np.ndarray, weights: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """
    :param coords: (3, 2) counter-clockwise vertices
    :param d: the constitutive matrix
    :param weights: quadrature weights of points inside the cell
    :param samples: the mixing weight at those points
    :return: the symmetric 6x6 block sum_q w_q s_q B^T D B
    """
    b = _strain_operator(np.asarray(coords, dtype=float))
    scale = float(np.dot(np.asarray(weights, dtype=float), np.asarray(samples, dtype=float)))
    k = scale * (b.T @ d @ b)
    return 0.5 * (k + k.T)


def _traction_operator(normals: np.ndarray) -> np.ndarray:
    n = np.zeros((len(normals), 2, 3))
    n[:, 0, 0] = normals[:, 0]
    n[:, 0, 2] = normals[:, 1]
    n[:, 1, 1] = normals[:, 1]
    n[:, 1, 2] = normals[:, 0]
    return n


def _ghost_blocks(
    mesh: Mesh2, facets: np.ndarray, d: np.ndarray, beta: float, e_m: float, b: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    :return: (f, 8) dofs and (f, 8, 8) blocks of the normal stress jump penalty
    """
    fn = mesh.facets[facets]
    pair = mesh.facet_cells[facets]
    if np.any(pair[:, 1] < 0):
        raise BoundaryFacetError(int(facets[np.argmax(pair[:, 1] < 0)]))
    if b is None:
        b = strain_operators(mesh)
    # facet nodes first, then the node opposite the facet in each cell
    union = np.empty((len(facets), 4), dtype=np.int64)
    union[:, :2] = fn
    for side in (0, 1):
        nodes = mesh.cells[pair[:, side]]
        opposite = (nodes != fn[:, :1]) & (nodes != fn[:, 1:])
        union[:, 2 + side] = nodes[opposite]
    jump = np.zeros((len(facets), 3, 8))
    rows = np.arange(len(facets))
    for side, sign in ((0, 1.0), (1, -1.0)):
        nodes = mesh.cells[pair[:, side]]
        position = np.argmax(nodes[:, :, None] == union[:, None, :], axis=2)
        bk = b[pair[:, side]]
        for a in range(3):
            for comp in range(2):
                jump[rows, :, 2 * position[:, a] + comp] += sign * bk[:, :, 2 * a + comp]
    j = np.einsum("fij,jk,fkl->fil", _traction_operator(mesh.facet_normals[facets]), d, jump)
    length = mesh.facet_lengths[facets]
    coef = beta * length * length / e_m
    blocks = coef[:, None, None] * np.einsum("fki,fkj->fij", j, j)
    return cell_dofs(union), 0.5 * (blocks + np.transpose(blocks, (0, 2, 1)))


def ghost_penalty_facet(mesh: Mesh2, facet: int, d_m: np.ndarray, beta: float, e_m: float):
    """
    (beta h_F / E_m) |F| [sigma(u) n_F] . [sigma(v) n_F] on one interior facet, h_F = |F|
    :return: the 8 dofs of the two cells' four nodes and the 8x8 block
    """
    dofs, blocks = _ghost_blocks(mesh, np.array([facet]), d_m, beta, e_m)
    return dofs[0], blocks[0]


class FacetSets:
    def __init__(self, cut: np.ndarray, extended: np.ndarray, mode: RegularizationMode, cells: np.ndarray):
        """
        :param cut: facets of cells cut by the pore interface
        :param extended: facets the mode adds on top
        :param mode: the regularization mode
        :param cells: the cells whose facets are penalized
        """
        self.cut = cut
        self.extended = extended
        self.mode = mode
        self.cells = cells

    @cached_property
    def selected(self) -> np.ndarray:
        return np.union1d(self.cut, self.extended)

    def __repr__(self):
        return f"<FacetSets {self.mode.value} cut={len(self.cut)} extended={len(self.extended)}>"


class _Supports:
    """ which cells each model reaches, from the nodal ranges of the two level sets """

    def __init__(self, mesh: Mesh2, phi2: NodalField, eps: float, decomp: CutDecomposition):
        v2 = phi2.cell_values()
        lo, hi = v2.min(axis=1), v2.max(axis=1)
        self.macro = hi > -eps
        self.micro = lo < eps
        self.transition = (lo <= eps) & (hi >= -eps)
        self.cut = decomp.sides == int(Side.CUT)
        self.porous = decomp.sides != int(Side.NEGATIVE)
        self.matrix = decomp.sides != int(Side.POSITIVE)
        self.physical = self.macro | (self.micro & self.matrix)


def _facets_touching(mesh: Mesh2, selected: np.ndarray, fictitious: np.ndarray) -> np.ndarray:
    interior = mesh.interior_facets
    pair = mesh.facet_cells[interior]
    touch = selected[pair[:, 0]] | selected[pair[:, 1]]
    inside = fictitious[pair[:, 0]] & fictitious[pair[:, 1]]
    return interior[touch & inside]


def _facet_sets(mesh: Mesh2, supports: _Supports, mode: RegularizationMode) -> FacetSets:
    cut_cells = supports.cut & supports.micro
    if mode is RegularizationMode.CUT_ONLY:
        extra_cells = np.zeros_like(cut_cells)
    elif mode is RegularizationMode.CUT_PLUS_TRANSITION_PORES:
        extra_cells = supports.transition & supports.porous & supports.micro
    else:
        extra_cells = supports.porous & supports.micro
    # pore cells join only when physical cells already carry all their nodes, so the penalty adds no dofs
    carried = np.zeros(mesh.n_nodes, dtype=bool)
    carried[mesh.cells[supports.physical]] = True
    inner = extra_cells & ~supports.matrix & carried[mesh.cells].all(axis=1)
    cut = _facets_touching(mesh, cut_cells, supports.physical)
    extended = np.setdiff1d(_facets_touching(mesh, inner, inner), cut)
    return FacetSets(cut, extended, mode, np.flatnonzero(cut_cells | inner))


def facet_sets(
    mesh: Mesh2, phi1: NodalField, phi2: NodalField, eps: float, mode: RegularizationMode
) -> FacetSets:
    decomp = decompose(mesh, phi1)
    return _facet_sets(mesh, _Supports(mesh, phi2, eps, decomp), RegularizationMode(mode))


class AssembledSystem:
    def __init__(
        self,
        mesh: Mesh2,
        config: MultiscaleConfig,
        phi1: NodalField,
        phi2: NodalField,
        matrix: csr_matrix,
        ghost: csr_matrix,
        load: np.ndarray,
        active: np.ndarray,
        dirichlet_dofs: np.ndarray,
        dirichlet_values: np.ndarray,
        macro_weight: np.ndarray,
        micro_weight: np.ndarray,
        facets: FacetSets,
        partition_defect: float,
    ):
        self.mesh = mesh
        self.config = config
        self.phi1 = phi1
        self.phi2 = phi2
        self.matrix = matrix
        self.ghost = ghost
        self.load = load
        self.active = active
        self.dirichlet_dofs = dirichlet_dofs
        self.dirichlet_values = dirichlet_values
        self.macro_weight = macro_weight
        self.micro_weight = micro_weight
        self.facets = facets
        self.partition_defect = partition_defect

    def __repr__(self):
        return f"<AssembledSystem dofs={self.n_dofs} free={len(self.free_dofs)} nnz={self.matrix.nnz}>"

    @property
    def n_dofs(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def free_dofs(self) -> np.ndarray:
        free = self.active.copy()
        free[self.dirichlet_dofs] = False
        return np.flatnonzero(free)

    @cached_property
    def inactive_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.active)

    def reduced(self) -> SparseSymSystem:
        """
        :return: the system on free dofs, prescribed values moved to the right-hand side
        :raises SingularSystemError: when no free dof is left or a part of the body is held by no prescribed value
        """
        free = self.free_dofs
        if free.size == 0:
            raise SingularSystemError("no free degrees of freedom left after boundary conditions")
        rows = self.matrix[free]
        block = rows[:, free].tocsr()
        self._check_held(block, rows[:, self.dirichlet_dofs])
        rhs = self.load[free] - rows[:, self.dirichlet_dofs] @ self.dirichlet_values
        return SparseSymSystem(block, rhs)

    @staticmethod
    def _check_held(block: csr_matrix, to_dirichlet: csr_matrix) -> None:
        block = block.copy()
        block.eliminate_zeros()
        parts, labels = connected_components(block, directed=False)
        held = np.zeros(parts, dtype=bool)
        coupled = np.asarray(abs(to_dirichlet).sum(axis=1)).ravel() > 0
        held[labels[coupled]] = True
        if not held.all():
            loose = int(np.sum(~held[labels]))
            raise SingularSystemError(
                f"{int(np.sum(~held))} of {parts} connected parts ({loose} free dofs) touch no prescribed displacement"
            )

    def expand(self, free_values: np.ndarray) -> np.ndarray:
        """
        :return: the full displacement vector, zero on deactivated dofs
        """
        u = np.zeros(self.n_dofs)
        u[self.free_dofs] = free_values
        u[self.dirichlet_dofs] = self.dirichlet_values
        return u

    def reactions(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u - self.load

    def ghost_energy(self, u: np.ndarray) -> float:
        return 0.5 * float(u @ (self.ghost @ u))


def _in_chunks(n: int, work: Callable[[np.ndarray], T], threads: int) -> List[T]:
    # chunk boundaries do not depend on the thread count, so the merge order is fixed
    chunks = [np.arange(start, min(start + CHUNK_SIZE, n)) for start in range(0, n, CHUNK_SIZE)]
    if threads <= 1 or len(chunks) <= 1:
        return [work(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, chunks))


def _moments(mesh: Mesh2, rule: QuadratureRule, weight: np.ndarray) -> np.ndarray:
    """
    :return: (m, 3) sum over points of w * weight * hat function, per cell and vertex
    """
    out = np.zeros((mesh.n_cells, 3))
    if len(rule) == 0:
        return out
    bary = mesh.barycentric(rule.cells, rule.points)
    for a in range(3):
        out[:, a] = np.bincount(rule.cells, weights=rule.weights * weight * bary[:, a], minlength=mesh.n_cells)
    return out


def _alpha_at(
    rule: QuadratureRule, phi2: NodalField, mixing: MixingWeight, varying: np.ndarray, fixed: float
) -> Tuple[np.ndarray, float]:
    """
    :return: the macro weight at each point and the worst partition of unity defect seen
    """
    alpha = np.full(len(rule), fixed)
    vary = varying[rule.cells]
    if not np.any(vary):
        return alpha, 0.0
    # phi2 can be infinite outside transition cells
    phi = phi2.interpolate(rule.cells[vary], rule.points[vary])
    alpha[vary] = mixing.alpha(phi)
    return alpha, float(np.max(np.abs(alpha[vary] + mixing.micro(phi) - 1.0)))


def _sparse(n: int, dofs: np.ndarray, blocks: np.ndarray) -> csr_matrix:
    if len(dofs) == 0:
        return csr_matrix((n, n))
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, k)).reshape(-1)
    return coo_matrix((blocks.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()


def assemble(
    mesh: Mesh2, pores: LevelSet, zooms: LevelSet, config: MultiscaleConfig, threads: int = 1
) -> AssembledSystem:
    """
    the mixed macro/micro system on one background mesh
    :param mesh: the background mesh
    :param pores: positive inside the pores
    :param zooms: negative inside the zooms
    :param config: materials, mixing, stabilization and boundary conditions
    :param threads: workers for the per-cell and per-facet blocks
    """
    phi1, phi2 = pores.project_p1(mesh), zooms.project_p1(mesh)
    decomp = decompose(mesh, phi1)
    supports = _Supports(mesh, phi2, config.eps, decomp)
    transition = supports.macro & supports.micro
    mixing = config.mixing

    only_macro = np.flatnonzero(supports.macro & ~supports.micro)
    both = np.flatnonzero(transition)
    only_micro = np.flatnonzero(supports.micro & ~supports.macro)

    degree = config.transition_degree
    macro_rule = QuadratureRule.on_triangles(mesh.cell_coords[only_macro], only_macro, 1).concat(
        QuadratureRule.on_triangles(mesh.cell_coords[both], both, degree)
    )
    micro_rule = region_quadrature(decomp, Side.NEGATIVE, 1, only_micro[~supports.cut[only_micro]])
    micro_rule = micro_rule.concat(
        region_quadrature(decomp, Side.NEGATIVE, config.cut_degree, only_micro[supports.cut[only_micro]])
    )
    micro_rule = micro_rule.concat(region_quadrature(decomp, Side.NEGATIVE, degree, both))

    alpha_macro, defect_macro = _alpha_at(macro_rule, phi2, mixing, transition, 1.0)
    alpha_micro, defect_micro = _alpha_at(micro_rule, phi2, mixing, transition, 0.0)
    macro_moments = _moments(mesh, macro_rule, alpha_macro)
    micro_moments = _moments(mesh, micro_rule, 1.0 - alpha_micro)
    defect = max(defect_macro, defect_micro)

    macro_weight = macro_moments.sum(axis=1)
    micro_weight = micro_moments.sum(axis=1)
    d_macro, d_micro = config.macro.hooke_voigt(), config.micro.hooke_voigt()
    supported = np.flatnonzero((macro_weight > 0) | (micro_weight > 0))
    b_all = strain_operators(mesh)

    def cell_blocks(chunk: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        cells = supported[chunk]
        b = b_all[cells]
        d = macro_weight[cells, None, None] * d_macro + micro_weight[cells, None, None] * d_micro
        k = np.einsum("mji,mjk,mkl->mil", b, d, b)
        return cell_dofs(mesh.cells[cells]), 0.5 * (k + np.transpose(k, (0, 2, 1)))

    n = 2 * mesh.n_nodes
    parts = _in_chunks(len(supported), cell_blocks, threads)
    bulk = _sparse(n, *_concat(parts, 6))

    facets = _facet_sets(mesh, supports, config.mode)
    ghost = csr_matrix((n, n))
    if config.beta > 0 and len(facets.selected):
        selected = facets.selected
        pieces = _in_chunks(
            len(selected),
            lambda chunk: _ghost_blocks(mesh, selected[chunk], d_micro, config.beta, config.micro.young, b_all),
            threads,
        )
        ghost = _sparse(n, *_concat(pieces, 8))
    matrix = (bulk + ghost).tocsr()
    matrix.sum_duplicates()

    load = _load_vector(mesh, config, macro_moments, micro_moments)
    dirichlet_dofs, dirichlet_values = _dirichlet(mesh, config.dirichlet)
    active = matrix.diagonal() != 0.0
    if not active.all():
        logger.info("deactivated %d dofs without support", int(np.sum(~active)))

    logger.info(
        "assembled %d dofs (%d cells, %d cut, %d transition, %d ghost facets)",
        n,
        mesh.n_cells,
        int(supports.cut.sum()),
        len(both),
        len(facets.selected) if config.beta > 0 else 0,
    )
    return AssembledSystem(
        mesh=mesh,
        config=config,
        phi1=phi1,
        phi2=phi2,
        matrix=matrix,
        ghost=ghost,
        load=load,
        active=active,
        dirichlet_dofs=dirichlet_dofs,
        dirichlet_values=dirichlet_values,
        macro_weight=macro_weight,
        micro_weight=micro_weight,
        facets=facets,
        partition_defect=defect,
    )


def _concat(parts: List[Tuple[np.ndarray, np.ndarray]], k: int) -> Tuple[np.ndarray, np.ndarray]:
    if not parts:
        return np.zeros((0, k), dtype=np.int64), np.zeros((0, k, k))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _load_vector(mesh: Mesh2, config: MultiscaleConfig, macro: np.ndarray, micro: np.ndarray) -> np.ndarray:
    n = mesh.n_nodes
    load = np.zeros((n, 2))
    for force, moments in ((config.body_macro, macro), (config.body_micro, micro)):
        if np.any(force):
            nodal = np.bincount(mesh.cells.reshape(-1), weights=moments.reshape(-1), minlength=n)
            load += nodal[:, None] * force[None, :]
    for condition in config.tractions:
        facets = mesh.tagged_facets(condition.tag)
        share = np.repeat(0.5 * mesh.facet_lengths[facets], 2)
        nodal = np.bincount(mesh.facets[facets].reshape(-1), weights=share, minlength=n)
        load += nodal[:, None] * condition.traction[None, :]
    return load.reshape(-1)


def _dirichlet(mesh: Mesh2, conditions: Sequence[DirichletCondition]) -> Tuple[np.ndarray, np.ndarray]:
    prescribed = {}
    for condition in conditions:
        nodes = mesh.tagged_nodes(condition.tag)
        for comp, value in enumerate(condition.values):
            if value is None:
                continue
            for node in nodes.tolist():
                prescribed[2 * node + comp] = value
    dofs = np.array(sorted(prescribed), dtype=np.int64)
    values = np.array([prescribed[d] for d in dofs.tolist()], dtype=float)
    return dofs, values
