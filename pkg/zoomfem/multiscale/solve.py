import logging
from enum import Enum
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh
from scipy.sparse import csc_matrix, csr_matrix, issparse
from scipy.sparse.linalg import LinearOperator, cg, eigsh, splu

from zoomfem.multiscale.protocol import ConfigError, NonConvergenceError, NotPositiveDefiniteError, SolverError

logger = logging.getLogger(__name__)

DIRECT_LIMIT: int = 50_000
DENSE_LIMIT: int = 2000


class SolveMethod(Enum):
    AUTO = "auto"
    DIRECT = "cholesky"
    ITERATIVE = "pcg"


class SolveOptions:
    """
    solver tunables; the defaults pick the direct factorization up to DIRECT_LIMIT dofs
    """

    def __init__(self, method: SolveMethod = SolveMethod.AUTO, condition: bool = False):
        self.method: SolveMethod = SolveMethod(method)
        self.condition: bool = condition
        self.tolerance: float = 1e-10
        self.direct_limit: int = DIRECT_LIMIT
        self.dense_limit: int = DENSE_LIMIT
        self.iteration_factor: int = 20
        self.eigen_tolerance: float = 1e-8
        self.refinement_steps: int = 3
        self.seed: int = 0

    def __repr__(self):
        return f"<SolveOptions {self.method.value} tol={self.tolerance:g}>"


class SparseSymSystem:
    def __init__(self, matrix, rhs: np.ndarray):
        if not issparse(matrix):
            matrix = csr_matrix(matrix)
        self.matrix: csr_matrix = csr_matrix(matrix)
        self.rhs = np.asarray(rhs, dtype=float)
        n, m = self.matrix.shape
        if n != m:
            raise ConfigError(f"system matrix must be square, got {self.matrix.shape}")
        if self.rhs.shape != (n,):
            raise ConfigError(f"right-hand side has shape {self.rhs.shape}, expected ({n},)")
        if not (np.all(np.isfinite(self.matrix.data)) and np.all(np.isfinite(self.rhs))):
            raise ConfigError("system contains non-finite entries")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def symmetry_defect(self) -> float:
        """
        :return: max |A - A^T| relative to max |A|
        """
        scale = abs(self.matrix).max() if self.matrix.nnz else 0.0
        if scale == 0:
            return 0.0
        return float(abs(self.matrix - self.matrix.T).max() / scale)

    def residual(self, x: np.ndarray) -> float:
        r = np.linalg.norm(self.rhs - self.matrix @ x)
        b = np.linalg.norm(self.rhs)
        return float(r / b) if b > 0 else float(r)

    def __repr__(self):
        return f"<SparseSymSystem n={self.dimension} nnz={self.matrix.nnz}>"


class CholeskyFactor:
    """
    a symmetric-mode sparse LU without off-diagonal pivoting: for an SPD matrix it is P A P^T = L D L^T
    """

    def __init__(self, matrix):
        a = csc_matrix(matrix)
        try:
            self._lu = splu(
                a, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options=dict(SymmetricMode=True)
            )
        except RuntimeError as e:
            raise NotPositiveDefiniteError(f"factorization failed: {e}") from e
        if not np.array_equal(self._lu.perm_r, self._lu.perm_c):
            raise NotPositiveDefiniteError("factorization needed off-diagonal pivots")
        d = self._lu.U.diagonal()
        if not np.all(d > 0):
            raise NotPositiveDefiniteError(f"{int(np.sum(d <= 0))} non-positive pivots")
        self.shape = a.shape

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.asarray(b, dtype=float))

    def operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.solve, dtype=float)

    def __repr__(self):
        return f"<CholeskyFactor n={self.shape[0]} nnz(L)={self._lu.L.nnz}>"


class SolveReport:
    def __init__(
        self, solution: np.ndarray, method: SolveMethod, iterations: int, residual: float, condition: float = None
    ):
        """
        :param solution: the solution on the reduced dofs
        :param method: the method that produced it
        :param iterations: CG iterations, refinement sweeps for the direct path
        :param residual: the final relative residual norm
        :param condition: lambda_max / lambda_min if it was requested
        """
        self.solution = solution
        self.method = method
        self.iterations = iterations
        self.residual = residual
        self.condition = condition

    def __repr__(self):
        kappa = "" if self.condition is None else f" kappa={self.condition:.4e}"
        return f"<SolveReport {self.method.value} iterations={self.iterations} residual={self.residual:.3e}{kappa}>"


def _pick_method(n: int, options: SolveOptions) -> SolveMethod:
    if options.method is not SolveMethod.AUTO:
        return options.method
    return SolveMethod.DIRECT if n <= options.direct_limit else SolveMethod.ITERATIVE


def _solve_direct(system: SparseSymSystem, factor: CholeskyFactor, options: SolveOptions):
    x = factor.solve(system.rhs)
    sweeps = 0
    residual = system.residual(x)
    while residual > options.tolerance and sweeps < options.refinement_steps:
        x = x + factor.solve(system.rhs - system.matrix @ x)
        residual = system.residual(x)
        sweeps += 1
    return x, sweeps, residual


def _solve_pcg(system: SparseSymSystem, options: SolveOptions):
    a = system.matrix
    n = system.dimension
    diag = a.diagonal()
    if not np.all(diag > 0):
        raise NotPositiveDefiniteError(f"{int(np.sum(diag <= 0))} non-positive diagonal entries")
    jacobi = LinearOperator((n, n), matvec=lambda r: r / diag, dtype=float)
    cap = options.iteration_factor * n
    count = [0]

    def progress(_):
        count[0] += 1

    x, info = cg(a, system.rhs, rtol=options.tolerance, atol=0.0, maxiter=cap, M=jacobi, callback=progress)
    residual = system.residual(x)
    if info > 0:
        raise NonConvergenceError(count[0], residual)
    if info < 0:
        raise NotPositiveDefiniteError("conjugate gradients broke down")
    logger.debug("pcg converged in %d iterations, residual %.3e", count[0], residual)
    return x, count[0], residual


def solve_spd(system: SparseSymSystem, options: SolveOptions = None) -> SolveReport:
    """
    :raises NotPositiveDefiniteError: when the factorization or CG detects an indefinite matrix
    :raises NonConvergenceError: when CG hits its iteration cap
    """
    options = options or SolveOptions()
    n = system.dimension
    method = _pick_method(n, options)
    factor = None
    if method is SolveMethod.DIRECT:
        factor = CholeskyFactor(system.matrix)
        x, iterations, residual = _solve_direct(system, factor, options)
    else:
        x, iterations, residual = _solve_pcg(system, options)

    condition = cond_estimate(system.matrix, factor, options) if options.condition else None
    report = SolveReport(x, method, iterations, residual, condition)
    logger.info("solved %d dofs: %r", n, report)
    return report


def cond_estimate(matrix, factor: Optional[CholeskyFactor] = None, options: SolveOptions = None) -> float:
    """
    lambda_max / lambda_min of an SPD matrix; dense up to options.dense_limit, Lanczos above with the small end
    found by shift-invert through the Cholesky factor
    """
    options = options or SolveOptions()
    a = csr_matrix(matrix)
    n = a.shape[0]
    if n == 0:
        raise ConfigError("condition number of an empty matrix")
    try:
        if n <= options.dense_limit:
            eigenvalues = eigvalsh(a.toarray())
            lo, hi = float(eigenvalues[0]), float(eigenvalues[-1])
        else:
            factor = factor or CholeskyFactor(a)
            v0 = np.random.default_rng(options.seed).standard_normal(n)
            tol = options.eigen_tolerance
            hi = float(eigsh(a, k=1, which="LA", v0=v0, tol=tol, return_eigenvectors=False)[0])
            lo = float(
                eigsh(
                    a, k=1, sigma=0.0, which="LM", OPinv=factor.operator(), v0=v0, tol=tol, return_eigenvectors=False
                )[0]
            )
    # ArpackNoConvergence and the other ARPACK failures are RuntimeErrors
    except (RuntimeError, LinAlgError) as e:
        raise SolverError(f"eigenvalue estimate failed: {e}") from e
    if not lo > 0:
        raise NotPositiveDefiniteError(f"smallest eigenvalue {lo!r}")
    kappa = hi / lo
    logger.debug("lambda_min=%.6e lambda_max=%.6e kappa=%.6e", lo, hi, kappa)
    return kappa
