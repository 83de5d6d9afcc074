"""
Dense matrix utilities every other module is built on: validation,
SPD factorizations, numerical rank and null spaces, eigenvalues,
and projector checks.

Matrices are plain 2-D float64 numpy arrays. Every function accepts
blocks with zero rows or columns.
"""
import logging
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from saddleprec.errors import (
    NonFiniteEntries, NotSymmetric, NotPositiveDefinite, NoConvergence,
)
from saddleprec.utils import assert_, fro, cached_property

log = logging.getLogger(__name__)

DenseMatrix = np.ndarray

DEFAULT_RANK_TOL = 1e-10
MAX_EIG_DIMENSION = 2000


def as_dense(matrix, name: str = "matrix") -> np.ndarray:
    """
    Returns matrix as a float64 2-D array, raising NonFiniteEntries
    if any entry is NaN or infinite.
    """
    result = np.array(matrix, dtype=np.float64)
    assert_(
        result.ndim == 2,
        ValueError("{} must be 2-dimensional, got shape {}".format(name, result.shape)),
    )
    assert_(
        np.all(np.isfinite(result)),
        NonFiniteEntries("{} has NaN or infinite entries".format(name)),
    )
    return result


def asymmetry(matrix: np.ndarray) -> float:
    """||M - M^T||_F / ||M||_F, or 0.0 for a zero matrix."""
    norm = fro(matrix)
    if norm == 0:
        return 0.0
    return fro(matrix - matrix.T) / norm


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.T) / 2


class SPDFactorization(object):
    """
    A Cholesky factorization of a symmetric positive definite matrix.

    The input is checked for symmetry against sym_tol (relative, Frobenius)
    and then symmetrized as (M + M^T)/2 to remove roundoff asymmetry.
    Internally computed Schur complements pass a looser sym_tol since their
    asymmetry grows with the conditioning of the block they were formed from.

    Attributes:
        - matrix: the symmetrized matrix
        - dim: its order
    """

    def __init__(self, matrix: np.ndarray, *, sym_tol: float = 1e-12, name: str = "matrix"):
        matrix = as_dense(matrix, name)
        assert_(
            matrix.shape[0] == matrix.shape[1],
            ValueError("{} must be square, got shape {}".format(name, matrix.shape)),
        )
        skew = asymmetry(matrix)
        if skew > sym_tol:
            raise NotSymmetric(
                "{} is not symmetric: relative asymmetry {:.3e} > {:.1e}".format(name, skew, sym_tol)
            )
        self.matrix = symmetrize(matrix)
        self.dim = matrix.shape[0]
        self.name = name

        if self.dim == 0:
            self._factor = None
            return

        try:
            self._factor = scipy.linalg.cho_factor(self.matrix, lower=True, check_finite=False)
        except np.linalg.LinAlgError as e:
            raise NotPositiveDefinite(
                "{} is not positive definite: {}".format(name, e)
            ) from e

        # LAPACK stops at the first non-positive pivot, but a tiny positive
        # pivot from a numerically singular matrix passes silently
        diagonal = np.diag(self._factor[0])
        if diagonal.min() <= np.finfo(float).eps * diagonal.max() * self.dim:
            raise NotPositiveDefinite(
                "{} is numerically singular (pivot ratio {:.3e})".format(
                    name, diagonal.min() / diagonal.max())
            )
        log.debug("factored %s of order %d", name, self.dim)

    def __repr__(self):
        return "<{} {} ({}x{})>".format(type(self).__name__, self.name, self.dim, self.dim)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solves M x = rhs for a vector or for each column of a matrix."""
        rhs = np.asarray(rhs, dtype=np.float64)
        assert_(
            rhs.shape[0] == self.dim,
            ValueError("rhs has {} rows, expected {}".format(rhs.shape[0], self.dim)),
        )
        if self.dim == 0 or rhs.size == 0:
            return np.zeros(rhs.shape)
        return scipy.linalg.cho_solve(self._factor, rhs, check_finite=False)

    def inverse(self) -> np.ndarray:
        """The explicit inverse. Only used for verification."""
        return self.solve(np.eye(self.dim))


def factor_spd(matrix: np.ndarray, *, sym_tol: float = 1e-12, name: str = "matrix") -> SPDFactorization:
    return SPDFactorization(matrix, sym_tol=sym_tol, name=name)


def singular_values(matrix: np.ndarray) -> np.ndarray:
    if matrix.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(matrix)


def numerical_rank(matrix: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above tol * sigma_max."""
    sigma = singular_values(matrix)
    if sigma.size == 0 or sigma[0] == 0:
        return 0
    return int(np.sum(sigma > tol * sigma[0]))


def condition_number(matrix: np.ndarray) -> float:
    """2-norm condition number, inf for a singular matrix."""
    sigma = singular_values(matrix)
    if sigma.size == 0:
        return 1.0
    if sigma[-1] == 0:
        return float("inf")
    return float(sigma[0] / sigma[-1])


class NullBasis(object):
    """
    An orthonormal basis for the kernel of a matrix.

    Attributes:
        - source: the matrix M whose kernel is spanned
        - basis: an array with orthonormal columns such that M @ basis ~ 0
        - tolerance: the relative singular value cutoff used to decide the rank
    """

    def __init__(self, source: np.ndarray, basis: np.ndarray, tolerance: float):
        self.source = source
        self.basis = basis
        self.tolerance = tolerance

    def __repr__(self):
        return "<{} of {}x{} matrix, dimension {}>".format(
            type(self).__name__, self.source.shape[0], self.source.shape[1], self.dimension)

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[1])

    @cached_property
    def residual(self) -> float:
        """||M @ basis||_F"""
        return fro(self.source @ self.basis)

    @cached_property
    def orthonormality_residual(self) -> float:
        """max |basis^T basis - I|"""
        if self.dimension == 0:
            return 0.0
        gram = self.basis.T @ self.basis
        return float(np.abs(gram - np.eye(self.dimension)).max())

    def satisfies_invariants(self) -> bool:
        bound = self.tolerance * fro(self.source) * np.sqrt(max(self.dimension, 1))
        return bool(
            self.residual <= max(bound, np.finfo(float).tiny)
            and self.orthonormality_residual <= 1e-12
        )


def nullspace(matrix: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> NullBasis:
    """
    Orthonormal basis for ker(M): the right singular vectors whose singular
    values are at most tol * sigma_max. A full rank M yields an empty basis,
    and a zero (or empty) M yields the identity.
    """
    assert_(tol > 0, ValueError("tol must be positive"))
    matrix = as_dense(matrix)
    rows, cols = matrix.shape
    if matrix.size == 0 or not np.any(matrix):
        return NullBasis(matrix, np.eye(cols), tol)

    _, sigma, vt = scipy.linalg.svd(matrix, full_matrices=True)
    rank = int(np.sum(sigma > tol * sigma[0]))
    basis = vt[rank:].T.copy()
    return NullBasis(matrix, basis, tol)


def eig_general(matrix: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of a square matrix as a complex array, computed by LAPACK's
    Hessenberg reduction and shifted QR iteration.
    """
    matrix = as_dense(matrix)
    dim = matrix.shape[0]
    assert_(
        dim == matrix.shape[1],
        ValueError("matrix must be square, got shape {}".format(matrix.shape)),
    )
    assert_(
        dim <= MAX_EIG_DIMENSION,
        ValueError("dimension {} exceeds the dense limit {}".format(dim, MAX_EIG_DIMENSION)),
    )
    if dim == 0:
        return np.zeros(0, dtype=complex)
    try:
        values = scipy.linalg.eigvals(matrix, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NoConvergence("QR iteration did not converge: {}".format(e)) from e
    return values.astype(complex)


def eig_symmetric(matrix: np.ndarray) -> np.ndarray:
    """
    Ascending real eigenvalues of a symmetric matrix, through a different
    LAPACK driver than eig_general. Used as a cross-check.
    """
    matrix = as_dense(matrix)
    if matrix.size == 0:
        return np.zeros(0)
    try:
        return scipy.linalg.eigh(symmetrize(matrix), eigvals_only=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NoConvergence("symmetric eigensolver did not converge: {}".format(e)) from e


class Projector(object):
    """
    A claimed projector together with witnesses for its range and kernel.

    Attributes:
        - matrix: the square matrix P
        - range_witness: columns that P should leave unchanged
        - kernel_witness: columns that P should map to zero
    """

    def __init__(
            self,
            matrix: np.ndarray,
            range_witness: Optional[np.ndarray] = None,
            kernel_witness: Optional[np.ndarray] = None,
    ):
        self.matrix = as_dense(matrix, "projector")
        dim = self.matrix.shape[0]
        assert_(self.matrix.shape == (dim, dim), ValueError("projector must be square"))
        if range_witness is None:
            range_witness = np.zeros((dim, 0))
        if kernel_witness is None:
            kernel_witness = np.zeros((dim, 0))
        self.range_witness = as_dense(range_witness, "range_witness")
        self.kernel_witness = as_dense(kernel_witness, "kernel_witness")

    def __repr__(self):
        return "<{} of order {}>".format(type(self).__name__, self.matrix.shape[0])


class ProjectorReport(NamedTuple):
    """
    Outcome of verify_projector. Residuals are relative:
    idempotence is ||P^2 - P|| / ||P||, range is ||P R - R|| / ||R||,
    kernel is ||P N|| / (||P|| ||N||).
    """
    idempotence_residual: float
    rank: int
    range_residual: float
    kernel_residual: float
    passed: bool


def verify_projector(projector: Projector, tol: float = 1e-9) -> ProjectorReport:
    P = projector.matrix
    norm_p = fro(P)
    idempotence = fro(P @ P - P) / norm_p if norm_p else 0.0
    rank = numerical_rank(P, tol)

    R = projector.range_witness
    range_residual = fro(P @ R - R) / fro(R) if fro(R) else 0.0

    N = projector.kernel_witness
    scale = norm_p * fro(N)
    kernel_residual = fro(P @ N) / scale if scale else 0.0

    passed = idempotence <= tol and range_residual <= tol and kernel_residual <= tol
    return ProjectorReport(
        idempotence_residual=float(idempotence),
        rank=rank,
        range_residual=float(range_residual),
        kernel_residual=float(kernel_residual),
        passed=bool(passed),
    )


def complementary_rank_projector(m: np.ndarray, n: np.ndarray) -> Projector:
    """
    (M + N)^-1 M, which is a projector of rank r whenever rank(M) = r,
    rank(N) = dim - r and M + N is nonsingular. Its range is spanned by
    (M + N)^-1 M itself and its kernel contains ker(M).
    """
    m = as_dense(m, "M")
    n = as_dense(n, "N")
    product = scipy.linalg.solve(m + n, m)
    return Projector(product, range_witness=product, kernel_witness=nullspace(m).basis)


def solve_general(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """LU solve for possibly nonsymmetric systems, tolerating empty blocks."""
    if matrix.size == 0 or np.asarray(rhs).size == 0:
        return np.zeros(np.shape(rhs))
    return scipy.linalg.solve(matrix, rhs)


def orthogonal_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the complement of range(basis), for orthonormal basis."""
    return nullspace(basis.T).basis
