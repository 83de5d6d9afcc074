"""
Block preconditioners for saddle point problems with a singular leading block.

    P2D = diag(A + B^T W_B^-1 B, W_B)
    P3D = diag(A + B2^T W^-1 B2, s S_B, W)           S_B = B1 Ã_W^-1 B1^T, s = 1/2
    P3T^-1 = [[V,            0,       Z_A' L^-1],
              [0,            S_V^-1,  0        ],
              [L^-1 Z_A'^T,  0,       0        ]]  S_V = B1 V B1^T

Block diagonal preconditioners keep Cholesky factors of their blocks.
The block triangular one keeps V and its corner blocks as dense matrices
together with a factorization of S_V.
"""
import logging
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from saddleprec.dense import (
    SPDFactorization, NullBasis, Projector, factor_spd, singular_values, numerical_rank,
    symmetrize, solve_general, as_dense, orthogonal_complement,
)
from saddleprec.errors import (
    AugmentNotSPD, SchurSingular, BorderedSingular, ReducedHessianNotSPD,
    MiddleSchurSingular, NotPositiveDefinite, NotSymmetric, InvalidDimensions,
)
from saddleprec.problems import SaddleProblem
from saddleprec.utils import assert_, cached_property, fro, split_vector, assemble_blocks

log = logging.getLogger(__name__)

IDEAL_SCALING = 0.5

# Schur complements inherit roundoff asymmetry from the factor they were formed with
SCHUR_SYM_TOL = 1e-8


class WeightKind(Enum):
    WB = "W_B"
    W = "W"
    L = "L"


class WeightMatrix(object):
    """
    A symmetric positive definite weight, stored with its factorization.

    Attributes:
        - kind: a WeightKind
        - value: the matrix
        - factor: its SPDFactorization
    """

    def __init__(self, kind: WeightKind, value: np.ndarray):
        self.kind = kind
        self.factor = factor_spd(value, sym_tol=SCHUR_SYM_TOL, name=kind.value)
        self.value = self.factor.matrix

    def __repr__(self):
        return "<{} {} of order {}>".format(type(self).__name__, self.kind.value, self.size)

    @property
    def size(self) -> int:
        return self.factor.dim

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.factor.solve(rhs)

    @classmethod
    def identity(cls, kind: WeightKind, size: int) -> 'WeightMatrix':
        return cls(kind, np.eye(size))

    @classmethod
    def diagonal(cls, kind: WeightKind, values: Sequence[float]) -> 'WeightMatrix':
        return cls(kind, np.diag(np.asarray(values, dtype=np.float64)))


def check_weight(weight: WeightMatrix, size: int, what: str) -> None:
    assert_(
        weight.size == size,
        InvalidDimensions("{} must be {}x{}, got order {}".format(what, size, size, weight.size)),
    )


class AugmentedBlock(object):
    """
    Ã_W = A + aug^T W^-1 aug, the augmented Lagrangian replacement for a singular A.

    Attributes:
        - base: A
        - augment_rows: B2, or B for the two-block system
        - weight: the WeightMatrix W
        - value: Ã_W
        - factor: its SPDFactorization
    """

    def __init__(self, base: np.ndarray, augment_rows: np.ndarray, weight: WeightMatrix):
        check_weight(weight, augment_rows.shape[0], "the weight")
        self.base = base
        self.augment_rows = augment_rows
        self.weight = weight
        self.value = symmetrize(base + augment_rows.T @ weight.solve(augment_rows))
        try:
            self.factor = factor_spd(self.value, name="augmented block")
        except NotPositiveDefinite as e:
            raise AugmentNotSPD(
                "A + B^T W^-1 B is not positive definite, so ker(A) and ker(B) intersect: {}".format(e)
            ) from e

    def __repr__(self):
        return "<{} of order {} augmented by {} rows>".format(
            type(self).__name__, self.base.shape[0], self.augment_rows.shape[0])

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.factor.solve(rhs)

    def schur_complement(self, rows: np.ndarray) -> np.ndarray:
        """rows Ã_W^-1 rows^T"""
        return symmetrize(rows @ self.solve(rows.T))


class PreconditionerTag(Enum):
    P2D = "p2d"
    P3D = "p3d"
    P3T = "p3t"
    IDENTITY = "identity"

    @property
    def is_spd(self) -> bool:
        return self is not PreconditionerTag.P3T


class Preconditioner(object):
    """
    Base class for preconditioners P of a saddle point matrix of order n + m1 + m2.

    Subclasses implement apply_inverse, which computes P^-1 r for a vector r
    or for every column of a matrix. Built preconditioners are never mutated,
    so they can be shared between threads.

    Attributes:
        - tag: a PreconditionerTag
        - dims: (n, m1, m2)
        - warnings: reasons the preconditioner is not ideal for its problem
    """

    tag = None  # type: PreconditionerTag
    scaling = None  # type: Optional[float]

    def __init__(self, dims: Tuple[int, int, int], warnings: Optional[List[str]] = None):
        self.dims = dims
        self.warnings = list(warnings or [])

    def __repr__(self):
        return "<{} {} dims={}>".format(type(self).__name__, self.tag.value, self.dims)

    @property
    def dimension(self) -> int:
        return sum(self.dims)

    @property
    def is_ideal(self) -> bool:
        return not self.warnings

    def apply_inverse(self, residual: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def explicit_inverse(self) -> np.ndarray:
        """P^-1 as a dense matrix. Only used for verification."""
        return self.apply_inverse(np.eye(self.dimension))

    def explicit_matrix(self) -> np.ndarray:
        """P itself as a dense matrix. Only used for verification."""
        return solve_general(self.explicit_inverse(), np.eye(self.dimension))

    def _check(self, residual: np.ndarray) -> np.ndarray:
        residual = np.asarray(residual, dtype=np.float64)
        assert_(
            residual.shape[0] == self.dimension,
            InvalidDimensions("expected {} rows, got {}".format(self.dimension, residual.shape[0])),
        )
        return residual


def _warn(warnings: List[str], message: str) -> None:
    log.warning(message)
    warnings.append(message)


class BlockDiagonalPreconditioner(Preconditioner):
    """
    diag(M_1, ..., M_k) with each M_i symmetric positive definite.
    The block sizes need not match dims, only their total.
    scaling is the factor applied to the Schur complement block of P3D.
    """

    def __init__(
            self,
            tag: PreconditionerTag,
            dims: Tuple[int, int, int],
            factors: List[SPDFactorization],
            warnings: Optional[List[str]] = None,
            *,
            scaling: Optional[float] = None,
    ):
        super().__init__(dims, warnings)
        self.tag = tag
        self.factors = factors
        self.scaling = scaling
        assert_(
            sum(f.dim for f in factors) == self.dimension,
            InvalidDimensions("block sizes do not add up to {}".format(self.dimension)),
        )

    @property
    def block_sizes(self) -> List[int]:
        return [f.dim for f in self.factors]

    def apply_inverse(self, residual: np.ndarray) -> np.ndarray:
        residual = self._check(residual)
        parts = split_vector(residual, self.block_sizes)
        return np.concatenate([f.solve(part) for f, part in zip(self.factors, parts)])

    def explicit_matrix(self) -> np.ndarray:
        sizes = self.block_sizes
        return assemble_blocks([
            [f.matrix if i == j else np.zeros((sizes[i], sizes[j])) for j in range(len(sizes))]
            for i, f in enumerate(self.factors)
        ])


def default_weight_b(problem: SaddleProblem) -> WeightMatrix:
    return WeightMatrix.identity(WeightKind.WB, problem.m)


def default_weight(problem: SaddleProblem) -> WeightMatrix:
    return WeightMatrix.identity(WeightKind.W, problem.m2)


def build_p2d(problem: SaddleProblem, weight_b: Optional[WeightMatrix] = None) -> BlockDiagonalPreconditioner:
    """
    diag(A + B^T W_B^-1 B, W_B) with B = [B1; B2].

    This is ideal only when nullity(A) = m1 + m2. On other problems it is
    still built, with a warning.
    """
    if weight_b is None:
        weight_b = default_weight_b(problem)
    check_weight(weight_b, problem.m, "W_B")

    warnings = []
    nullity = problem.null_a.dimension
    if nullity != problem.m:
        _warn(warnings, "P2D is not ideal: nullity(A) = {} but B has {} rows".format(nullity, problem.m))

    augmented = AugmentedBlock(problem.A, problem.B, weight_b)
    return BlockDiagonalPreconditioner(
        PreconditionerTag.P2D, problem.dims, [augmented.factor, weight_b.factor], warnings)


def build_p3d(
        problem: SaddleProblem,
        weight: Optional[WeightMatrix] = None,
        *,
        scaling: float = IDEAL_SCALING,
) -> BlockDiagonalPreconditioner:
    """
    diag(Ã_W, scaling * S_B, W) with Ã_W = A + B2^T W^-1 B2 and S_B = B1 Ã_W^-1 B1^T.

    Ideal for minimally independent problems with scaling = 1/2.
    """
    if weight is None:
        weight = default_weight(problem)
    check_weight(weight, problem.m2, "W")
    assert_(scaling > 0, ValueError("scaling must be positive, got {}".format(scaling)))

    warnings = []
    if not problem.is_minimally_independent():
        _warn(warnings, "P3D is not ideal: the problem is not minimally independent")
    if scaling != IDEAL_SCALING and problem.m1:
        _warn(warnings, "P3D is not ideal: the Schur complement is scaled by {} instead of 1/2".format(scaling))

    augmented = AugmentedBlock(problem.A, problem.B2, weight)
    schur = scaling * augmented.schur_complement(problem.B1)
    rank = numerical_rank(schur)
    if rank < problem.m1:
        raise SchurSingular(
            "B1 Ã_W^-1 B1^T has rank {} < m1 = {}, so the rows of B1 are dependent".format(rank, problem.m1))
    try:
        schur_factor = factor_spd(schur, sym_tol=SCHUR_SYM_TOL, name="S_B")
    except (NotPositiveDefinite, NotSymmetric) as e:
        raise SchurSingular("B1 Ã_W^-1 B1^T is singular, so the rows of B1 are dependent: {}".format(e)) from e

    return BlockDiagonalPreconditioner(
        PreconditionerTag.P3D, problem.dims, [augmented.factor, schur_factor, weight.factor], warnings,
        scaling=scaling,
    )


def identity_preconditioner(dims: Tuple[int, int, int]) -> BlockDiagonalPreconditioner:
    """The unpreconditioned baseline."""
    return BlockDiagonalPreconditioner(
        PreconditionerTag.IDENTITY, dims, [factor_spd(np.eye(sum(dims)), name="identity")])


def bordering_block(problem: SaddleProblem, z_a: Optional[NullBasis] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns (Z_A, G) with G = B2 Z_A, raising BorderedSingular unless G is
    square and nonsingular.
    """
    if z_a is None:
        z_a = problem.null_a
    basis = z_a.basis
    G = problem.B2 @ basis
    assert_(
        G.shape[0] == G.shape[1],
        BorderedSingular("B2 Z_A is {}x{}, expected nullity(A) = m2".format(*G.shape)),
    )
    sigma = singular_values(G)
    if sigma.size and sigma[-1] <= 1e-12 * sigma[0]:
        raise BorderedSingular("B2 Z_A is singular (condition {:.3e})".format(
            sigma[0] / sigma[-1] if sigma[-1] else float("inf")))
    return basis, G


def build_weight_l(problem: SaddleProblem, z_a: Optional[NullBasis] = None) -> Tuple[WeightMatrix, np.ndarray]:
    """
    Normalizes the null space basis of A so that L = B2 Z_A' is
    symmetric positive definite.

    With G = B2 Z_A this returns L = G G^T and the null matrix Z_A' = Z_A G^T,
    whose columns still span ker(A) but are no longer orthonormal.
    """
    basis, G = bordering_block(problem, z_a)
    return WeightMatrix(WeightKind.L, G @ G.T), basis @ G.T


class SplitAugmentedBlock(object):
    """
    Ã_L = A + B2^T L^-1 B2 with L = G G^T, factored in the orthonormal
    basis [Z_A, Y] where Y spans range(A). Writing C = G^-1 B2 Y,

        [Z_A, Y]^T Ã_L [Z_A, Y] = [[I, C], [C^T, Y^T A Y + C^T C]]

    whose Schur complement on the second block is Y^T A Y, so a solve with
    Ã_L only needs a Cholesky factor of Y^T A Y.

    Attributes:
        - null: Z_A
        - range: Y
        - bordering: G = B2 Z_A
        - coupling: C
        - reduced: the SPDFactorization of Y^T A Y
    """

    def __init__(self, problem: SaddleProblem, z_a: Optional[NullBasis] = None):
        self.null, self.bordering = bordering_block(problem, z_a)
        self.range = orthogonal_complement(self.null)
        self.coupling = solve_general(self.bordering, problem.B2 @ self.range)
        try:
            self.reduced = factor_spd(
                symmetrize(self.range.T @ problem.A @ self.range), name="A on range(A)")
        except NotPositiveDefinite as e:
            raise AugmentNotSPD("A is not positive definite on its range: {}".format(e)) from e

    def __repr__(self):
        return "<{} of order {} with nullity {}>".format(
            type(self).__name__, self.null.shape[0], self.null.shape[1])

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        a = self.null.T @ rhs
        b = self.range.T @ rhs
        v = self.reduced.solve(b - self.coupling.T @ a)
        u = a - self.coupling @ v
        return self.null @ u + self.range @ v

    def projected_rows(self, rows: np.ndarray) -> np.ndarray:
        """G^-1 rows, so that rows^T L^-1 Z_A'^T = (G^-1 rows)^T Z_A^T for rows = B2."""
        return solve_general(self.bordering, rows)


class VMode(Enum):
    NULL_B2 = "null-b2"
    AUG_SOLVE = "aug-solve"


class VOperator(object):
    """
    V = Z_B2 (Z_B2^T A Z_B2)^-1 Z_B2^T, evaluated exactly as a dense matrix.

    Attributes:
        - mode: the VMode it was computed with
        - value: the n x n matrix
    """

    def __init__(self, mode: VMode, value: np.ndarray):
        self.mode = mode
        self.value = value

    def __repr__(self):
        return "<{} {} of order {}>".format(type(self).__name__, self.mode.value, self.value.shape[0])

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.value @ x


def build_v(
        problem: SaddleProblem,
        mode: VMode = VMode.NULL_B2,
        *,
        basis: Optional[NullBasis] = None,
) -> VOperator:
    """
    Computes V in one of two ways:

    NULL_B2: Z (Z^T A Z)^-1 Z^T with Z an orthonormal basis for ker(B2),
        through a Cholesky factor of Z^T A Z.
    AUG_SOLVE: Ã^-1 (I - B2^T L^-1 Z_A'^T) with Ã = A + B2^T L^-1 B2
        and L, Z_A' from build_weight_l, through SplitAugmentedBlock.
        B2^T L^-1 Z_A'^T reduces to (G^-1 B2)^T Z_A^T.

    basis overrides the null space basis (of B2 or A respectively).
    """
    if mode is VMode.NULL_B2:
        z = (problem.null_b2 if basis is None else basis).basis
        try:
            reduced = factor_spd(symmetrize(z.T @ problem.A @ z), name="Z^T A Z")
        except NotPositiveDefinite as e:
            raise ReducedHessianNotSPD(
                "A is not positive definite on ker(B2): {}".format(e)) from e
        value = z @ reduced.solve(z.T)
    else:
        augmented = SplitAugmentedBlock(problem, basis)
        shift = augmented.projected_rows(problem.B2).T @ augmented.null.T
        value = augmented.solve(np.eye(problem.n) - shift)
    return VOperator(mode, symmetrize(value))


class Corners(Enum):
    """Which formula gives the off-diagonal blocks of P3T^-1."""
    NULL_A = "null-a"
    NULL_B2 = "null-b2"


class BlockTriangularPreconditioner(Preconditioner):
    """
    P3T^-1 = [[V, 0, C], [0, S_V^-1, 0], [C^T, 0, 0]].

    With Corners.NULL_A, C = Z_A' L^-1. With Corners.NULL_B2, C = (I - V A) B2^T (B2 B2^T)^-1.
    Both are the unique n x m2 matrix with A C = 0 and B2 C = I.

    Attributes:
        - v: the VOperator
        - corner: C
        - middle: factorization of S_V = B1 V B1^T
        - corners: the Corners choice
    """
    tag = PreconditionerTag.P3T

    def __init__(
            self,
            dims: Tuple[int, int, int],
            v: VOperator,
            corner: np.ndarray,
            middle: SPDFactorization,
            corners: Corners,
    ):
        super().__init__(dims)
        self.v = v
        self.corner = corner
        self.middle = middle
        self.corners = corners

    def apply_inverse(self, residual: np.ndarray) -> np.ndarray:
        residual = self._check(residual)
        x, y1, y2 = split_vector(residual, self.dims)
        return np.concatenate([
            self.v.apply(x) + self.corner @ y2,
            self.middle.solve(y1),
            self.corner.T @ x,
        ])

    def explicit_inverse(self) -> np.ndarray:
        n, m1, m2 = self.dims
        return assemble_blocks([
            [self.v.value, np.zeros((n, m1)), self.corner],
            [np.zeros((m1, n)), self.middle.inverse(), np.zeros((m1, m2))],
            [self.corner.T, np.zeros((m2, m1)), np.zeros((m2, m2))],
        ])


def null_a_corner(problem: SaddleProblem, z_a: Optional[NullBasis] = None) -> np.ndarray:
    """Z_A' L^-1, which equals Z_A G^-1 for G = B2 Z_A."""
    basis, G = bordering_block(problem, z_a)
    return solve_general(G.T, basis.T).T


def null_b2_corner(problem: SaddleProblem, v: VOperator) -> np.ndarray:
    """(I - V A) B2^T (B2 B2^T)^-1"""
    B2 = problem.B2
    gram = factor_spd(B2 @ B2.T, name="B2 B2^T")
    return gram.solve((B2.T - v.value @ (problem.A @ B2.T)).T).T


def build_p3t(
        problem: SaddleProblem,
        z_a: Optional[NullBasis] = None,
        v: Optional[VOperator] = None,
        *,
        corners: Corners = Corners.NULL_A,
) -> BlockTriangularPreconditioner:
    if v is None:
        v = build_v(problem)
    if corners is Corners.NULL_A:
        corner = null_a_corner(problem, z_a)
    else:
        corner = null_b2_corner(problem, v)

    middle = symmetrize(problem.B1 @ v.value @ problem.B1.T)
    rank = numerical_rank(middle)
    if rank < problem.m1:
        raise MiddleSchurSingular(
            "B1 V B1^T has rank {} < m1 = {}, so K is singular".format(rank, problem.m1))
    try:
        middle_factor = factor_spd(middle, sym_tol=SCHUR_SYM_TOL, name="S_V")
    except NotPositiveDefinite as e:
        raise MiddleSchurSingular("B1 V B1^T is singular, so K is singular: {}".format(e)) from e

    return BlockTriangularPreconditioner(problem.dims, v, corner, middle_factor, corners)


def schur_identity_residual(problem: SaddleProblem, weight_b: np.ndarray) -> float:
    """
    ||B (A + B^T W_B^-1 B)^-1 B^T - W_B|| / ||W_B||.

    W_B only needs to be invertible, so LU solves are used throughout.
    The residual is small exactly when nullity(A) = m.
    """
    weight_b = as_dense(weight_b, "W_B")
    B = problem.B
    augmented = problem.A + B.T @ solve_general(weight_b, B)
    schur = B @ solve_general(augmented, B.T)
    return fro(schur - weight_b) / fro(weight_b)


def _augmented_w(problem: SaddleProblem, weight: Optional[WeightMatrix]) -> AugmentedBlock:
    if weight is None:
        weight = default_weight(problem)
    return AugmentedBlock(problem.A, problem.B2, weight)


def null_matrix_residual(problem: SaddleProblem, weight: Optional[WeightMatrix] = None) -> float:
    """||A Ã_W^-1 B2^T|| / (||A|| ||B2||), small because Ã_W^-1 B2^T is a null matrix of A."""
    augmented = _augmented_w(problem, weight)
    scale = fro(problem.A) * fro(problem.B2)
    if scale == 0:
        return 0.0
    return fro(problem.A @ augmented.solve(problem.B2.T)) / scale


def projector_pa(problem: SaddleProblem, weight: Optional[WeightMatrix] = None) -> Projector:
    """
    P_A = A Ã_W^-1, the projector onto range(A) along range(B2^T).
    It fixes the columns of A and annihilates B2^T.
    """
    augmented = _augmented_w(problem, weight)
    matrix = augmented.solve(problem.A.T).T
    return Projector(matrix, range_witness=problem.A, kernel_witness=problem.B2.T)


def av_residual(problem: SaddleProblem, v: VOperator, weight: Optional[WeightMatrix] = None) -> float:
    """||A V - P_A|| / ||P_A||"""
    projector = projector_pa(problem, weight).matrix
    return fro(problem.A @ v.value - projector) / fro(projector)


class LemmaChecks(object):
    """
    Residuals of the identities behind the preconditioners, for one problem and weight.
    Each one is computed on first access.
    """

    def __init__(self, problem: SaddleProblem, weight: Optional[WeightMatrix] = None):
        self.problem = problem
        self.weight = weight

    @cached_property
    def v(self) -> VOperator:
        return build_v(self.problem, VMode.NULL_B2)

    @cached_property
    def v_modes_difference(self) -> float:
        other = build_v(self.problem, VMode.AUG_SOLVE)
        return fro(self.v.value - other.value) / fro(self.v.value)

    @cached_property
    def null_matrix(self) -> float:
        return null_matrix_residual(self.problem, self.weight)

    @cached_property
    def av(self) -> float:
        return av_residual(self.problem, self.v, self.weight)

    @cached_property
    def vav(self) -> float:
        """||V A V - V|| / ||V||"""
        V = self.v.value
        return fro(V @ self.problem.A @ V - V) / fro(V)
