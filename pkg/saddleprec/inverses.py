"""
Closed form inverses of saddle point matrices.

Two-block formulas take a leading block Acal and constraint rows Bcal.
Three-block formulas take a SaddleProblem and return the inverse of
K = [[A, B1^T, B2^T], [B1, 0, 0], [B2, 0, 0]] as a 3x3 grid of blocks.
"""
import logging
from enum import Enum
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from saddleprec.dense import (
    NullBasis, SPDFactorization, factor_spd, nullspace, solve_general, symmetrize, as_dense,
)
from saddleprec.errors import (
    LeadingBlockNotSPD, SchurSingular, ReducedHessianNotSPD, NotMinimallyIndependent,
    NotPositiveDefinite, NotSymmetric,
)
from saddleprec.preconditioners import (
    AugmentedBlock, WeightMatrix, VOperator, build_v, build_weight_l, default_weight,
    SCHUR_SYM_TOL,
)
from saddleprec.problems import SaddleProblem
from saddleprec.utils import assert_, cached_property, fro, split_blocks, assemble_blocks

log = logging.getLogger(__name__)


class Provenance(Enum):
    DIRECT = "direct"
    POS_DEF_A = "posdef-a"
    NULLSPACE_Z = "nullspace-z"
    NULL_B2 = "null-b2"
    NULL_A = "null-a"
    NULL_A_MULT = "null-a-mult"
    AUG_SHIFT = "aug-shift"


class BlockInverse(object):
    """
    A claimed inverse as a square grid of blocks.

    Attributes:
        - grid: list of rows of blocks, 2x2 or 3x3
        - provenance: the formula that produced it
        - diagnostics: named residuals computed along the way
    """

    def __init__(
            self,
            grid: List[List[np.ndarray]],
            provenance: Provenance,
            diagnostics: Optional[Dict[str, float]] = None,
    ):
        self.grid = grid
        self.provenance = provenance
        self.diagnostics = dict(diagnostics or {})

    def __repr__(self):
        return "<{} {} sizes={}>".format(type(self).__name__, self.provenance.value, self.sizes)

    @property
    def sizes(self) -> List[int]:
        return [row[0].shape[0] for row in self.grid]

    def block(self, i: int, j: int) -> np.ndarray:
        return self.grid[i][j]

    @cached_property
    def assembled(self) -> np.ndarray:
        return assemble_blocks(self.grid)

    def residual(self, K: np.ndarray) -> float:
        """max(||X K - I||_F, ||K X - I||_F)"""
        X = self.assembled
        eye = np.eye(X.shape[0])
        return max(fro(X @ K - eye), fro(K @ X - eye))

    def symmetry_residual(self) -> float:
        """max over i, j of ||X_ij - X_ji^T|| relative to ||X||"""
        norm = fro(self.assembled)
        if norm == 0:
            return 0.0
        k = len(self.grid)
        return max(
            fro(self.grid[i][j] - self.grid[j][i].T)
            for i in range(k) for j in range(k)
        ) / norm

    def distance(self, other: 'BlockInverse') -> float:
        """||X - Y||_F / ||Y||_F"""
        norm = fro(other.assembled)
        diff = fro(self.assembled - other.assembled)
        return diff / norm if norm else diff

    def zero_block_norms(self) -> Dict[str, float]:
        """Norms of the (2,3), (3,2) and (3,3) blocks, which vanish under minimal independence."""
        assert_(len(self.grid) == 3, ValueError("only defined for 3x3 grids"))
        return {
            "23": fro(self.grid[1][2]),
            "32": fro(self.grid[2][1]),
            "33": fro(self.grid[2][2]),
        }


def _factor_schur(matrix: np.ndarray, name: str) -> SPDFactorization:
    try:
        return factor_spd(symmetrize(matrix), sym_tol=SCHUR_SYM_TOL, name=name)
    except (NotPositiveDefinite, NotSymmetric) as e:
        raise SchurSingular("{} is singular: {}".format(name, e)) from e


def _check_two_block(acal: np.ndarray, bcal: np.ndarray):
    acal = as_dense(acal, "Acal")
    bcal = as_dense(bcal, "Bcal")
    n = acal.shape[0]
    assert_(acal.shape == (n, n), ValueError("Acal must be square"))
    assert_(bcal.shape[1] == n, ValueError("Bcal must have {} columns".format(n)))
    return acal, bcal


def inv2_posdef(acal: np.ndarray, bcal: np.ndarray) -> BlockInverse:
    """
    [[A, B^T], [B, 0]]^-1 for SPD A:

        [[A^-1 - A^-1 B^T S^-1 B A^-1,  A^-1 B^T S^-1],
         [S^-1 B A^-1,                  -S^-1        ]]   with S = B A^-1 B^T
    """
    acal, bcal = _check_two_block(acal, bcal)
    try:
        leading = factor_spd(acal, name="Acal")
    except NotPositiveDefinite as e:
        raise LeadingBlockNotSPD(str(e)) from e

    a_inv_bt = leading.solve(bcal.T)
    schur = _factor_schur(bcal @ a_inv_bt, "B A^-1 B^T")
    upper = schur.solve(a_inv_bt.T).T
    return BlockInverse(
        [
            [leading.inverse() - upper @ a_inv_bt.T, upper],
            [upper.T, -schur.inverse()],
        ],
        Provenance.POS_DEF_A,
    )


def reduced_inverse(acal: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Z (Z^T A Z)^-1 Z^T"""
    try:
        reduced = factor_spd(symmetrize(z.T @ acal @ z), name="Z^T A Z")
    except NotPositiveDefinite as e:
        raise ReducedHessianNotSPD("A is not positive definite on the null space: {}".format(e)) from e
    return symmetrize(z @ reduced.solve(z.T))


def inv2_nullspace(acal: np.ndarray, bcal: np.ndarray, z: Optional[NullBasis] = None) -> BlockInverse:
    """
    [[A, B^T], [B, 0]]^-1 through a basis Z of ker(B), valid for singular A
    as long as Z^T A Z is positive definite. With V_B = Z (Z^T A Z)^-1 Z^T
    and B^+ = B^T (B B^T)^-1:

        [[V_B,                    (I - V_B A) B^+              ],
         [B^+T (I - A V_B),       -B^+T (A - A V_B A) B^+      ]]
    """
    acal, bcal = _check_two_block(acal, bcal)
    if z is None:
        z = nullspace(bcal)
    n = acal.shape[0]
    v_b = reduced_inverse(acal, z.basis)
    gram = factor_spd(bcal @ bcal.T, name="B B^T")
    pseudo = gram.solve(bcal).T
    corner = (np.eye(n) - v_b @ acal) @ pseudo
    last = -pseudo.T @ (acal - acal @ v_b @ acal) @ pseudo
    return BlockInverse(
        [
            [v_b, corner],
            [corner.T, symmetrize(last)],
        ],
        Provenance.NULLSPACE_Z,
    )


class NullB2Blocks(NamedTuple):
    """
    The blocks of K^-1 in terms of V and S_V = B1 V B1^T. They hold for any
    nonsingular K with [[A, B2^T], [B2, 0]] invertible. x3_simplified is the
    form x3 takes under minimal independence.
    """
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    x4: np.ndarray
    x5: np.ndarray
    x6: np.ndarray
    x3_simplified: np.ndarray

    def grid(self, simplified: bool = False) -> List[List[np.ndarray]]:
        x3 = self.x3_simplified if simplified else self.x3
        x5 = np.zeros(self.x5.shape) if simplified else self.x5
        x6 = np.zeros(self.x6.shape) if simplified else self.x6
        return [
            [self.x1, self.x2.T, x3.T],
            [self.x2, self.x4, x5.T],
            [x3, x5, x6],
        ]


def null_b2_blocks(problem: SaddleProblem, z_b2: Optional[NullBasis] = None) -> NullB2Blocks:
    A, B1, B2 = problem.A, problem.B1, problem.B2
    n = problem.n
    eye = np.eye(n)

    V = build_v(problem, basis=z_b2).value
    middle = _factor_schur(B1 @ V @ B1.T, "B1 V B1^T")
    gram = factor_spd(B2 @ B2.T, name="B2 B2^T")

    s_inv = middle.inverse()
    T = B1.T @ s_inv @ B1
    AV = A @ V
    pre = gram.solve(B2)  # (B2 B2^T)^-1 B2

    x1 = V - V @ T @ V
    x2 = s_inv @ B1 @ V
    x3 = pre @ (eye - AV + AV @ T @ V - T @ V)
    x4 = -s_inv
    x5 = pre @ (eye - AV) @ B1.T @ s_inv
    x6 = -pre @ (A + T - AV @ A - AV @ T - T @ V @ A + AV @ T @ V @ A) @ pre.T
    x3_simplified = pre @ (eye - AV)
    return NullB2Blocks(x1, x2, x3, x4, x5, x6, x3_simplified)


def inv3_null_b2(problem: SaddleProblem, z_b2: Optional[NullBasis] = None) -> BlockInverse:
    """
    K^-1 through a basis of ker(B2). Minimally independent problems get the
    simplified grid with vanishing (2,3), (3,2) and (3,3) blocks,
    every other problem the full one.
    """
    blocks = null_b2_blocks(problem, z_b2)
    simplified = problem.regime.is_minimally_independent
    diagnostics = {}
    if simplified:
        diagnostics["x3_simplification"] = fro(blocks.x3 - blocks.x3_simplified)
    return BlockInverse(blocks.grid(simplified), Provenance.NULL_B2, diagnostics)


def inv3_direct(problem: SaddleProblem) -> BlockInverse:
    """K^-1 from an LU factorization of the assembled K."""
    inverse = solve_general(problem.K, np.eye(problem.dimension))
    return BlockInverse(split_blocks(inverse, problem.dims), Provenance.DIRECT)


class ScratchTerms(object):
    """
    Intermediate quantities shared by the three-block formulas, for one
    problem and weight W. Each is computed on first access.

    Attributes:
        - V: Z_B2 (Z_B2^T A Z_B2)^-1 Z_B2^T
        - S_V: B1 V B1^T
        - augmented: Ã_W = A + B2^T W^-1 B2
        - S_B: B1 Ã_W^-1 B1^T
        - A_hat: Ã_W^-1 - Ã_W^-1 B1^T S_B^-1 B1 Ã_W^-1
        - S_bar: B2 A_hat B2^T
    """

    def __init__(self, problem: SaddleProblem, weight: Optional[WeightMatrix] = None):
        self.problem = problem
        self.weight = default_weight(problem) if weight is None else weight

    @cached_property
    def v(self) -> VOperator:
        return build_v(self.problem)

    @property
    def V(self) -> np.ndarray:
        return self.v.value

    @cached_property
    def S_V(self) -> np.ndarray:
        B1 = self.problem.B1
        return symmetrize(B1 @ self.V @ B1.T)

    @cached_property
    def augmented(self) -> AugmentedBlock:
        return AugmentedBlock(self.problem.A, self.problem.B2, self.weight)

    @cached_property
    def S_B(self) -> np.ndarray:
        return self.augmented.schur_complement(self.problem.B1)

    @cached_property
    def s_b_factor(self) -> SPDFactorization:
        return _factor_schur(self.S_B, "S_B")

    @cached_property
    def a_inv_b1t_s_inv(self) -> np.ndarray:
        """Ã_W^-1 B1^T S_B^-1"""
        return self.s_b_factor.solve(self.augmented.solve(self.problem.B1.T).T).T

    @cached_property
    def A_hat(self) -> np.ndarray:
        a_inv = self.augmented.factor.inverse()
        return symmetrize(a_inv - self.a_inv_b1t_s_inv @ self.problem.B1 @ a_inv)

    @cached_property
    def S_bar(self) -> np.ndarray:
        B2 = self.problem.B2
        return symmetrize(B2 @ self.A_hat @ B2.T)

    def sbar_residual(self) -> float:
        """||S_bar - W|| / ||W||, small under minimal independence."""
        W = self.weight.value
        norm = fro(W)
        return fro(self.S_bar - W) / norm if norm else 0.0

    def hat_residual(self) -> float:
        """||Ã_W^-1 B2^T - A_hat B2^T|| / ||Ã_W^-1 B2^T||, small under minimal independence."""
        B2t = self.problem.B2.T
        expected = self.augmented.solve(B2t)
        norm = fro(expected)
        return fro(expected - self.A_hat @ B2t) / norm if norm else 0.0


def sbar_residual(problem: SaddleProblem, weight: Optional[WeightMatrix] = None) -> float:
    return ScratchTerms(problem, weight).sbar_residual()


def za_recovery_residual(problem: SaddleProblem, z_a: Optional[NullBasis] = None) -> float:
    """
    With L = B2 Z_A' from build_weight_l, Ã_L^-1 B2^T reproduces the null matrix Z_A'.
    Returns ||Ã_L^-1 B2^T - Z_A'|| / ||Z_A'||.
    """
    weight_l, z_a_prime = build_weight_l(problem, z_a)
    recovered = AugmentedBlock(problem.A, problem.B2, weight_l).solve(problem.B2.T)
    norm = fro(z_a_prime)
    return fro(recovered - z_a_prime) / norm if norm else 0.0


def inv3_augmented(problem: SaddleProblem, weight: Optional[WeightMatrix] = None) -> BlockInverse:
    """
    The inverse of the augmented matrix

        K(W) = [[Ã_W, B1^T, B2^T], [B1, 0, 0], [B2, 0, 0]]

    by bordering [[Ã_W, B1^T], [B1, 0]] with [B2, 0]. No minimal independence
    is assumed, only that S_bar is nonsingular.
    """
    terms = ScratchTerms(problem, weight)
    B2 = problem.B2
    E = terms.a_inv_b1t_s_inv
    a_hat_b2t = terms.A_hat @ B2.T
    e_t_b2t = E.T @ B2.T
    s_bar = _factor_schur(terms.S_bar, "S_bar")

    s13 = s_bar.solve(a_hat_b2t.T).T
    s23 = s_bar.solve(e_t_b2t.T).T
    g11 = symmetrize(terms.A_hat - s13 @ a_hat_b2t.T)
    g12 = E - s13 @ e_t_b2t.T
    g22 = symmetrize(-terms.s_b_factor.inverse() - s23 @ e_t_b2t.T)
    g33 = -s_bar.inverse()
    return BlockInverse(
        [
            [g11, g12, s13],
            [g12.T, g22, s23],
            [s13.T, s23.T, g33],
        ],
        Provenance.AUG_SHIFT,
    )


def augmented_k(problem: SaddleProblem, weight: WeightMatrix) -> np.ndarray:
    """K with A replaced by A + B2^T W^-1 B2."""
    K = problem.K.copy()
    n = problem.n
    K[:n, :n] += problem.B2.T @ weight.solve(problem.B2)
    return K


def _shift_residual(K: np.ndarray, K_w: np.ndarray, w_inv: np.ndarray) -> float:
    dim = K.shape[0]
    k_inv = solve_general(K, np.eye(dim))
    k_w_inv = solve_general(K_w, np.eye(dim))
    shifted = k_inv.copy()
    size = w_inv.shape[0]
    if size:
        shifted[dim - size:, dim - size:] -= w_inv
    norm = fro(k_inv)
    return fro(k_w_inv - shifted) / norm if norm else 0.0


def augmentation_shift_residual(acal: np.ndarray, bcal: np.ndarray, weight: WeightMatrix) -> float:
    """
    Relative residual of [[A + B^T W^-1 B, B^T], [B, 0]]^-1 = [[A, B^T], [B, 0]]^-1 - diag(0, W^-1),
    from two dense inversions.
    """
    acal, bcal = _check_two_block(acal, bcal)
    m = bcal.shape[0]
    K = assemble_blocks([[acal, bcal.T], [bcal, np.zeros((m, m))]])
    K_w = K.copy()
    n = acal.shape[0]
    K_w[:n, :n] += bcal.T @ weight.solve(bcal)
    return _shift_residual(K, K_w, weight.factor.inverse())


def aug_shift_check(problem: SaddleProblem, weight: Optional[WeightMatrix] = None) -> float:
    """
    The same identity for the three-block partition, augmenting by B2 only:
    K(W)^-1 = K^-1 - diag(0, 0, W^-1). Trivially 0.0 when m2 = 0.
    """
    if problem.m2 == 0:
        return 0.0
    if weight is None:
        weight = default_weight(problem)
    return _shift_residual(problem.K, augmented_k(problem, weight), weight.factor.inverse())


def inv3_null_a(
        problem: SaddleProblem,
        z_a: Optional[NullBasis] = None,
        *,
        multiplicative: bool = False,
) -> BlockInverse:
    """
    K^-1 through a basis of ker(A) for minimally independent problems.
    With Z_A', L from build_weight_l, Ã = A + B2^T L^-1 B2 and S_B = B1 Ã^-1 B1^T:

        [[A_hat - Z_A' L^-1 Z_A'^T,  Ã^-1 B1^T S_B^-1,  Z_A' L^-1],
         [S_B^-1 B1 Ã^-1,            -S_B^-1,            0        ],
         [L^-1 Z_A'^T,               0,                  0        ]]

    The leading block is also computed in the multiplicative form
    (I - Ã^-1 B1^T S_B^-1 B1) Ã^-1 (I - B2^T L^-1 Z_A'^T), and the difference
    is recorded in diagnostics. multiplicative=True puts that form in the grid.
    """
    if not problem.is_minimally_independent():
        raise NotMinimallyIndependent(
            "the null space formula needs ker(A) inside ker(B1) and nullity(A) = m2")

    weight_l, z_a_prime = build_weight_l(problem, z_a)
    terms = ScratchTerms(problem, weight_l)
    B1, B2 = problem.B1, problem.B2
    n, m1, m2 = problem.dims

    corner = weight_l.solve(z_a_prime.T).T  # Z_A' L^-1
    E = terms.a_inv_b1t_s_inv
    additive = symmetrize(terms.A_hat - corner @ z_a_prime.T)
    product = (
        (np.eye(n) - E @ B1)
        @ terms.augmented.factor.inverse()
        @ (np.eye(n) - B2.T @ corner.T)
    )
    difference = fro(additive - product) / max(fro(additive), np.finfo(float).tiny)

    leading = product if multiplicative else additive
    provenance = Provenance.NULL_A_MULT if multiplicative else Provenance.NULL_A
    return BlockInverse(
        [
            [leading, E, corner],
            [E.T, -terms.s_b_factor.inverse(), np.zeros((m1, m2))],
            [corner.T, np.zeros((m2, m1)), np.zeros((m2, m2))],
        ],
        provenance,
        {"multiplicative_difference": difference},
    )
