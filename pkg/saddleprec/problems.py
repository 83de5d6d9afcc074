"""
Saddle point problems with controlled rank structure.

A problem is the 3x3 blocked matrix

    K = [[A,  B1^T, B2^T],
         [B1, 0,    0   ],
         [B2, 0,    0   ]]

with A symmetric positive semidefinite of nullity m2, and B2 chosen so
that [[A, B2^T], [B2, 0]] is invertible.
"""
import json
import logging
import os
from enum import Enum
from typing import NamedTuple, List, Tuple, Optional

import numpy as np
import scipy.io
import scipy.sparse
import scipy.linalg

from saddleprec.dense import (
    as_dense, nullspace, NullBasis, singular_values, DEFAULT_RANK_TOL,
)
from saddleprec.errors import DegenerateDraw, NotSplittable, InvalidDimensions
from saddleprec.utils import assert_, cached_property, fro, assemble_blocks

log = logging.getLogger(__name__)

MAX_RETRIES = 10
BORDER_SINGULAR_RANGE = (1.0, 2.0)
DEFAULT_COND_A = 1e4
NONSINGULAR_TOL = 1e-8
MATRIX_FILES = ("A.mtx", "B1.mtx", "B2.mtx")
MANIFEST_FILE = "manifest.json"


class Regime(Enum):
    """
    The rank structures studied:
    MAX_RANK_DEFICIENT: nullity(A) = m, so every row of B is needed to
        remove the rank deficiency (m1 = 0).
    MINIMALLY_INDEPENDENT: the rows of B1 lie in the row space of A and
        the m2 = nullity(A) rows of B2 lie outside it.
    GENERAL: nullity(A) = m2 and B2 Z_A is invertible, with no assumption on B1.
    """
    MAX_RANK_DEFICIENT = "max-rd"
    MINIMALLY_INDEPENDENT = "min-indep"
    GENERAL = "general"

    @property
    def is_minimally_independent(self) -> bool:
        # maximal rank deficiency is the special case m1 = 0
        return self is not Regime.GENERAL


class RhsVector(NamedTuple):
    """A right-hand side [f; g1; g2] split conformally with K."""
    f: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.f, self.g1, self.g2])

    @classmethod
    def from_stacked(cls, vector: np.ndarray, n: int, m1: int) -> 'RhsVector':
        return cls(vector[:n], vector[n:n + m1], vector[n + m1:])


class SaddleProblem(object):
    """
    A saddle point system with a symmetric positive semidefinite leading block.

    Attributes:
        - A: n x n
        - B1: m1 x n
        - B2: m2 x n
        - regime: a Regime
        - seed: the generator seed, or None for problems read from elsewhere
        - rank_tol: relative singular value cutoff for kernels and ranks
        - cond_a: the condition number A was drawn with, if generated

    Derived quantities (null space bases, K, its singular values) are computed
    lazily and cached. Don't mutate the blocks after construction.
    """

    def __init__(
            self,
            A: np.ndarray,
            B1: np.ndarray,
            B2: np.ndarray,
            regime: Regime = Regime.GENERAL,
            seed: Optional[int] = None,
            *,
            rank_tol: float = DEFAULT_RANK_TOL,
            cond_a: Optional[float] = None,
    ):
        self.A = as_dense(A, "A")
        n = self.A.shape[0]
        self.B1 = as_dense(B1, "B1").reshape(-1, n) if np.size(B1) == 0 else as_dense(B1, "B1")
        self.B2 = as_dense(B2, "B2").reshape(-1, n) if np.size(B2) == 0 else as_dense(B2, "B2")
        assert_(self.A.shape == (n, n), InvalidDimensions("A must be square"))
        assert_(
            self.B1.shape[1] == n and self.B2.shape[1] == n,
            InvalidDimensions("B1 and B2 must have {} columns".format(n)),
        )
        self.regime = regime
        self.seed = seed
        self.rank_tol = rank_tol
        self.cond_a = cond_a

    def __repr__(self):
        return "<{} n={} m1={} m2={} regime={} seed={}>".format(
            type(self).__name__, self.n, self.m1, self.m2, self.regime.value, self.seed)

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    @property
    def m1(self) -> int:
        return int(self.B1.shape[0])

    @property
    def m2(self) -> int:
        return int(self.B2.shape[0])

    @property
    def m(self) -> int:
        return self.m1 + self.m2

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.n, self.m1, self.m2

    @property
    def dimension(self) -> int:
        return self.n + self.m

    @property
    def B(self) -> np.ndarray:
        return np.vstack([self.B1, self.B2])

    @cached_property
    def null_a(self) -> NullBasis:
        return nullspace(self.A, self.rank_tol)

    @cached_property
    def null_b2(self) -> NullBasis:
        return nullspace(self.B2, self.rank_tol)

    @cached_property
    def K(self) -> np.ndarray:
        return assemble_k(self)

    def bordered(self) -> np.ndarray:
        """[[A, B2^T], [B2, 0]]"""
        return assemble_blocks([
            [self.A, self.B2.T],
            [self.B2, np.zeros((self.m2, self.m2))],
        ])

    @cached_property
    def k_singular_values(self) -> np.ndarray:
        return singular_values(self.K)

    @cached_property
    def condition_number(self) -> float:
        sigma = self.k_singular_values
        if sigma.size == 0:
            return 1.0
        if sigma[-1] == 0:
            return float("inf")
        return float(sigma[0] / sigma[-1])

    @property
    def inverse_tolerance(self) -> float:
        """Residual bound for inverse formulas, scaled by the conditioning of K."""
        return 1e-8 * self.condition_number

    def is_nonsingular(self, tol: float = NONSINGULAR_TOL) -> bool:
        sigma = self.k_singular_values
        return bool(sigma.size == 0 or sigma[-1] > tol * sigma[0])

    def kernels_intersect(self) -> bool:
        """Whether ker(A) and ker(B) share a nonzero vector."""
        Z = self.null_a.basis
        if Z.shape[1] == 0:
            return False
        if self.m == 0:
            return True
        sigma = singular_values(self.B @ Z)
        scale = max(fro(self.B), 1.0)
        return bool(sigma.size < Z.shape[1] or sigma[-1] <= self.rank_tol * scale)

    def is_minimally_independent(self, tol: float = 1e-10) -> bool:
        """
        Whether ker(A) is contained in ker(B1) and B2 Z_A is square,
        checked numerically as ||B1 Z_A|| <= tol ||B1||.
        """
        if self.null_a.dimension != self.m2:
            return False
        return fro(self.B1 @ self.null_a.basis) <= tol * max(fro(self.B1), 1.0)

    def validate(self) -> List[str]:
        """Returns descriptions of every violated invariant. Empty means valid."""
        problems = []
        A = self.A
        norm_a = fro(A)
        if fro(A - A.T) > 1e-12 * max(norm_a, 1.0):
            problems.append("A is not symmetric")
        if self.n:
            min_eig = scipy.linalg.eigvalsh((A + A.T) / 2)[0]
            if min_eig < -1e-10 * max(norm_a, 1.0):
                problems.append("A is not positive semidefinite (min eigenvalue {:.3e})".format(min_eig))
        if self.null_a.dimension != self.m2:
            problems.append("nullity(A) = {} but m2 = {}".format(self.null_a.dimension, self.m2))
        if not self.is_nonsingular():
            problems.append("K is singular")
        G = self.B2 @ self.null_a.basis
        if G.shape[0] == G.shape[1]:
            sigma = singular_values(G)
            if sigma.size and sigma[-1] <= NONSINGULAR_TOL * max(sigma[0], 1.0):
                problems.append("B2 Z_A is singular")
        if self.regime.is_minimally_independent and not self.is_minimally_independent():
            problems.append("rows of B1 are not in the range of A")
        if self.regime is Regime.MAX_RANK_DEFICIENT and self.m1:
            problems.append("maximal rank deficiency requires m1 = 0")
        return problems


def assemble_k(problem: SaddleProblem) -> np.ndarray:
    """The (n + m1 + m2) square matrix [[A, B1^T, B2^T], [B1, 0, 0], [B2, 0, 0]]."""
    m1, m2 = problem.m1, problem.m2
    return assemble_blocks([
        [problem.A, problem.B1.T, problem.B2.T],
        [problem.B1, np.zeros((m1, m1)), np.zeros((m1, m2))],
        [problem.B2, np.zeros((m2, m1)), np.zeros((m2, m2))],
    ])


def check_dimensions(n: int, m1: int, m2: int, regime: Regime) -> None:
    assert_(min(n, m1, m2) >= 0, InvalidDimensions("dimensions must be non-negative"))
    assert_(n >= 1, InvalidDimensions("n must be positive"))
    assert_(
        m1 + m2 <= n,
        InvalidDimensions("m1 + m2 = {} exceeds n = {}".format(m1 + m2, n)),
    )
    assert_(
        regime is not Regime.MAX_RANK_DEFICIENT or m1 == 0,
        InvalidDimensions("maximal rank deficiency requires m1 = 0, got m1 = {}".format(m1)),
    )


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0))
    q, r = scipy.linalg.qr(rng.standard_normal((n, n)))
    # fix the signs so that Q is Haar distributed
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def random_bordering(rng: np.random.Generator, m2: int) -> np.ndarray:
    """A random m2 x m2 matrix with singular values in [1, 2]."""
    sigma = rng.uniform(BORDER_SINGULAR_RANGE[0], BORDER_SINGULAR_RANGE[1], m2)
    return (random_orthogonal(rng, m2) * sigma) @ random_orthogonal(rng, m2).T


def _draw(
        rng: np.random.Generator,
        n: int,
        m1: int,
        m2: int,
        regime: Regime,
        cond_a: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    Q = random_orthogonal(rng, n)
    rank = n - m2
    # nonzero eigenvalues spread geometrically over [1/cond_a, 1]
    d = np.geomspace(1.0, 1.0 / cond_a, rank) if rank else np.zeros(0)
    range_a, z_a = Q[:, :rank], Q[:, rank:]
    A = (range_a * d) @ range_a.T
    A = (A + A.T) / 2

    R = random_bordering(rng, m2)
    S = rng.standard_normal((m2, n))
    B2 = R @ z_a.T + S @ (np.eye(n) - z_a @ z_a.T)

    if regime is Regime.GENERAL:
        B1 = rng.standard_normal((m1, n))
    else:
        B1 = rng.standard_normal((m1, n)) @ A
    return A, B1, B2


def generate(
        n: int,
        m1: int,
        m2: int,
        regime: Regime = Regime.GENERAL,
        seed: int = 0,
        *,
        cond_a: float = DEFAULT_COND_A,
        rank_tol: float = DEFAULT_RANK_TOL,
) -> SaddleProblem:
    """
    Draws a problem with nullity(A) = m2 and the requested regime.

    A = Q diag(d, 0) Q^T with a random orthogonal Q and nonzero eigenvalues
    spread over [1/cond_a, 1]. B2 = R Z_A^T + S (I - Z_A Z_A^T) gives
    B2 Z_A = R, and R is drawn with singular values in [1, 2]. In the
    minimally independent regime B1 = C A for a random C, otherwise B1 is
    a random matrix.

    Draws that fail validation are retried from the same random stream,
    up to MAX_RETRIES times, after which DegenerateDraw is raised.
    The same arguments always give the same problem.
    """
    check_dimensions(n, m1, m2, regime)
    rng = np.random.default_rng(seed)
    failures = []
    for attempt in range(MAX_RETRIES):
        A, B1, B2 = _draw(rng, n, m1, m2, regime, cond_a)
        problem = SaddleProblem(A, B1, B2, regime, seed, rank_tol=rank_tol, cond_a=cond_a)
        failures = problem.validate()
        if not failures:
            if attempt:
                log.debug("seed %d needed %d redraws", seed, attempt)
            return problem
        log.debug("rejected draw %d for seed %d: %s", attempt, seed, "; ".join(failures))

    raise DegenerateDraw(
        "no valid problem after {} draws (n={}, m1={}, m2={}, {}, seed={}): {}".format(
            MAX_RETRIES, n, m1, m2, regime.value, seed, "; ".join(failures))
    )


def random_rhs(problem: SaddleProblem, seed: int = 0) -> RhsVector:
    rng = np.random.default_rng(seed)
    return RhsVector(
        rng.standard_normal(problem.n),
        rng.standard_normal(problem.m1),
        rng.standard_normal(problem.m2),
    )


class SplitResult(NamedTuple):
    """
    B1 and B2 from split_b, and the row permutation such that
    B[permutation] == vstack([B1, B2]).
    """
    B1: np.ndarray
    B2: np.ndarray
    permutation: np.ndarray


def split_b(A: np.ndarray, B: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> SplitResult:
    """
    Chooses nullity(A) rows of B as B2 so that B2 Z_A is invertible.

    The pivots of a column pivoted QR factorization of Z_A^T B^T pick the
    rows with the most independent projections onto ker(A). Both B1 and B2
    keep the original relative order of their rows.
    """
    A = as_dense(A, "A")
    B = as_dense(B, "B")
    m = B.shape[0]
    z_a = nullspace(A, tol).basis
    m2 = z_a.shape[1]

    if m2 > m:
        raise NotSplittable(
            "nullity(A) = {} exceeds the {} rows of B, so K is singular".format(m2, m))
    if m2 == 0:
        return SplitResult(B.copy(), np.zeros((0, B.shape[1])), np.arange(m))

    projections = z_a.T @ B.T
    _, r, pivots = scipy.linalg.qr(projections, mode='economic', pivoting=True)
    diagonal = np.abs(np.diag(r))
    if diagonal.size < m2 or diagonal[0] == 0 or diagonal[m2 - 1] <= tol * max(diagonal[0], fro(B)):
        raise NotSplittable(
            "fewer than {} rows of B have independent components in ker(A), so K is singular".format(m2))

    b2_rows = np.sort(pivots[:m2])
    b1_rows = np.setdiff1d(np.arange(m), b2_rows)
    permutation = np.concatenate([b1_rows, b2_rows])
    return SplitResult(B[b1_rows], B[b2_rows], permutation)


def shuffle_rows(B: np.ndarray, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (B[order], order) for a random order."""
    order = np.random.default_rng(seed).permutation(B.shape[0])
    return B[order], order


def write_matrix(path: str, matrix: np.ndarray) -> None:
    """Writes a dense Matrix Market file (array, real, general)."""
    if matrix.size == 0:
        # an empty coordinate file records the shape
        scipy.io.mmwrite(path, scipy.sparse.coo_matrix(matrix.shape), field='real', symmetry='general')
        return
    scipy.io.mmwrite(path, matrix, field='real', precision=17, symmetry='general')


def read_matrix(path: str, shape: Tuple[int, int]) -> np.ndarray:
    if 0 in shape:
        return np.zeros(shape)
    return np.asarray(scipy.io.mmread(path), dtype=np.float64).reshape(shape)


def write_problem(problem: SaddleProblem, directory: str) -> List[str]:
    """
    Writes A.mtx, B1.mtx, B2.mtx and then manifest.json into directory.
    Returns the paths written, manifest last.
    """
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, block in zip(MATRIX_FILES, (problem.A, problem.B1, problem.B2)):
        path = os.path.join(directory, name)
        write_matrix(path, block)
        paths.append(path)

    from saddleprec.serializing import Serializer
    manifest_path = os.path.join(directory, MANIFEST_FILE)
    Serializer().write_json(Serializer().format_problem(problem, paths), manifest_path)
    paths.append(manifest_path)
    return paths


def read_problem(directory: str, *, rank_tol: float = DEFAULT_RANK_TOL) -> SaddleProblem:
    with open(os.path.join(directory, MANIFEST_FILE)) as f:
        manifest = json.load(f)
    n, m1, m2 = manifest["n"], manifest["m1"], manifest["m2"]
    A, B1, B2 = (
        read_matrix(os.path.join(directory, name), shape)
        for name, shape in zip(MATRIX_FILES, [(n, n), (m1, n), (m2, n)])
    )
    return SaddleProblem(
        A, B1, B2,
        Regime(manifest["regime"]),
        manifest.get("seed"),
        rank_tol=rank_tol,
        cond_a=manifest.get("cond_a"),
    )
