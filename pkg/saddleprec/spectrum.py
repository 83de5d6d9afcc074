"""
Spectra of preconditioned saddle point matrices, checked against the
eigenvalues and multiplicities each ideal preconditioner predicts.
"""
import logging
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import scipy.cluster.hierarchy

from saddleprec.dense import eig_general, numerical_rank, singular_values, solve_general
from saddleprec.preconditioners import (
    Preconditioner, PreconditionerTag, WeightMatrix, IDEAL_SCALING,
    build_p3d, build_v, default_weight, default_weight_b, AugmentedBlock,
)
from saddleprec.problems import SaddleProblem
from saddleprec.utils import group_by_key_func, fro

log = logging.getLogger(__name__)

GOLDEN_RATIO = (1 + np.sqrt(5)) / 2

DEFAULT_CLUSTER_TOL = 1e-6
GEOMETRIC_RANK_TOL = 1e-8
FAMILY_TOL = 1e-9


class Cluster(NamedTuple):
    """Eigenvalues within the clustering tolerance of each other."""
    center: complex
    radius: float
    count: int


class Prediction(NamedTuple):
    value: float
    multiplicity: int


class PredictionVerdict(NamedTuple):
    """
    How one predicted eigenvalue fared. matched_count is the size of the
    clusters found at the value (0 if none). geometric_multiplicity is
    dim - rank(K - value P), the number of independent eigenvectors, which
    may be smaller than matched_count for a defective operator.
    """
    value: float
    multiplicity: int
    matched_count: int
    geometric_multiplicity: int
    passed: bool


class SpectrumReport(object):
    """
    Attributes:
        - tag: the preconditioner's tag value
        - eigenvalues: complex array of eigenvalues of P^-1 K, sorted
        - clusters: list of Cluster, sorted by center
        - predicted: list of Prediction, or None when the preconditioner
            is not ideal for the problem and nothing is predicted
        - verdicts: one PredictionVerdict per prediction
        - max_imag: max |imag| relative to the spectral radius
        - warnings: copied from the preconditioner
    """

    def __init__(
            self,
            tag: str,
            eigenvalues: np.ndarray,
            clusters: List[Cluster],
            predicted: Optional[List[Prediction]],
            verdicts: List[PredictionVerdict],
            max_imag: float,
            warnings: Optional[List[str]] = None,
    ):
        self.tag = tag
        self.eigenvalues = eigenvalues
        self.clusters = clusters
        self.predicted = predicted
        self.verdicts = verdicts
        self.max_imag = max_imag
        self.warnings = list(warnings or [])

    def __repr__(self):
        return "<{} {} clusters={} passed={}>".format(
            type(self).__name__, self.tag, self.cluster_counts(), self.passed)

    @property
    def ideal(self) -> bool:
        return self.predicted is not None

    @property
    def passed(self) -> Optional[bool]:
        """None when nothing was predicted."""
        if self.predicted is None:
            return None
        return all(v.passed for v in self.verdicts)

    def cluster_counts(self) -> List[int]:
        return [c.count for c in self.clusters]


def spectral_radius(eigenvalues: np.ndarray) -> float:
    if eigenvalues.size == 0:
        return 0.0
    return float(np.abs(eigenvalues).max())


def cluster_eigenvalues(eigenvalues: np.ndarray, tol: float = DEFAULT_CLUSTER_TOL) -> List[Cluster]:
    """
    Single linkage clustering in the complex plane. Two eigenvalues share a
    cluster when a chain of eigenvalues at most tol * max(spectral radius, 1)
    apart connects them.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    if eigenvalues.size == 0:
        return []
    scale = max(spectral_radius(eigenvalues), 1.0)
    if eigenvalues.size == 1:
        labels = [1]
    else:
        points = np.column_stack([eigenvalues.real, eigenvalues.imag]) / scale
        tree = scipy.cluster.hierarchy.linkage(points, method='single')
        labels = scipy.cluster.hierarchy.fcluster(tree, t=tol, criterion='distance')

    groups = group_by_key_func(range(eigenvalues.size), lambda i: int(labels[i]))
    clusters = []
    for indices in groups.values():
        members = eigenvalues[indices]
        center = complex(members.mean())
        clusters.append(Cluster(
            center=center,
            radius=float(np.abs(members - center).max()),
            count=len(indices),
        ))
    return sorted(clusters, key=lambda c: (c.center.real, c.center.imag))


def _table(*pairs) -> List[Prediction]:
    return [Prediction(float(value), int(mult)) for value, mult in pairs if mult > 0]


def predicted_spectrum(
        tag: PreconditionerTag,
        problem: SaddleProblem,
        scaling: float = IDEAL_SCALING,
) -> Optional[List[Prediction]]:
    """
    The eigenvalues of P^-1 K with their multiplicities, or None when the
    preconditioner is not ideal for this problem.

    P2D, nullity(A) = m:            1 (n), -1 (m)
    P3D, minimally independent:     -1 (m1 + m2), 1 (n - m1), 2 (m1)
    P3T, B2 Z_A invertible:         1 (n - m1 + m2), golden ratio (m1), 1 - golden ratio (m1)
    """
    n, m1, m2 = problem.dims
    if tag is PreconditionerTag.P2D:
        if problem.null_a.dimension != problem.m:
            return None
        return _table((-1, problem.m), (1, n))
    if tag is PreconditionerTag.P3D:
        if not problem.is_minimally_independent() or (m1 and scaling != IDEAL_SCALING):
            return None
        return _table((-1, m1 + m2), (1, n - m1), (2, m1))
    if tag is PreconditionerTag.P3T:
        if problem.null_a.dimension != m2:
            return None
        return _table((1 - GOLDEN_RATIO, m1), (1, n - m1 + m2), (GOLDEN_RATIO, m1))
    return None


def geometric_multiplicity(
        matrix: np.ndarray,
        value: float,
        tol: float = GEOMETRIC_RANK_TOL,
        mass: Optional[np.ndarray] = None,
) -> int:
    """
    dim - rank(matrix - value * mass), the number of independent v with
    matrix v = value mass v. mass defaults to the identity.

    Singular values count towards the rank above tol * max(||matrix||, |value| ||mass||),
    so a difference that is pure roundoff has rank 0.
    For a preconditioned matrix pass K and P rather than P^-1 K and I: the
    rank is the same, but K - value P is far better scaled.
    """
    dim = matrix.shape[0]
    if mass is None:
        mass = np.eye(dim)
    scale = max(_norm2(matrix), abs(value) * _norm2(mass))
    if scale == 0:
        return dim
    sigma = singular_values(matrix - value * mass)
    return dim - int(np.sum(sigma > tol * scale))


def _norm2(matrix: np.ndarray) -> float:
    sigma = singular_values(matrix)
    return float(sigma[0]) if sigma.size else 0.0


def preconditioned_matrix(problem: SaddleProblem, preconditioner: Preconditioner) -> np.ndarray:
    """P^-1 K, assembled densely."""
    return preconditioner.apply_inverse(problem.K)


def preconditioned_spectrum(
        problem: SaddleProblem,
        preconditioner: Preconditioner,
        *,
        cluster_tol: float = DEFAULT_CLUSTER_TOL,
        rank_tol: float = GEOMETRIC_RANK_TOL,
) -> SpectrumReport:
    """
    Eigenvalues of P^-1 K for the problem's K, clustered and compared with
    predicted_spectrum. A prediction passes when a cluster lies within
    cluster_tol of the value and holds exactly the predicted count.
    """
    matrix = preconditioned_matrix(problem, preconditioner)
    eigenvalues = eig_general(matrix)
    eigenvalues = eigenvalues[np.lexsort((eigenvalues.imag, eigenvalues.real))]
    clusters = cluster_eigenvalues(eigenvalues, cluster_tol)
    radius = spectral_radius(eigenvalues)
    max_imag = float(np.abs(eigenvalues.imag).max() / radius) if radius else 0.0

    scaling = IDEAL_SCALING if preconditioner.scaling is None else preconditioner.scaling
    predicted = predicted_spectrum(preconditioner.tag, problem, scaling)
    verdicts = []
    if predicted is not None:
        scale = max(radius, 1.0)
        pencil = preconditioner.explicit_matrix()
        for prediction in predicted:
            count = sum(
                c.count for c in clusters if abs(c.center - prediction.value) <= cluster_tol * scale)
            verdicts.append(PredictionVerdict(
                value=prediction.value,
                multiplicity=prediction.multiplicity,
                matched_count=count,
                geometric_multiplicity=geometric_multiplicity(
                    problem.K, prediction.value, rank_tol, mass=pencil),
                passed=count == prediction.multiplicity,
            ))
    else:
        log.info("no prediction for %s on %r, recording the spectrum only", preconditioner.tag.value, problem)

    report = SpectrumReport(
        preconditioner.tag.value, eigenvalues, clusters, predicted, verdicts, max_imag,
        preconditioner.warnings,
    )
    if report.passed is False:
        log.warning("spectrum of %s does not match its prediction: clusters %s",
                    report.tag, [(c.center, c.count) for c in clusters])
    return report


class FamilyCheck(NamedTuple):
    """
    K v = eigenvalue P2D v checked for one eigenvector candidate v built from x.
    should_hold is False for negative controls.
    """
    family: str
    source: str
    eigenvalue: float
    residual: float
    should_hold: bool

    @property
    def passed(self) -> bool:
        return (self.residual <= FAMILY_TOL) == self.should_hold


def eigenvector_families_p2d(
        problem: SaddleProblem,
        weight_b: Optional[WeightMatrix] = None,
        seed: int = 0,
) -> List[FamilyCheck]:
    """
    Checks the two eigenvector families of the block diagonal preconditioner:
    [x; W_B^-1 B x] with eigenvalue 1 for every x, and [x; -W_B^-1 B x]
    with eigenvalue -1 for x in ker(A). A random x used in the second family
    serves as a negative control.
    """
    if weight_b is None:
        weight_b = default_weight_b(problem)
    B = problem.B
    augmented = AugmentedBlock(problem.A, B, weight_b)
    K = problem.K
    n = problem.n
    rng = np.random.default_rng(seed)

    def check(family, source, x, eigenvalue, should_hold):
        y = weight_b.solve(B @ x)
        v = np.concatenate([x, y if eigenvalue > 0 else -y])
        pv = np.concatenate([augmented.value @ v[:n], weight_b.value @ v[n:]])
        residual = fro(K @ v - eigenvalue * pv) / fro(pv)
        return FamilyCheck(family, source, float(eigenvalue), residual, should_hold)

    e1 = np.zeros(n)
    e1[0] = 1.0
    random_x = rng.standard_normal(n)
    checks = [
        check("plus", "e1", e1, 1.0, True),
        check("plus", "random", random_x, 1.0, True),
    ]
    null_basis = problem.null_a.basis
    for k in range(null_basis.shape[1]):
        checks.append(check("minus", "null column {}".format(k), null_basis[:, k], -1.0, True))
    checks.append(check("minus", "random", random_x, -1.0, False))
    return checks


class ScalingPoint(NamedTuple):
    scaling: float
    cluster_count: int
    centers: List[complex]


def scaling_sweep_p3d(
        problem: SaddleProblem,
        scalings: Sequence[float],
        weight: Optional[WeightMatrix] = None,
        *,
        cluster_tol: float = DEFAULT_CLUSTER_TOL,
) -> List[ScalingPoint]:
    """
    Number of distinct eigenvalues of P3D^-1 K with the Schur complement
    block scaled by each factor. Only the counts are reported.
    """
    if weight is None:
        weight = default_weight(problem)
    result = []
    for scaling in scalings:
        preconditioner = build_p3d(problem, weight, scaling=float(scaling))
        eigenvalues = eig_general(preconditioned_matrix(problem, preconditioner))
        clusters = cluster_eigenvalues(eigenvalues, cluster_tol)
        result.append(ScalingPoint(float(scaling), len(clusters), [c.center for c in clusters]))
        log.debug("scaling %s gives %d clusters", scaling, len(clusters))
    return result


class ProjectorDiagnostics(NamedTuple):
    """
    rank_vb1: rank of V B1^T S_V^-1 B1, expected m1
    rank_sum: rank of (I - P1) + 2 P2 with P1 = Ã_W^-1 A and
        P2 = Ã_W^-1 B1^T S_B^-1 B1, expected m1 + m2
    range_inclusion: ||(I - P1) Ã_W^-1 B1^T|| / ||Ã_W^-1 B1^T||,
        small under minimal independence
    """
    rank_vb1: int
    expected_rank_vb1: int
    rank_sum: int
    expected_rank_sum: int
    range_inclusion: float

    @property
    def passed(self) -> bool:
        return (
            self.rank_vb1 == self.expected_rank_vb1
            and self.rank_sum == self.expected_rank_sum
            and self.range_inclusion <= 1e-8
        )


def projector_diagnostics(
        problem: SaddleProblem,
        weight: Optional[WeightMatrix] = None,
        rank_tol: float = GEOMETRIC_RANK_TOL,
) -> ProjectorDiagnostics:
    if weight is None:
        weight = default_weight(problem)
    n, m1, m2 = problem.dims
    A, B1 = problem.A, problem.B1
    eye = np.eye(n)

    V = build_v(problem).value
    s_v = B1 @ V @ B1.T
    v_b1t = V @ B1.T
    projector_v = v_b1t @ solve_general(s_v, B1) if m1 else np.zeros((n, n))

    augmented = AugmentedBlock(A, problem.B2, weight)
    p1 = augmented.solve(A)
    a_inv_b1t = augmented.solve(B1.T)
    if m1:
        p2 = a_inv_b1t @ solve_general(B1 @ a_inv_b1t, B1)
    else:
        p2 = np.zeros((n, n))
    norm = fro(a_inv_b1t)
    inclusion = fro((eye - p1) @ a_inv_b1t) / norm if norm else 0.0

    return ProjectorDiagnostics(
        rank_vb1=numerical_rank(projector_v, rank_tol),
        expected_rank_vb1=m1,
        rank_sum=numerical_rank(eye - p1 + 2 * p2, rank_tol),
        expected_rank_sum=m1 + m2,
        range_inclusion=float(inclusion),
    )
