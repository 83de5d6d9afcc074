import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saddleprec.preconditioners import (
    PreconditionerTag, build_p2d, build_p3d, build_p3t, identity_preconditioner,
)
from saddleprec.problems import Regime, generate
from saddleprec.spectrum import (
    GOLDEN_RATIO, cluster_eigenvalues, predicted_spectrum, preconditioned_spectrum,
    geometric_multiplicity, eigenvector_families_p2d, scaling_sweep_p3d, projector_diagnostics,
    spectral_radius,
)
from tests.utils import coordinate_problem, scalar_problem


def centers_and_counts(report):
    return [(round(c.center.real, 6), c.count) for c in report.clusters]


def test_cluster_eigenvalues():
    eigenvalues = np.array([1.0, 1.0 + 1e-9, -1.0, 2.0, 2.0 - 1e-9, 2.0])
    clusters = cluster_eigenvalues(eigenvalues, 1e-6)
    assert [(c.center.real, c.count) for c in clusters] == [
        (-1.0, 1), (pytest.approx(1.0), 2), (pytest.approx(2.0), 3)]
    assert cluster_eigenvalues(np.zeros(0)) == []
    assert len(cluster_eigenvalues(np.array([5.0]))) == 1


def test_cluster_eigenvalues_chains():
    # single linkage joins a chain of close values
    eigenvalues = np.array([0.0, 0.5e-6, 1.0e-6, 1.5e-6])
    assert len(cluster_eigenvalues(eigenvalues, 1e-6)) == 1


def test_spectral_radius():
    assert spectral_radius(np.zeros(0)) == 0.0
    assert spectral_radius(np.array([1.0, -3.0, 2j])) == 3.0


def test_scalar_p2d():
    report = preconditioned_spectrum(scalar_problem(), build_p2d(scalar_problem()))
    assert centers_and_counts(report) == [(-1.0, 1), (1.0, 1)]
    assert report.passed


def test_coordinate_p3d():
    problem = coordinate_problem()
    report = preconditioned_spectrum(problem, build_p3d(problem))
    assert report.passed
    assert centers_and_counts(report) == [(-1.0, 2), (1.0, 1), (2.0, 1)]


@pytest.mark.parametrize("n, m", [(30, 5), (50, 10)])
def test_p2d_spectrum(n, m):
    problem = generate(n, 0, m, Regime.MAX_RANK_DEFICIENT, seed=0)
    report = preconditioned_spectrum(problem, build_p2d(problem))
    assert report.passed
    assert centers_and_counts(report) == [(-1.0, m), (1.0, n)]
    assert report.max_imag <= 1e-8
    for verdict in report.verdicts:
        assert verdict.geometric_multiplicity == verdict.multiplicity


@pytest.mark.parametrize("dims", [(40, 6, 4), (60, 3, 9)])
def test_p3d_spectrum(dims):
    n, m1, m2 = dims
    problem = generate(*dims, Regime.MINIMALLY_INDEPENDENT, seed=0)
    report = preconditioned_spectrum(problem, build_p3d(problem))
    assert report.passed
    assert centers_and_counts(report) == [(-1.0, m1 + m2), (1.0, n - m1), (2.0, m1)]


def test_p3t_spectrum():
    problem = generate(40, 6, 4, Regime.GENERAL, seed=0)
    report = preconditioned_spectrum(problem, build_p3t(problem))
    assert report.passed
    assert centers_and_counts(report) == [
        (round(1 - GOLDEN_RATIO, 6), 6), (1.0, 40 - 6 + 4), (round(GOLDEN_RATIO, 6), 6)]


def test_p3t_records_both_multiplicities():
    problem = generate(40, 6, 4, Regime.GENERAL, seed=0)
    report = preconditioned_spectrum(problem, build_p3t(problem))
    one = [v for v in report.verdicts if v.value == 1.0][0]
    assert one.matched_count == 38
    assert 0 < one.geometric_multiplicity <= one.matched_count


def test_p3t_without_b1_is_a_single_cluster():
    problem = generate(30, 0, 6, Regime.MAX_RANK_DEFICIENT, seed=4)
    report = preconditioned_spectrum(problem, build_p3t(problem))
    assert report.passed
    assert centers_and_counts(report) == [(1.0, 36)]
    assert [(v.value, v.matched_count, v.geometric_multiplicity) for v in report.verdicts] == [(1.0, 36, 36)]


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_spectra_random_seeds(seed):
    deficient = generate(30, 0, 5, Regime.MAX_RANK_DEFICIENT, seed=seed)
    assert centers_and_counts(preconditioned_spectrum(deficient, build_p2d(deficient))) == [(-1.0, 5), (1.0, 30)]

    independent = generate(40, 6, 4, Regime.MINIMALLY_INDEPENDENT, seed=seed)
    report = preconditioned_spectrum(independent, build_p3d(independent))
    assert centers_and_counts(report) == [(-1.0, 10), (1.0, 34), (2.0, 6)]

    general = generate(40, 6, 4, Regime.GENERAL, seed=seed)
    report = preconditioned_spectrum(general, build_p3t(general))
    assert report.passed
    for verdict in report.verdicts:
        assert 0 < verdict.geometric_multiplicity <= verdict.matched_count


def test_not_ideal_has_no_prediction():
    problem = generate(40, 6, 4, Regime.GENERAL, seed=0)
    report = preconditioned_spectrum(problem, build_p3d(problem))
    assert report.predicted is None
    assert report.passed is None
    assert not report.ideal
    assert report.warnings

    report = preconditioned_spectrum(problem, build_p2d(problem))
    assert report.passed is None

    report = preconditioned_spectrum(problem, identity_preconditioner(problem.dims))
    assert report.passed is None


def test_predicted_spectrum_drops_empty_entries():
    problem = generate(10, 0, 3, Regime.MAX_RANK_DEFICIENT, seed=0)
    predicted = predicted_spectrum(PreconditionerTag.P3D, problem, 0.5)
    assert [(p.value, p.multiplicity) for p in predicted] == [(-1.0, 3), (1.0, 10)]
    assert predicted_spectrum(PreconditionerTag.P3D, generate(10, 2, 3, Regime.MINIMALLY_INDEPENDENT), 1.0) is None
    assert predicted_spectrum(PreconditionerTag.IDENTITY, problem, 0.5) is None


def test_geometric_multiplicity():
    matrix = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert geometric_multiplicity(matrix, 1.0) == 2
    assert geometric_multiplicity(np.eye(3), 1.0) == 3
    assert geometric_multiplicity(np.eye(3), 2.0) == 0


def test_geometric_multiplicity_of_pencil():
    matrix = np.diag([2.0, 4.0, 3.0])
    mass = np.diag([1.0, 2.0, 1.0])
    assert geometric_multiplicity(matrix, 2.0, mass=mass) == 2
    assert geometric_multiplicity(matrix, 3.0, mass=mass) == 1
    # a difference made of roundoff only has full nullity
    noise = 1e-14 * np.random.default_rng(0).standard_normal((3, 3))
    assert geometric_multiplicity(matrix, 1.0, mass=matrix + noise) == 3


def test_eigenvector_families():
    problem = generate(30, 0, 5, Regime.MAX_RANK_DEFICIENT, seed=2)
    checks = eigenvector_families_p2d(problem)
    assert all(check.passed for check in checks)
    assert len([c for c in checks if c.family == "minus" and c.should_hold]) == 5
    control = [c for c in checks if not c.should_hold]
    assert len(control) == 1
    assert control[0].residual > 1e-3


@pytest.mark.parametrize("scaling, count", [(0.25, 4), (0.5, 3), (1.0, 4), (2.0, 4)])
def test_scaling_sweep(scaling, count):
    problem = generate(40, 6, 4, Regime.MINIMALLY_INDEPENDENT, seed=0)
    [point] = scaling_sweep_p3d(problem, [scaling])
    assert point.scaling == scaling
    assert point.cluster_count == count


def test_scaling_roots():
    problem = generate(20, 3, 2, Regime.MINIMALLY_INDEPENDENT, seed=1)
    [point] = scaling_sweep_p3d(problem, [1.0])
    centers = sorted(c.real for c in point.centers)
    assert centers == pytest.approx([-1.0, (1 - np.sqrt(5)) / 2, 1.0, (1 + np.sqrt(5)) / 2], abs=1e-6)


@pytest.mark.parametrize("regime", [Regime.MINIMALLY_INDEPENDENT, Regime.MAX_RANK_DEFICIENT])
def test_projector_diagnostics(regime):
    m1 = 0 if regime is Regime.MAX_RANK_DEFICIENT else 5
    problem = generate(30, m1, 4, regime, seed=3)
    diagnostics = projector_diagnostics(problem)
    assert diagnostics.passed
    assert diagnostics.rank_vb1 == m1
    assert diagnostics.rank_sum == m1 + 4
