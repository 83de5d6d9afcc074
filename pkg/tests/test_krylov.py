import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saddleprec.errors import PreconditionerNotSPD, Stagnation
from saddleprec.krylov import minres, gmres, SolverKind, SolveLog
from saddleprec.preconditioners import (
    BlockDiagonalPreconditioner, PreconditionerTag, build_p2d, build_p3d, build_p3t,
    identity_preconditioner,
)
from saddleprec.dense import factor_spd
from saddleprec.problems import Regime, generate, random_rhs
from saddleprec.utils import fro

# ideal preconditioners give at most 3 distinct eigenvalues, plus slack for roundoff
MINRES_P2D_ITERATIONS = 4
MINRES_P3D_ITERATIONS = 5
GMRES_P3T_ITERATIONS = 5


def check_solution(problem, x, solve_log):
    b = solve_log.rhs_norm
    assert solve_log.converged
    assert np.linalg.norm(problem.K @ x - random_rhs(problem, 0).stacked()) <= 1e-10 * b
    assert solve_log.relative_residual <= 1e-10
    assert len(solve_log.precond_residuals) == len(solve_log.true_residuals) == solve_log.iterations + 1


@pytest.mark.parametrize("dims", [(30, 0, 5), (50, 0, 10)])
def test_minres_p2d(dims):
    problem = generate(*dims, Regime.MAX_RANK_DEFICIENT, seed=0)
    x, solve_log = minres(problem.K, build_p2d(problem), random_rhs(problem, 0))
    check_solution(problem, x, solve_log)
    assert solve_log.solver is SolverKind.MINRES
    assert solve_log.iterations <= MINRES_P2D_ITERATIONS


@pytest.mark.parametrize("dims", [(40, 6, 4), (60, 3, 9)])
def test_minres_p3d(dims):
    problem = generate(*dims, Regime.MINIMALLY_INDEPENDENT, seed=0)
    x, solve_log = minres(problem.K, build_p3d(problem), random_rhs(problem, 0))
    check_solution(problem, x, solve_log)
    assert solve_log.iterations <= MINRES_P3D_ITERATIONS


@pytest.mark.parametrize("regime", [Regime.GENERAL, Regime.MINIMALLY_INDEPENDENT])
def test_gmres_p3t(regime):
    problem = generate(40, 6, 4, regime, seed=0)
    x, solve_log = gmres(problem.K, build_p3t(problem), random_rhs(problem, 0))
    check_solution(problem, x, solve_log)
    assert solve_log.solver is SolverKind.GMRES
    assert solve_log.iterations <= GMRES_P3T_ITERATIONS


def test_gmres_p3t_without_b1():
    # the preconditioned matrix has the single eigenvalue 1
    problem = generate(20, 0, 4, Regime.MAX_RANK_DEFICIENT, seed=1)
    x, solve_log = gmres(problem.K, build_p3t(problem), random_rhs(problem, 0))
    check_solution(problem, x, solve_log)
    assert solve_log.iterations <= 2


def assert_monotone_cycles(solve_log):
    for history in solve_log.cycles():
        assert all(b <= a * (1 + 1e-12) for a, b in zip(history, history[1:]))


def test_preconditioned_residual_is_monotone():
    problem = generate(40, 6, 4, Regime.GENERAL, seed=3)
    _, solve_log = gmres(problem.K, build_p3t(problem), random_rhs(problem, 0))
    assert solve_log.converged
    assert_monotone_cycles(solve_log)

    problem = generate(40, 6, 4, Regime.MINIMALLY_INDEPENDENT, seed=3)
    _, solve_log = minres(problem.K, build_p3d(problem), random_rhs(problem, 0))
    assert solve_log.converged
    assert_monotone_cycles(solve_log)


def test_minres_rejects_p3t():
    problem = generate(10, 2, 2, Regime.GENERAL, seed=0)
    with pytest.raises(PreconditionerNotSPD):
        minres(problem.K, build_p3t(problem), random_rhs(problem, 0))


def test_minres_rejects_indefinite_preconditioner():
    problem = generate(6, 1, 1, Regime.GENERAL, seed=0)
    values = np.ones(problem.dimension)
    values[0] = -1.0
    factor = factor_spd(np.eye(problem.dimension))
    # a block diagonal preconditioner whose factor lies about definiteness
    factor.solve = lambda rhs: values * rhs if rhs.ndim == 1 else values[:, None] * rhs
    preconditioner = BlockDiagonalPreconditioner(PreconditionerTag.IDENTITY, problem.dims, [factor])
    rhs = np.zeros(problem.dimension)
    rhs[0] = 1.0
    with pytest.raises(PreconditionerNotSPD):
        minres(problem.K, preconditioner, rhs)


def test_zero_rhs():
    problem = generate(6, 1, 1, Regime.GENERAL, seed=0)
    for solver in [minres, gmres]:
        x, solve_log = solver(problem.K, None, np.zeros(problem.dimension))
        assert not x.any()
        assert solve_log.converged
        assert solve_log.iterations == 0


def test_unpreconditioned_iteration_cap():
    problem = generate(40, 6, 4, Regime.GENERAL, seed=0)
    rhs = random_rhs(problem, 0)
    for solver in [minres, gmres]:
        _, solve_log = solver(problem.K, identity_preconditioner(problem.dims), rhs, maxit=3)
        assert not solve_log.converged
        assert solve_log.iterations == 3


def test_callable_operator():
    problem = generate(12, 2, 2, Regime.MINIMALLY_INDEPENDENT, seed=0)
    K = problem.K
    x, solve_log = minres(lambda v: K @ v, build_p3d(problem), random_rhs(problem, 0))
    assert solve_log.converged


def test_gmres_stagnation():
    # K is singular and b is not in its range, so the Krylov space closes
    # without reaching the tolerance
    K = np.diag([1.0, 0.0])
    with pytest.raises(Stagnation):
        gmres(K, None, np.array([1.0, 1.0]))


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_minres_p3d_random_seeds(seed):
    problem = generate(20, 3, 4, Regime.MINIMALLY_INDEPENDENT, seed=seed)
    _, solve_log = minres(problem.K, build_p3d(problem), random_rhs(problem, seed))
    assert solve_log.converged
    assert solve_log.iterations <= MINRES_P3D_ITERATIONS


def test_solve_log_rows():
    solve_log = SolveLog(SolverKind.GMRES, "p3t", 1e-10, 2.0)
    assert not solve_log.record(1.0, 2.0)
    assert solve_log.record(1e-12, 1e-12)
    assert list(solve_log.rows()) == [(0, 1.0, 2.0), (1, 1e-12, 1e-12)]
    assert solve_log.iterations == 1
    assert solve_log.relative_residual == 5e-13


def test_solve_log_cycles():
    solve_log = SolveLog(SolverKind.MINRES, "p3d", 1e-10, 1.0)
    for value in [1.0, 1e-3, 1e-14]:
        solve_log.record(value, value)
    solve_log.start_cycle()
    for value in [1e-12, 1e-16]:
        solve_log.record(value, value)
    assert solve_log.restarts == [2]
    assert solve_log.cycles() == [[1.0, 1e-3, 1e-14], [1e-12, 1e-16]]
    assert solve_log.iterations == 4


def test_gmres_stops_when_krylov_space_closes():
    # the Krylov space of diag(1, 2, 3) and [1, 1, 0] closes after two steps
    K = np.diag([1.0, 2.0, 3.0])
    x, solve_log = gmres(K, None, np.array([1.0, 1.0, 0.0]))
    assert solve_log.converged
    assert solve_log.iterations == 2
    assert np.allclose(x, [1.0, 0.5, 0.0])


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_minres_p2d_random_seeds(seed):
    problem = generate(50, 0, 10, Regime.MAX_RANK_DEFICIENT, seed=seed)
    _, solve_log = minres(problem.K, build_p2d(problem), random_rhs(problem, seed))
    assert solve_log.converged
    assert solve_log.iterations <= MINRES_P2D_ITERATIONS


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_minres_p3d_large_random_seeds(seed):
    problem = generate(60, 3, 9, Regime.MINIMALLY_INDEPENDENT, seed=seed)
    _, solve_log = minres(problem.K, build_p3d(problem), random_rhs(problem, seed))
    assert solve_log.converged
    assert solve_log.iterations <= MINRES_P3D_ITERATIONS


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_gmres_p3t_random_seeds(seed):
    problem = generate(40, 6, 4, Regime.GENERAL, seed=seed)
    x, solve_log = gmres(problem.K, build_p3t(problem), random_rhs(problem, seed))
    assert solve_log.converged
    assert solve_log.iterations <= GMRES_P3T_ITERATIONS
    assert np.linalg.norm(random_rhs(problem, seed).stacked() - problem.K @ x) <= 1e-10 * solve_log.rhs_norm


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_p3t_is_exact_without_b1(seed):
    problem = generate(30, 0, 6, Regime.MAX_RANK_DEFICIENT, seed=seed)
    preconditioner = build_p3t(problem)
    product = preconditioner.apply_inverse(problem.K)
    assert fro(product - np.eye(problem.dimension)) <= 1e-9 * np.sqrt(problem.dimension)
    _, solve_log = gmres(problem.K, preconditioner, random_rhs(problem, seed))
    assert solve_log.converged
    assert solve_log.iterations <= 2
