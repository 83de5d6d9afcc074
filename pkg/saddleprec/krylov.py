"""
Preconditioned MINRES and GMRES on dense operators, recording both the
residual the recurrence tracks and the true residual ||b - K x|| at every
iteration. Both start from a zero initial guess and stop as soon as the
true residual is at most tol * ||b||.

A run is made of cycles. The first cycle solves K x = b. When a cycle has
driven its recurrence residual far below the tolerance, or its Krylov space
has closed, while the true residual still misses the tolerance, the next
cycle solves for a correction from the recomputed residual b - K x.
At most MAX_REFINEMENTS such correction cycles are run.
"""
import logging
from enum import Enum
from typing import Callable, Iterator, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from saddleprec.errors import PreconditionerNotSPD, Stagnation
from saddleprec.preconditioners import Preconditioner
from saddleprec.problems import RhsVector
from saddleprec.utils import assert_

log = logging.getLogger(__name__)

Operator = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]

DEFAULT_TOL = 1e-10
MAX_REFINEMENTS = 2

# a cycle ends once its recurrence residual is this fraction of tol times its start
CYCLE_REDUCTION = 1e-2


class SolverKind(Enum):
    MINRES = "minres"
    GMRES = "gmres"


class SolveLog(object):
    """
    Attributes:
        - solver: a SolverKind
        - preconditioner_tag: the preconditioner's tag value, or "none"
        - tol: the relative tolerance on the true residual
        - rhs_norm: ||b||
        - precond_residuals: residual norms from the recurrence, starting at iteration 0
        - true_residuals: ||b - K x_k|| for the same iterations
        - restarts: iterations after which a correction cycle started
        - converged: whether the last true residual met the tolerance

    Every row after the first is one Krylov iteration, whichever cycle it
    belongs to, so iterations counts the work of all cycles.
    """

    def __init__(self, solver: SolverKind, preconditioner_tag: str, tol: float, rhs_norm: float):
        self.solver = solver
        self.preconditioner_tag = preconditioner_tag
        self.tol = tol
        self.rhs_norm = rhs_norm
        self.precond_residuals = []  # type: List[float]
        self.true_residuals = []  # type: List[float]
        self.restarts = []  # type: List[int]
        self.converged = False

    def __repr__(self):
        return "<{} {} {} iterations={} converged={}>".format(
            type(self).__name__, self.solver.value, self.preconditioner_tag,
            self.iterations, self.converged)

    @property
    def iterations(self) -> int:
        return len(self.true_residuals) - 1

    @property
    def residual_history(self) -> List[Tuple[float, float]]:
        return list(zip(self.precond_residuals, self.true_residuals))

    @property
    def final_residual(self) -> float:
        return self.true_residuals[-1]

    @property
    def relative_residual(self) -> float:
        return self.final_residual / self.rhs_norm if self.rhs_norm else self.final_residual

    def record(self, precond_residual: float, true_residual: float) -> bool:
        """Appends one iteration and returns whether it converged."""
        self.precond_residuals.append(float(precond_residual))
        self.true_residuals.append(float(true_residual))
        self.converged = bool(true_residual <= self.tol * self.rhs_norm)
        return self.converged

    def start_cycle(self) -> None:
        self.restarts.append(self.iterations)

    def cycles(self) -> List[List[float]]:
        """The preconditioned residuals split by cycle. Each one is non-increasing."""
        bounds = [0] + [i + 1 for i in self.restarts] + [len(self.precond_residuals)]
        return [self.precond_residuals[start:end] for start, end in zip(bounds, bounds[1:])]

    def rows(self) -> Iterator[Tuple[int, float, float]]:
        """(iter, precond_resid, true_resid) for each recorded iteration."""
        for i, (precond, true) in enumerate(self.residual_history):
            yield i, precond, true


def as_operator(K: Operator) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(K, np.ndarray):
        return K.dot
    assert_(callable(K), TypeError("K must be an array or a callable"))
    return K


def _prepare(
        K: Operator,
        rhs: Union[RhsVector, np.ndarray],
        preconditioner: Optional[Preconditioner],
):
    b = rhs.stacked() if isinstance(rhs, RhsVector) else np.asarray(rhs, dtype=np.float64)
    matvec = as_operator(K)
    if preconditioner is None:
        apply_pre = np.copy
        tag = "none"
    else:
        apply_pre = preconditioner.apply_inverse
        tag = preconditioner.tag.value
    return b, matvec, apply_pre, tag


def _run_cycles(cycle, b: np.ndarray, matvec, solve_log: SolveLog, maxit: int, tag: str) -> np.ndarray:
    x = np.zeros(b.shape[0])
    residual = b.copy()
    for refinement in range(MAX_REFINEMENTS + 1):
        if refinement:
            residual = b - matvec(x)
            solve_log.start_cycle()
            log.debug("%s with %s: correction cycle %d after %d iterations (relative residual %.3e)",
                      solve_log.solver.value, tag, refinement, solve_log.iterations,
                      solve_log.relative_residual)
        x = cycle(x, residual)
        if solve_log.converged or solve_log.iterations >= maxit:
            break

    if not solve_log.converged:
        log.warning("%s with %s did not converge in %d iterations (relative residual %.3e)",
                    solve_log.solver.value.upper(), tag, solve_log.iterations, solve_log.relative_residual)
    return x


def minres(
        K: Operator,
        preconditioner: Optional[Preconditioner],
        rhs: Union[RhsVector, np.ndarray],
        tol: float = DEFAULT_TOL,
        maxit: Optional[int] = None,
) -> Tuple[np.ndarray, SolveLog]:
    """
    Preconditioned MINRES for symmetric K and a symmetric positive definite
    preconditioner. The Lanczos process runs in the inner product defined
    by P^-1, so the recorded preconditioned residual is ||b - K x||_{P^-1}.

    Raises PreconditionerNotSPD for a block triangular preconditioner, or when
    <P^-1 v, v> turns out negative.
    """
    if preconditioner is not None and not preconditioner.tag.is_spd:
        raise PreconditionerNotSPD(
            "MINRES needs a symmetric positive definite preconditioner, got {}".format(
                preconditioner.tag.value))
    b, matvec, apply_pre, tag = _prepare(K, rhs, preconditioner)
    dim = b.shape[0]
    if maxit is None:
        maxit = dim

    rhs_norm = float(np.linalg.norm(b))
    solve_log = SolveLog(SolverKind.MINRES, tag, tol, rhs_norm)
    if rhs_norm == 0:
        solve_log.record(0.0, 0.0)
        return np.zeros(dim), solve_log

    def inner_sqrt(z_vec, v_vec):
        value = float(np.dot(z_vec, v_vec))
        if value < -1e-14 * float(np.linalg.norm(z_vec) * np.linalg.norm(v_vec)):
            raise PreconditionerNotSPD("<P^-1 v, v> = {:.3e} is negative".format(value))
        return np.sqrt(max(value, 0.0))

    def cycle(x0: np.ndarray, residual: np.ndarray) -> np.ndarray:
        u = x0.copy()
        v = residual.copy()
        z = apply_pre(v)
        gamma = inner_sqrt(z, v)
        if not solve_log.true_residuals:
            solve_log.record(gamma, rhs_norm)
        if gamma == 0:
            return u
        z = z / gamma
        v = v / gamma
        res_norm = gamma
        floor = CYCLE_REDUCTION * tol * gamma

        v_old = np.zeros(dim)
        w = np.zeros(dim)
        w_old = np.zeros(dim)
        eta_old = gamma
        c_old = c = 1.0
        s_old = s = 0.0

        while solve_log.iterations < maxit:
            mz = matvec(z)
            delta = float(np.dot(mz, z))
            v_new = mz - delta * v - gamma * v_old
            z_new = apply_pre(v_new)
            gamma_new = inner_sqrt(z_new, v_new)
            if gamma_new > 0:
                z_new = z_new / gamma_new
                v_new = v_new / gamma_new

            alpha0 = c * delta - c_old * s * gamma
            alpha1 = np.hypot(alpha0, gamma_new)
            alpha2 = s * delta + c_old * c * gamma
            alpha3 = s_old * gamma
            if alpha1 == 0:
                break

            c_new = alpha0 / alpha1
            s_new = gamma_new / alpha1

            w_new = (z - alpha3 * w_old - alpha2 * w) / alpha1
            u = u + c_new * eta_old * w_new
            eta = -s_new * eta_old

            res_norm = abs(s_new) * res_norm
            true_res = float(np.linalg.norm(b - matvec(u)))
            if solve_log.record(res_norm, true_res):
                break
            if gamma_new == 0 or res_norm <= floor:
                # nothing left for this Lanczos process to reduce
                break

            v_old, v = v, v_new
            w_old, w = w, w_new
            z = z_new
            eta_old = eta
            s_old, s = s, s_new
            c_old, c = c, c_new
            gamma = gamma_new
        return u

    x = _run_cycles(cycle, b, matvec, solve_log, maxit, tag)
    return x, solve_log


def _givens(a: float, b: float) -> Tuple[float, float]:
    if b == 0:
        return 1.0, 0.0
    r = np.hypot(a, b)
    return a / r, b / r


def gmres(
        K: Operator,
        preconditioner: Optional[Preconditioner],
        rhs: Union[RhsVector, np.ndarray],
        tol: float = DEFAULT_TOL,
        maxit: Optional[int] = None,
) -> Tuple[np.ndarray, SolveLog]:
    """
    Full (unrestarted) GMRES applied to P^-1 K x = P^-1 b.

    The Arnoldi basis is built with modified Gram-Schmidt and one
    reorthogonalization pass. The recorded preconditioned residual is
    ||P^-1 (b - K x)||, which never increases within a cycle. An Arnoldi
    breakdown means the preconditioned system is solved on the Krylov space,
    so it ends the cycle.

    Raises Stagnation if the projected Hessenberg matrix turns singular,
    which happens when K is singular on the Krylov space.
    """
    b, matvec, apply_pre, tag = _prepare(K, rhs, preconditioner)
    dim = b.shape[0]
    if maxit is None:
        maxit = dim

    rhs_norm = float(np.linalg.norm(b))
    solve_log = SolveLog(SolverKind.GMRES, tag, tol, rhs_norm)
    if rhs_norm == 0:
        solve_log.record(0.0, 0.0)
        return np.zeros(dim), solve_log

    def cycle(x0: np.ndarray, residual: np.ndarray) -> np.ndarray:
        r0 = apply_pre(residual)
        beta = float(np.linalg.norm(r0))
        if not solve_log.true_residuals:
            solve_log.record(beta, rhs_norm)
        if beta == 0:
            return x0
        floor = CYCLE_REDUCTION * tol * beta
        size = max(maxit - solve_log.iterations, 0)

        basis = np.zeros((dim, size + 1))
        hessenberg = np.zeros((size + 1, size))
        cosines = np.zeros(size)
        sines = np.zeros(size)
        g = np.zeros(size + 1)
        g[0] = beta
        basis[:, 0] = r0 / beta
        x = x0

        for j in range(size):
            w = apply_pre(matvec(basis[:, j]))
            norm_w = float(np.linalg.norm(w))
            for _ in range(2):
                for i in range(j + 1):
                    h = float(np.dot(basis[:, i], w))
                    hessenberg[i, j] += h
                    w = w - h * basis[:, i]
            h_next = float(np.linalg.norm(w))
            hessenberg[j + 1, j] = h_next

            for i in range(j):
                upper, lower = hessenberg[i, j], hessenberg[i + 1, j]
                hessenberg[i, j] = cosines[i] * upper + sines[i] * lower
                hessenberg[i + 1, j] = -sines[i] * upper + cosines[i] * lower
            cosines[j], sines[j] = _givens(hessenberg[j, j], hessenberg[j + 1, j])
            hessenberg[j, j] = cosines[j] * hessenberg[j, j] + sines[j] * hessenberg[j + 1, j]
            hessenberg[j + 1, j] = 0.0
            g[j + 1] = -sines[j] * g[j]
            g[j] = cosines[j] * g[j]

            if abs(hessenberg[j, j]) <= np.finfo(float).eps * max(norm_w, 1.0):
                raise Stagnation(
                    "GMRES with {} found K singular on the Krylov space after {} iterations".format(
                        tag, solve_log.iterations + 1))
            y = scipy.linalg.solve_triangular(hessenberg[:j + 1, :j + 1], g[:j + 1])
            x = x0 + basis[:, :j + 1] @ y
            true_res = float(np.linalg.norm(b - matvec(x)))
            if solve_log.record(abs(g[j + 1]), true_res):
                break
            if h_next <= np.finfo(float).eps * max(norm_w, 1.0) or abs(g[j + 1]) <= floor:
                log.debug("GMRES with %s: Krylov space exhausted after %d iterations",
                          tag, solve_log.iterations)
                break
            basis[:, j + 1] = w / h_next
        return x

    x = _run_cycles(cycle, b, matvec, solve_log, maxit, tag)
    return x, solve_log
