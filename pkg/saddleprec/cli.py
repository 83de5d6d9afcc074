"""
Command line workbench: generate problems, check spectra, run solves and
verify the inverse formulas, writing JSON/CSV reports and a run manifest.

    saddleprec generate --n 40 --m1 6 --m2 4 --regime min-indep --seed 7 -o out/
    saddleprec spectrum --problem out/ --precond p3d,p3t -o out/spectrum/

Exit codes: 0 success, 2 configuration error, 3 generation failure,
4 verification failure, 5 solver did not converge.
"""
import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
import scipy.io

from saddleprec.errors import (
    SaddlePrecError, ConfigError, InvalidDimensions, DegenerateDraw, Stagnation,
    PreconditionerNotSPD,
)
from saddleprec.formatting import Formatter
from saddleprec.inverses import (
    inv3_direct, inv3_null_b2, inv3_null_a, inv3_augmented, aug_shift_check,
    sbar_residual, za_recovery_residual, ScratchTerms,
)
from saddleprec.krylov import minres, gmres
from saddleprec.preconditioners import (
    PreconditionerTag, WeightKind, WeightMatrix, Preconditioner, build_p2d, build_p3d,
    build_p3t, identity_preconditioner, schur_identity_residual, projector_pa, LemmaChecks,
)
from saddleprec.dense import verify_projector
from saddleprec.problems import (
    Regime, SaddleProblem, generate, read_problem, write_problem, random_rhs,
    check_dimensions, split_b, shuffle_rows, DEFAULT_COND_A,
)
from saddleprec.serializing import Serializer, library_version
from saddleprec.spectrum import (
    preconditioned_spectrum, eigenvector_families_p2d, scaling_sweep_p3d, projector_diagnostics,
)
from saddleprec.utils import file_checksum, fro, relative_difference

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_VERIFICATION = 4
EXIT_NO_CONVERGENCE = 5

THREADS_ENV = "SADDLEPREC_THREADS"


class Tolerances:
    """
    rank_tol decides numerical rank and null spaces, cluster_tol groups
    eigenvalues, solve_tol is the relative true residual Krylov solvers
    stop at, and identity_tol bounds the residuals of exact identities.
    """

    def __init__(
            self, *,
            rank_tol: float = 1e-10,
            cluster_tol: float = 1e-6,
            solve_tol: float = 1e-10,
            identity_tol: float = 1e-9,
    ):
        self.rank_tol = rank_tol
        self.cluster_tol = cluster_tol
        self.solve_tol = solve_tol
        self.identity_tol = identity_tol

    def __repr__(self):
        keys = sorted(self.__dict__)
        items = ("{}={!r}".format(k, self.__dict__[k]) for k in keys)
        return "{}({})".format(type(self).__name__, ", ".join(items))

    def as_dict(self) -> dict:
        return {k: self.__dict__[k] for k in sorted(self.__dict__)}


class WeightSpec:
    """
    A weight given on the command line: "identity", "diag:1,2,3" or
    "file:<path>" naming a Matrix Market file.
    """

    def __init__(self, text: str = "identity"):
        self.text = text
        if text == "identity":
            self.kind = "identity"
            self.values = None
            self.path = None
        elif text.startswith("diag:"):
            self.kind = "diag"
            try:
                self.values = [float(v) for v in text[len("diag:"):].split(",")]
            except ValueError:
                raise ConfigError("invalid diagonal weight {!r}".format(text))
            self.path = None
        elif text.startswith("file:"):
            self.kind = "file"
            self.values = None
            self.path = text[len("file:"):]
        else:
            raise ConfigError("weight must be identity, diag:<values> or file:<path>, got {!r}".format(text))

    def __repr__(self):
        return "WeightSpec({!r})".format(self.text)

    def build(self, kind: WeightKind, size: int) -> WeightMatrix:
        if self.kind == "identity":
            return WeightMatrix.identity(kind, size)
        if self.kind == "diag":
            if len(self.values) != size:
                raise ConfigError("{} needs {} diagonal values, got {}".format(kind.value, size, len(self.values)))
            return WeightMatrix.diagonal(kind, self.values)
        if not os.path.exists(self.path):
            raise ConfigError("weight file {} does not exist".format(self.path))
        value = scipy.io.mmread(self.path)
        if hasattr(value, "toarray"):
            value = value.toarray()
        value = np.asarray(value, dtype=np.float64)
        if value.shape != (size, size):
            raise ConfigError("{} must be {}x{}, file has shape {}".format(kind.value, size, size, value.shape))
        return WeightMatrix(kind, value)


def parse_list(text: str, convert: Callable, what: str) -> list:
    try:
        return [convert(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigError("invalid {} list {!r}".format(what, text))


class ExperimentConfig:
    """
    Everything one workbench run needs, built from the command line and
    validated once.
    """

    def __init__(
            self, *,
            command: str,
            n: int = 40,
            m1: int = 6,
            m2: int = 4,
            regime: Regime = Regime.GENERAL,
            seed: int = 0,
            cond_a: float = DEFAULT_COND_A,
            problem_dir: Optional[str] = None,
            preconditioners: Optional[List[PreconditionerTag]] = None,
            weight: Optional[WeightSpec] = None,
            weight_b: Optional[WeightSpec] = None,
            tolerances: Optional[Tolerances] = None,
            maxit: Optional[int] = None,
            output: str = ".",
            scalings: Optional[List[float]] = None,
            shuffle_seed: int = 0,
            export_inverses: bool = False,
            threads: int = 1,
    ):
        self.command = command
        self.n = n
        self.m1 = m1
        self.m2 = m2
        self.regime = regime
        self.seed = seed
        self.cond_a = cond_a
        self.problem_dir = problem_dir
        self.preconditioners = preconditioners or [
            PreconditionerTag.P2D, PreconditionerTag.P3D, PreconditionerTag.P3T]
        self.weight = weight or WeightSpec()
        self.weight_b = weight_b or WeightSpec()
        self.tolerances = tolerances or Tolerances()
        self.maxit = maxit
        self.output = output
        self.scalings = scalings or [0.25, 0.5, 1.0, 2.0]
        self.shuffle_seed = shuffle_seed
        self.export_inverses = export_inverses
        self.threads = threads

    def validate(self) -> 'ExperimentConfig':
        if self.problem_dir is None:
            try:
                check_dimensions(self.n, self.m1, self.m2, self.regime)
            except InvalidDimensions as e:
                raise ConfigError(str(e)) from e
        elif not os.path.isdir(self.problem_dir):
            raise ConfigError("problem directory {} does not exist".format(self.problem_dir))
        if self.cond_a < 1:
            raise ConfigError("cond_a must be at least 1, got {}".format(self.cond_a))
        if self.maxit is not None and self.maxit < 1:
            raise ConfigError("maxit must be positive")
        if self.threads < 1:
            raise ConfigError("{} must be a positive integer".format(THREADS_ENV))
        if any(s <= 0 for s in self.scalings):
            raise ConfigError("scalings must be positive")
        return self

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'ExperimentConfig':
        try:
            regime = Regime(args.regime)
        except ValueError:
            raise ConfigError("unknown regime {!r}".format(args.regime))
        try:
            preconditioners = [
                PreconditionerTag(tag) for tag in parse_list(args.precond, str, "preconditioner")
            ] if args.precond else None
        except ValueError:
            raise ConfigError("unknown preconditioner in {!r}".format(args.precond))

        threads_text = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(threads_text)
        except ValueError:
            raise ConfigError("{}={!r} is not an integer".format(THREADS_ENV, threads_text))

        return cls(
            command=args.command,
            n=args.n,
            m1=args.m1,
            m2=args.m2,
            regime=regime,
            seed=args.seed,
            cond_a=args.cond_a,
            problem_dir=args.problem,
            preconditioners=preconditioners,
            weight=WeightSpec(args.weight),
            weight_b=WeightSpec(args.weight_b),
            tolerances=Tolerances(
                rank_tol=args.rank_tol,
                cluster_tol=args.cluster_tol,
                solve_tol=args.solve_tol,
                identity_tol=args.identity_tol,
            ),
            maxit=args.maxit,
            output=args.output,
            scalings=parse_list(args.scalings, float, "scaling") if args.scalings else None,
            shuffle_seed=args.shuffle_seed,
            export_inverses=args.export_inverses,
            threads=threads,
        ).validate()

    def as_dict(self) -> dict:
        return dict(
            command=self.command,
            dims=None if self.problem_dir else [self.n, self.m1, self.m2],
            regime=None if self.problem_dir else self.regime.value,
            seed=self.seed,
            cond_a=self.cond_a,
            problem=self.problem_dir,
            preconditioners=[tag.value for tag in self.preconditioners],
            weight=self.weight.text,
            weight_b=self.weight_b.text,
            tolerances=self.tolerances.as_dict(),
            maxit=self.maxit,
            scalings=self.scalings,
        )

    def load_problem(self) -> SaddleProblem:
        if self.problem_dir is not None:
            return read_problem(self.problem_dir, rank_tol=self.tolerances.rank_tol)
        return generate(
            self.n, self.m1, self.m2, self.regime, self.seed,
            cond_a=self.cond_a, rank_tol=self.tolerances.rank_tol,
        )


class TaskResult(NamedTuple):
    name: str
    exit_code: int
    files: List[str]
    lines: List[str]
    detail: str = ""

    @property
    def status(self) -> str:
        return "ok" if self.exit_code == EXIT_OK else "failed"


class RunManifest:
    """
    Attributes:
        - config: the ExperimentConfig echoed as a dict
        - version: the library version
        - tasks: list of TaskResult
        - directory: where the manifest and the task outputs live
    """

    filename = "run_manifest.json"

    def __init__(self, config: ExperimentConfig, tasks: List[TaskResult]):
        self.config = config.as_dict()
        self.version = library_version()
        self.tasks = tasks
        self.directory = config.output

    @property
    def exit_code(self) -> int:
        return max([task.exit_code for task in self.tasks] or [EXIT_OK])

    def files(self) -> List[str]:
        return sorted(
            os.path.relpath(path, self.directory)
            for task in self.tasks for path in task.files
        )

    def as_dict(self) -> dict:
        return dict(
            config=self.config,
            version=self.version,
            tasks=[
                dict(name=task.name, status=task.status, exit_code=task.exit_code, detail=task.detail)
                for task in self.tasks
            ],
            files={
                name: file_checksum(os.path.join(self.directory, name))
                for name in self.files()
            },
        )

    def write(self, serializer: Serializer) -> str:
        return serializer.write_json(self.as_dict(), os.path.join(self.directory, self.filename))

    @classmethod
    def verify(cls, directory: str) -> List[str]:
        """Names of listed files that are missing or whose checksum changed."""
        data = Serializer().read_json(os.path.join(directory, cls.filename))
        problems = []
        for name, checksum in data["files"].items():
            path = os.path.join(directory, name)
            if not os.path.exists(path) or file_checksum(path) != checksum:
                problems.append(name)
        return problems


def error_exit_code(e: SaddlePrecError) -> int:
    if isinstance(e, (ConfigError, InvalidDimensions)):
        return EXIT_CONFIG
    if isinstance(e, DegenerateDraw):
        return EXIT_GENERATION
    if isinstance(e, (Stagnation, PreconditionerNotSPD)):
        return EXIT_NO_CONVERGENCE
    return EXIT_VERIFICATION


def run_task(name: str, func: Callable[[], TaskResult]) -> TaskResult:
    try:
        return func()
    except SaddlePrecError as e:
        log.error("task %s failed: %s", name, e)
        return TaskResult(name, error_exit_code(e), [], [], "{}: {}".format(type(e).__name__, e))
    except Exception as e:
        log.exception("task %s failed unexpectedly", name)
        return TaskResult(name, EXIT_VERIFICATION, [], [], "{}: {}".format(type(e).__name__, e))


def run_tasks(config: ExperimentConfig, tasks: List[Tuple[str, Callable[[], TaskResult]]]) -> List[TaskResult]:
    """Runs independent tasks, up to config.threads at once. Results keep the task order."""
    if config.threads == 1 or len(tasks) <= 1:
        return [run_task(name, func) for name, func in tasks]
    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        return list(executor.map(lambda task: run_task(*task), tasks))


def build_preconditioner(
        tag: PreconditionerTag,
        problem: SaddleProblem,
        config: ExperimentConfig,
) -> Preconditioner:
    if tag is PreconditionerTag.P2D:
        return build_p2d(problem, config.weight_b.build(WeightKind.WB, problem.m))
    if tag is PreconditionerTag.P3D:
        return build_p3d(problem, config.weight.build(WeightKind.W, problem.m2))
    if tag is PreconditionerTag.P3T:
        return build_p3t(problem)
    return identity_preconditioner(problem.dims)


class Workbench:
    """
    One subcommand run: loads the problem, runs the tasks for the command,
    prints a summary and writes the run manifest last.
    """

    def __init__(self, config: ExperimentConfig, serializer: Optional[Serializer] = None,
                 formatter: Optional[Formatter] = None):
        self.config = config
        self.serializer = serializer or Serializer()
        self.formatter = formatter or Formatter()

    def path(self, name: str) -> str:
        return os.path.join(self.config.output, name)

    def run(self) -> int:
        config = self.config
        os.makedirs(config.output, exist_ok=True)
        if config.command == "generate":
            return self.cmd_generate()

        try:
            problem = config.load_problem()
        except SaddlePrecError as e:
            log.error("could not obtain a problem: %s", e)
            return error_exit_code(e)
        log.info("running %s on %r", config.command, problem)

        tasks = getattr(self, "tasks_" + config.command.replace("-", "_"))(problem)
        results = run_tasks(config, tasks)
        for result in results:
            self.formatter.print_lines(result.lines)

        manifest = RunManifest(config, results)
        manifest.write(self.serializer)
        return manifest.exit_code

    def cmd_generate(self) -> int:
        config = self.config
        try:
            problem = config.load_problem()
        except DegenerateDraw as e:
            log.error("%s", e)
            return EXIT_GENERATION
        paths = write_problem(problem, config.output)
        self.formatter.print_lines([
            "wrote {} with n={} m1={} m2={} ({})\n".format(
                ", ".join(os.path.basename(p) for p in paths),
                problem.n, problem.m1, problem.m2, problem.regime.value),
        ])
        return EXIT_OK

    def tasks_split(self, problem: SaddleProblem):
        def task():
            shuffled, order = shuffle_rows(problem.B, self.config.shuffle_seed)
            result = split_b(problem.A, shuffled, self.config.tolerances.rank_tol)
            rebuilt = SaddleProblem(
                problem.A, result.B1, result.B2, problem.regime, problem.seed,
                rank_tol=problem.rank_tol)
            failures = rebuilt.validate()
            original_rows = order[result.permutation]
            data = dict(
                shuffle=order.tolist(),
                b1_rows=sorted(int(i) for i in original_rows[:result.B1.shape[0]]),
                b2_rows=sorted(int(i) for i in original_rows[result.B1.shape[0]:]),
                permutation=result.permutation.tolist(),
                valid=not failures,
                failures=failures,
            )
            path = self.serializer.write_json(data, self.path("split.json"))
            lines = ["split: B2 = rows {} of B, {}\n".format(
                data["b2_rows"], "valid" if not failures else "; ".join(failures))]
            code = EXIT_OK if not failures else EXIT_VERIFICATION
            return TaskResult("split", code, [path], lines)

        return [("split", task)]

    def tasks_spectrum(self, problem: SaddleProblem):
        def make(tag: PreconditionerTag):
            def task():
                preconditioner = build_preconditioner(tag, problem, self.config)
                report = preconditioned_spectrum(
                    problem, preconditioner, cluster_tol=self.config.tolerances.cluster_tol)
                data = self.serializer.format_spectrum(report)
                if tag is PreconditionerTag.P2D and report.ideal:
                    checks = eigenvector_families_p2d(
                        problem, self.config.weight_b.build(WeightKind.WB, problem.m), self.config.seed)
                    data["families"] = self.serializer.format_family_checks(checks)
                    families_ok = all(check.passed for check in checks)
                else:
                    families_ok = True
                path = self.serializer.write_json(data, self.path("spectrum_{}.json".format(tag.value)))
                code = EXIT_VERIFICATION if report.passed is False or not families_ok else EXIT_OK
                return TaskResult("spectrum_" + tag.value, code, [path], list(self.formatter.format_spectrum(report)))
            return task

        return [("spectrum_" + tag.value, make(tag)) for tag in self.config.preconditioners]

    def tasks_solve(self, problem: SaddleProblem):
        rhs = random_rhs(problem, self.config.seed)

        def make(tag: PreconditionerTag):
            def task():
                preconditioner = build_preconditioner(tag, problem, self.config)
                solver = minres if tag.is_spd else gmres
                _, solve_log = solver(
                    problem.K, preconditioner, rhs, self.config.tolerances.solve_tol, self.config.maxit)
                path = self.serializer.write_solve_log(solve_log, self.path("solve_{}.csv".format(tag.value)))
                label = "{}/{}/{}".format(problem.regime.value, problem.n, problem.seed)
                lines = list(self.formatter.format_solve_summary([(label, solve_log)]))
                code = EXIT_OK if solve_log.converged else EXIT_NO_CONVERGENCE
                return TaskResult("solve_" + tag.value, code, [path], lines,
                                  "{} iterations".format(solve_log.iterations))
            return task

        return [("solve_" + tag.value, make(tag)) for tag in self.config.preconditioners]

    def tasks_verify_inverse(self, problem: SaddleProblem):
        def task():
            config = self.config
            weight = config.weight.build(WeightKind.W, problem.m2)
            identity_tol = config.tolerances.identity_tol
            inverse_tol = problem.inverse_tolerance
            K = problem.K
            lines = []

            direct = inv3_direct(problem)
            null_b2 = inv3_null_b2(problem)
            augmented = inv3_augmented(problem, weight)
            shifted = direct.assembled.copy()
            if problem.m2:
                shifted[-problem.m2:, -problem.m2:] -= weight.factor.inverse()
            lemmas = LemmaChecks(problem, weight)

            checks = [
                ("null-b2 residual", null_b2.residual(K), inverse_tol),
                ("null-b2 vs direct", null_b2.distance(direct), inverse_tol),
                ("null-b2 symmetry", null_b2.symmetry_residual(), inverse_tol),
                ("aug-shift", aug_shift_check(problem, weight), identity_tol),
                ("aug-shift closed form",
                 relative_difference(augmented.assembled, shifted, fro(direct.assembled)), inverse_tol),
                ("v modes", lemmas.v_modes_difference, identity_tol),
                ("vav = v", lemmas.vav, identity_tol),
                ("av = p_a", lemmas.av, identity_tol),
                ("null matrix of a", lemmas.null_matrix, identity_tol),
                ("p_a projector", _projector_residual(problem, weight), identity_tol),
            ]
            inverses = [direct, null_b2, augmented]

            if problem.null_a.dimension == problem.m:
                checks.append(("schur identity", schur_identity_residual(problem, config.weight_b.build(
                    WeightKind.WB, problem.m).value), identity_tol))

            if problem.is_minimally_independent():
                null_a = inv3_null_a(problem)
                zero_blocks = direct.zero_block_norms()
                scale = fro(direct.assembled)
                terms = ScratchTerms(problem, weight)
                checks += [
                    ("null-a residual", null_a.residual(K), inverse_tol),
                    ("null-a vs direct", null_a.distance(direct), inverse_tol),
                    ("null-a vs null-b2", null_a.distance(null_b2), inverse_tol),
                    ("multiplicative form", null_a.diagnostics["multiplicative_difference"], identity_tol),
                    ("x3 simplification", null_b2.diagnostics["x3_simplification"] / max(scale, 1.0), inverse_tol),
                    ("zero blocks", float(max(zero_blocks.values()) / scale), inverse_tol),
                    ("s_bar = w", sbar_residual(problem, weight), identity_tol),
                    ("hat identity", terms.hat_residual(), identity_tol),
                    ("z_a recovery", za_recovery_residual(problem), identity_tol),
                ]
                inverses.append(null_a)
                diagnostics = projector_diagnostics(problem, weight)
                rank_errors = (
                    abs(diagnostics.rank_vb1 - diagnostics.expected_rank_vb1)
                    + abs(diagnostics.rank_sum - diagnostics.expected_rank_sum)
                )
                checks += [
                    ("projector rank errors", float(rank_errors), 0.0),
                    ("range inclusion", diagnostics.range_inclusion, inverse_tol),
                ]
            else:
                lines.append("null-a checks skipped: the problem is not minimally independent\n")

            lines[:0] = list(self.formatter.format_residuals(checks))
            files = [self.serializer.write_json(
                dict(
                    condition_number=problem.condition_number,
                    checks=[dict(name=name, residual=r, tolerance=t, passed=r <= t) for name, r, t in checks],
                ),
                self.path("verify_inverse.json"),
            )]
            if config.export_inverses:
                for inverse in inverses:
                    files += self.serializer.write_block_inverse(
                        inverse,
                        self.path("inverse_{}".format(inverse.provenance.value)),
                        dict(residual=inverse.residual(K)),
                    )
            failed = [name for name, residual, tolerance in checks if not residual <= tolerance]
            code = EXIT_VERIFICATION if failed else EXIT_OK
            return TaskResult("verify_inverse", code, files, lines, ", ".join(failed))

        return [("verify_inverse", task)]

    def tasks_sweep_scaling(self, problem: SaddleProblem):
        def task():
            if not problem.is_minimally_independent():
                raise ConfigError("sweep-scaling needs a minimally independent problem")
            points = scaling_sweep_p3d(
                problem, self.config.scalings, self.config.weight.build(WeightKind.W, problem.m2),
                cluster_tol=self.config.tolerances.cluster_tol,
            )
            path = self.serializer.write_json(
                self.serializer.format_scaling_sweep(points), self.path("sweep_scaling.json"))
            return TaskResult("sweep_scaling", EXIT_OK, [path], list(self.formatter.format_scaling_sweep(points)))

        return [("sweep_scaling", task)]


def _projector_residual(problem: SaddleProblem, weight: WeightMatrix) -> float:
    report = verify_projector(projector_pa(problem, weight))
    return max(report.idempotence_residual, report.range_residual, report.kernel_residual)


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=40)
    common.add_argument("--m1", type=int, default=6)
    common.add_argument("--m2", type=int, default=4)
    common.add_argument("--regime", default="general", choices=[r.value for r in Regime])
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cond-a", type=float, default=DEFAULT_COND_A)
    common.add_argument("--problem", metavar="DIR", help="load a problem written by generate")
    common.add_argument("--precond", help="comma separated list of p2d, p3d, p3t, identity")
    common.add_argument("--weight", default="identity", help="W: identity, diag:<values> or file:<path>")
    common.add_argument("--weight-b", default="identity", help="W_B for p2d, same forms as --weight")
    common.add_argument("--solve-tol", type=float, default=1e-10)
    common.add_argument("--cluster-tol", type=float, default=1e-6)
    common.add_argument("--rank-tol", type=float, default=1e-10)
    common.add_argument("--identity-tol", type=float, default=1e-9)
    common.add_argument("--maxit", type=int)
    common.add_argument("--scalings", help="comma separated scalings for sweep-scaling")
    common.add_argument("--shuffle-seed", type=int, default=0)
    common.add_argument("--export-inverses", action="store_true")
    common.add_argument("-o", "--output", default=".")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="saddleprec", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=library_version())
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True
    for name, help_text in [
        ("generate", "write a random problem as Matrix Market files"),
        ("split", "recover B1 and B2 from shuffled rows of B"),
        ("spectrum", "check the spectrum of each preconditioned matrix"),
        ("solve", "run MINRES or GMRES with each preconditioner"),
        ("verify-inverse", "check the closed form inverses and supporting identities"),
        ("sweep-scaling", "count distinct eigenvalues for scaled P3D"),
    ]:
        commands.add_parser(name, parents=[common], help=help_text)
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    configure_logging(args.verbose, args.quiet)

    try:
        config = ExperimentConfig.from_args(args)
    except ConfigError as e:
        log.error("%s", e)
        return EXIT_CONFIG

    try:
        return Workbench(config).run()
    except ConfigError as e:
        log.error("%s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
