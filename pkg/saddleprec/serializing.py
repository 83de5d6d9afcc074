import csv
import json
import logging
import os
from typing import Iterable, List, Optional

import numpy as np

from saddleprec.inverses import BlockInverse
from saddleprec.krylov import SolveLog
from saddleprec.problems import SaddleProblem, write_matrix
from saddleprec.spectrum import SpectrumReport, ScalingPoint, FamilyCheck, ProjectorDiagnostics
from saddleprec.utils import file_checksum

log = logging.getLogger(__name__)


def library_version() -> str:
    try:
        from saddleprec.version import __version__
    except ImportError:
        return "unknown"
    return __version__


class Serializer:
    """
    Turns results into plain dicts and rows, and writes them as JSON, CSV
    or Matrix Market.

    Floats in JSON are written with Python's shortest round trip repr, which
    reads back as exactly the same double as its 17 significant digit form
    ({:.17g}) would, without the trailing noise digits. CSV numbers use
    float_format, 17 significant digits by default.
    """

    def __init__(
        self,
        *,
        float_format="{:.17g}",
        indent=2,
        include_eigenvalues=True,
        include_history=True,
    ):
        self.float_format = float_format
        self.indent = indent
        self.include_eigenvalues = include_eigenvalues
        self.include_history = include_history

    def format_complex(self, value: complex) -> List[float]:
        return [float(value.real), float(value.imag)]

    def format_problem(self, problem: SaddleProblem, paths: Iterable[str] = ()) -> dict:
        return dict(
            n=problem.n,
            m1=problem.m1,
            m2=problem.m2,
            regime=problem.regime.value,
            seed=problem.seed,
            cond_a=problem.cond_a,
            version=library_version(),
            checksums={
                os.path.basename(path): file_checksum(path)
                for path in paths
            },
        )

    def format_spectrum(self, report: SpectrumReport) -> dict:
        result = dict(
            preconditioner=report.tag,
            clusters=[
                dict(
                    center=self.format_complex(cluster.center),
                    radius=cluster.radius,
                    count=cluster.count,
                )
                for cluster in report.clusters
            ],
            predicted=None if report.predicted is None else [
                dict(value=p.value, mult=p.multiplicity)
                for p in report.predicted
            ],
            verdict=self.format_verdict(report.passed),
            checks=[
                dict(
                    value=v.value,
                    mult=v.multiplicity,
                    matched=v.matched_count,
                    geometric=v.geometric_multiplicity,
                    passed=v.passed,
                )
                for v in report.verdicts
            ],
            residual_max_imag=report.max_imag,
            warnings=report.warnings,
        )
        if self.include_eigenvalues:
            result["eigs"] = [self.format_complex(e) for e in report.eigenvalues]
        return result

    def format_verdict(self, passed: Optional[bool]) -> str:
        if passed is None:
            return "not-ideal"
        return "pass" if passed else "fail"

    def format_family_checks(self, checks: List[FamilyCheck]) -> List[dict]:
        return [
            dict(
                family=check.family,
                source=check.source,
                eigenvalue=check.eigenvalue,
                residual=check.residual,
                should_hold=check.should_hold,
                passed=check.passed,
            )
            for check in checks
        ]

    def format_projector_diagnostics(self, diagnostics: ProjectorDiagnostics) -> dict:
        result = diagnostics._asdict()
        result["passed"] = diagnostics.passed
        return result

    def format_scaling_sweep(self, points: List[ScalingPoint]) -> List[dict]:
        return [
            dict(
                scaling=point.scaling,
                clusters=point.cluster_count,
                centers=[self.format_complex(c) for c in point.centers],
            )
            for point in points
        ]

    def format_solve_log(self, solve_log: SolveLog) -> dict:
        result = dict(
            solver=solve_log.solver.value,
            preconditioner=solve_log.preconditioner_tag,
            iterations=solve_log.iterations,
            refinements=len(solve_log.restarts),
            converged=solve_log.converged,
            tol=solve_log.tol,
            relative_residual=solve_log.relative_residual,
        )
        if self.include_history:
            result["history"] = [list(row) for row in solve_log.rows()]
        return result

    def format_solve_rows(self, solve_log: SolveLog) -> Iterable[List[str]]:
        yield ["iter", "precond_resid", "true_resid"]
        for i, precond, true in solve_log.rows():
            yield [str(i), self.float_format.format(precond), self.float_format.format(true)]

    def format_block_inverse(self, inverse: BlockInverse, residuals: Optional[dict] = None) -> dict:
        k = len(inverse.grid)
        return dict(
            provenance=inverse.provenance.value,
            sizes=inverse.sizes,
            blocks=[
                "X{}{}.mtx".format(i + 1, j + 1)
                for i in range(k) for j in range(k)
            ],
            diagnostics=inverse.diagnostics,
            residuals=dict(residuals or {}),
        )

    def write_json(self, data, path: str) -> str:
        with open(path, "w") as f:
            json.dump(data, f, indent=self.indent, default=self._json_default)
            f.write("\n")
        log.debug("wrote %s", path)
        return path

    def read_json(self, path: str):
        with open(path) as f:
            return json.load(f)

    def _json_default(self, value):
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, complex):
            return self.format_complex(value)
        raise TypeError("cannot serialize {!r}".format(value))

    def write_csv(self, rows: Iterable[List[str]], path: str) -> str:
        with open(path, "w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerows(rows)
        log.debug("wrote %s", path)
        return path

    def write_solve_log(self, solve_log: SolveLog, path: str) -> str:
        return self.write_csv(self.format_solve_rows(solve_log), path)

    def write_block_inverse(self, inverse: BlockInverse, directory: str, residuals: Optional[dict] = None) -> List[str]:
        """One Matrix Market file per block plus inverse.json. Returns the paths written."""
        os.makedirs(directory, exist_ok=True)
        manifest = self.format_block_inverse(inverse, residuals)
        paths = []
        blocks = [block for row in inverse.grid for block in row]
        for name, block in zip(manifest["blocks"], blocks):
            path = os.path.join(directory, name)
            write_matrix(path, block)
            paths.append(path)
        paths.append(self.write_json(manifest, os.path.join(directory, "inverse.json")))
        return paths
