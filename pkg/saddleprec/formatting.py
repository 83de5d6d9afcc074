import sys
from typing import Iterable, List, Tuple

from saddleprec.krylov import SolveLog
from saddleprec.spectrum import SpectrumReport, ScalingPoint
from saddleprec.utils import assert_


class Formatter:
    def __init__(
            self, *,
            number_format="{:.3e}",
            value_format="{:.10f}",
            column_separator="  ",
            show_warnings=True,
            max_clusters=20,
    ):
        assert_(max_clusters > 0, ValueError("max_clusters must be positive"))
        self.number_format = number_format
        self.value_format = value_format
        self.column_separator = column_separator
        self.show_warnings = show_warnings
        self.max_clusters = max_clusters

    def print_lines(self, lines, *, file=None):
        if file is None:
            file = sys.stdout
        for line in lines:
            print(line, file=file, end="")

    def format_table(self, header: List[str], rows: List[List[str]]) -> Iterable[str]:
        widths = [
            max(len(cell) for cell in column)
            for column in zip(header, *rows)
        ]

        def line(cells):
            return self.column_separator.join(
                cell.ljust(width) for cell, width in zip(cells, widths)
            ).rstrip() + "\n"

        yield line(header)
        yield line(["-" * width for width in widths])
        for row in rows:
            yield line(row)

    def format_complex(self, value: complex) -> str:
        if value.imag == 0:
            return self.value_format.format(value.real)
        return "{}{:+.3e}j".format(self.value_format.format(value.real), value.imag)

    def format_verdict(self, passed) -> str:
        if passed is None:
            return "not ideal"
        return "PASS" if passed else "FAIL"

    def format_spectrum(self, report: SpectrumReport) -> Iterable[str]:
        yield "{}: {} eigenvalues in {} clusters, verdict {}\n".format(
            report.tag,
            len(report.eigenvalues),
            len(report.clusters),
            self.format_verdict(report.passed),
        )
        clusters = report.clusters[:self.max_clusters]
        yield from self.format_table(
            ["center", "radius", "count"],
            [
                [self.format_complex(c.center), self.number_format.format(c.radius), str(c.count)]
                for c in clusters
            ],
        )
        if len(report.clusters) > len(clusters):
            yield "(... {} more clusters)\n".format(len(report.clusters) - len(clusters))
        if report.verdicts:
            yield from self.format_table(
                ["predicted", "mult", "found", "geometric", "ok"],
                [
                    [
                        self.value_format.format(v.value),
                        str(v.multiplicity),
                        str(v.matched_count),
                        str(v.geometric_multiplicity),
                        "yes" if v.passed else "NO",
                    ]
                    for v in report.verdicts
                ],
            )
        if self.show_warnings:
            for warning in report.warnings:
                yield "warning: {}\n".format(warning)

    def format_solve_summary(self, entries: List[Tuple[str, SolveLog]]) -> Iterable[str]:
        """entries are (problem label, log) pairs."""
        yield from self.format_table(
            ["problem", "solver", "precond", "iters", "final residual", "converged"],
            [
                [
                    label,
                    solve_log.solver.value,
                    solve_log.preconditioner_tag,
                    str(solve_log.iterations),
                    self.number_format.format(solve_log.relative_residual),
                    "yes" if solve_log.converged else "no",
                ]
                for label, solve_log in entries
            ],
        )

    def format_residuals(self, checks: List[Tuple[str, float, float]]) -> Iterable[str]:
        """checks are (name, residual, tolerance) triples."""
        yield from self.format_table(
            ["check", "residual", "tolerance", "ok"],
            [
                [
                    name,
                    self.number_format.format(residual),
                    self.number_format.format(tolerance),
                    "yes" if residual <= tolerance else "NO",
                ]
                for name, residual, tolerance in checks
            ],
        )

    def format_scaling_sweep(self, points: List[ScalingPoint]) -> Iterable[str]:
        yield from self.format_table(
            ["scaling", "clusters"],
            [[repr(point.scaling), str(point.cluster_count)] for point in points],
        )
