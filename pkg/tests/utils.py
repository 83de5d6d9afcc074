import os

import numpy as np
from littleutils import string_to_file, file_to_string, json_to_file, file_to_json

from saddleprec import Regime, SaddleProblem


def compare_to_file(text, name):
    filename = os.path.join(
        os.path.dirname(__file__),
        'golden_files',
        name + '.txt',
    )
    if os.environ.get('FIX_SADDLEPREC_TESTS'):
        string_to_file(text, filename)
    else:
        expected_output = file_to_string(filename)
        assert text == expected_output


def compare_to_file_json(data, name):
    filename = os.path.join(
        os.path.dirname(__file__),
        'golden_files',
        name + '.json',
    )
    if os.environ.get('FIX_SADDLEPREC_TESTS'):
        json_to_file(data, filename, indent=4)
    else:
        expected_output = file_to_json(filename)
        assert data == expected_output


def read_output_json(directory, name):
    return file_to_json(os.path.join(str(directory), name))


def coordinate_problem() -> SaddleProblem:
    """A = diag(1, 0), B1 = [1, 0], B2 = [0, 1]"""
    return SaddleProblem(
        np.diag([1.0, 0.0]),
        np.array([[1.0, 0.0]]),
        np.array([[0.0, 1.0]]),
        Regime.MINIMALLY_INDEPENDENT,
    )


def scalar_problem(b: float = 1.0) -> SaddleProblem:
    """A = [0], B2 = [b]"""
    return SaddleProblem(
        np.zeros((1, 1)),
        np.zeros((0, 1)),
        np.array([[b]]),
        Regime.MAX_RANK_DEFICIENT,
    )


def sample_spectrum_report():
    from saddleprec.spectrum import Cluster, Prediction, PredictionVerdict, SpectrumReport

    return SpectrumReport(
        "p3d",
        np.array([-1.0, -1.0, 1.0, 2.0], dtype=complex),
        [
            Cluster(-1 + 0j, 0.0, 2),
            Cluster(1 + 0j, 0.0, 1),
            Cluster(2 + 0j, 0.0, 1),
        ],
        [Prediction(-1.0, 2), Prediction(1.0, 1), Prediction(2.0, 1)],
        [
            PredictionVerdict(-1.0, 2, 2, 2, True),
            PredictionVerdict(1.0, 1, 1, 1, True),
            PredictionVerdict(2.0, 1, 1, 1, True),
        ],
        0.0,
    )


def sample_solve_log():
    from saddleprec.krylov import SolveLog, SolverKind

    solve_log = SolveLog(SolverKind.GMRES, "p3t", 1e-10, 2.0)
    solve_log.record(1.0, 2.0)
    solve_log.record(1e-12, 1e-12)
    return solve_log
