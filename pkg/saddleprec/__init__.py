from .errors import SaddlePrecError
from .problems import Regime, SaddleProblem, RhsVector, generate, split_b, assemble_k, random_rhs
from .preconditioners import (
    WeightKind, WeightMatrix, AugmentedBlock, PreconditionerTag, Preconditioner, VMode, VOperator,
    Corners, build_p2d, build_p3d, build_p3t, build_weight_l, build_v, identity_preconditioner,
)
from .inverses import (
    Provenance, BlockInverse, ScratchTerms, inv2_posdef, inv2_nullspace, inv3_null_b2,
    inv3_null_a, inv3_direct, inv3_augmented, aug_shift_check,
)
from .krylov import SolveLog, minres, gmres
from .spectrum import SpectrumReport, preconditioned_spectrum, eigenvector_families_p2d, scaling_sweep_p3d
from .formatting import Formatter
from .serializing import Serializer

try:
    from .version import __version__
except ImportError:
    # version.py is auto-generated with the git tag when building
    __version__ = "???"
