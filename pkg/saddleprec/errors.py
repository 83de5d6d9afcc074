"""
Exceptions raised by saddleprec.

Every error derives from SaddlePrecError and from the closest builtin,
so callers may catch either. Linear algebra failures derive from
numpy.linalg.LinAlgError (itself a ValueError).
"""
from numpy.linalg import LinAlgError


class SaddlePrecError(Exception):
    pass


# dense-core

class NonFiniteEntries(SaddlePrecError, ValueError):
    pass


class NotSymmetric(SaddlePrecError, ValueError):
    pass


class NotPositiveDefinite(SaddlePrecError, LinAlgError):
    pass


class NoConvergence(SaddlePrecError, LinAlgError):
    pass


# problem-gen

class InvalidDimensions(SaddlePrecError, ValueError):
    pass


class DegenerateDraw(SaddlePrecError, LinAlgError):
    """The generator could not draw a nonsingular problem within its retry cap."""


class NotSplittable(SaddlePrecError, LinAlgError):
    """
    Fewer than nullity(A) rows of B have an independent projection on ker(A),
    so the saddle point matrix is singular.
    """


# preconditioners and inverse formulas

class AugmentNotSPD(SaddlePrecError, LinAlgError):
    pass


class SchurSingular(SaddlePrecError, LinAlgError):
    pass


class BorderedSingular(SaddlePrecError, LinAlgError):
    """B2 Z_A is singular, i.e. [[A, B2^T], [B2, 0]] is not invertible."""


class ReducedHessianNotSPD(SaddlePrecError, LinAlgError):
    pass


class MiddleSchurSingular(SaddlePrecError, LinAlgError):
    """B1 V B1^T is singular, which can only happen when K itself is singular."""


class LeadingBlockNotSPD(SaddlePrecError, LinAlgError):
    pass


class NotMinimallyIndependent(SaddlePrecError, ValueError):
    pass


# krylov

class PreconditionerNotSPD(SaddlePrecError, ArithmeticError):
    pass


class Stagnation(SaddlePrecError, ArithmeticError):
    pass


# workbench

class ConfigError(SaddlePrecError, ValueError):
    pass
