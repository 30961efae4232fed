"""Error hierarchy shared by every stage of the pipeline."""
from __future__ import annotations


class StringTableError(Exception):
    """Base class for all errors raised by stringtable."""


# ---------------------------------------------------------------------------
# Invalid input (also ValueError so callers can catch the builtin)
# ---------------------------------------------------------------------------


class ConfigError(StringTableError, ValueError):
    pass


class AsymmetricCoefficients(StringTableError, ValueError):
    pass


class NonClosedCurve(StringTableError, ValueError):
    pass


class InsufficientSamples(StringTableError, ValueError):
    pass


class OverlappingComponents(StringTableError, ValueError):
    pass


class NonpositiveWidth(StringTableError, ValueError):
    pass


class EmptyComplement(StringTableError, ValueError):
    pass


class EmptyDirectionSet(StringTableError, ValueError):
    pass


class NonpositiveCurvatureRadius(StringTableError, ValueError):
    pass


class StringTooShort(StringTableError, ValueError):
    pass


class TangentialShot(StringTableError, ValueError):
    pass


class NotACriticalPoint(StringTableError, ValueError):
    pass


class SpecOverlap(StringTableError, ValueError):
    pass


class NegativeRadicand(StringTableError, ValueError):
    pass


class NotCritical(StringTableError, ValueError):
    pass


class ZeroFrequency(StringTableError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Numerical failures and failed cross-checks
# ---------------------------------------------------------------------------


class NoConvergence(StringTableError, RuntimeError):
    pass


class DegenerateTangent(StringTableError, RuntimeError):
    pass


class ReconstructionMismatch(StringTableError, RuntimeError):
    pass


class ClassificationConflict(StringTableError, RuntimeError):
    pass


class FormulaMismatch(StringTableError, RuntimeError):
    pass
