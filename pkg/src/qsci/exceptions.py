"""Exception types raised across the package.

Everything derives from :class:`QsciError` so callers (notably the CLI) can
catch one base class and map it to a nonzero exit status.
"""


class QsciError(Exception):
    """Base class for all errors raised by this package."""


# --- integral file parsing ---------------------------------------------------


class FcidumpWarning(UserWarning):
    """Non-fatal diagnostic emitted while reading an integral file."""


class MalformedHeader(QsciError):
    """Integral file header is missing or lacks a mandatory field."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class MalformedRecord(QsciError):
    """A data line could not be parsed (bad token count or unreadable number)."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class IndexOutOfRange(QsciError):
    """An orbital index lies outside the declared range."""


class EmptyFile(QsciError):
    """An input file contains no usable records."""


# --- determinants and excitations --------------------------------------------


class LengthMismatch(QsciError):
    """A bitstring or vector has the wrong length for its context."""


class HoleNotOccupied(QsciError):
    """Excitation requested out of an orbital that is empty."""


class ParticleOccupied(QsciError):
    """Excitation requested into an orbital that is already filled."""


class SpaceTooLarge(QsciError):
    """Full configuration space exceeds the enumeration cap."""


class InvalidBasis(QsciError):
    """A configuration basis violates ordering, uniqueness or sector rules."""


# --- linear algebra -----------------------------------------------------------


class DimensionZero(QsciError):
    """An eigenproblem of dimension zero was requested."""


class DimensionTooLarge(QsciError):
    """A dense decomposition was requested above the dense-path cap."""


class NotConverged(QsciError):
    """Iterative eigensolver hit its iteration cap.

    Carries the best iterate so callers can inspect or reuse it.
    """

    def __init__(self, message, energy=None, coefficients=None, residual_norm=None):
        super().__init__(message)
        self.energy = energy
        self.coefficients = coefficients
        self.residual_norm = residual_norm


# --- sampling and recovery ----------------------------------------------------


class NonPositiveCount(QsciError):
    """A measurement record carries a count that is not a positive integer."""


class ZeroStateVector(QsciError):
    """All sampling weights are zero; no distribution can be formed."""


class ZeroWeightVector(QsciError):
    """All occupation weights are zero; no profile can be formed."""


class ProfileWidthMismatch(QsciError):
    """An occupation profile does not match the orbital count of the data."""


class EmptySampleSet(QsciError):
    """A sample set with zero total shots was supplied where shots are required."""


class NoValidConfigurations(QsciError):
    """Every sampled bitstring was discarded and recovery was disabled."""


# --- command line -------------------------------------------------------------


class ConfigEntryError(QsciError):
    """A config-file entry names no known flag or resists type coercion."""
