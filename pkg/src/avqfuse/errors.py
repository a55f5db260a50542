"""Exception taxonomy shared across the package.

The CLI maps these onto distinct exit codes (see cli.py), so keep the
classes stable.
"""


class AvqError(Exception):
    """Base class for all package errors."""


class ShapeMismatchError(AvqError):
    """Operands have incompatible dimensions; message names both shapes."""


class ConfigError(AvqError):
    """Invalid configuration value (even kernel width, bad ranges, ...)."""


class DegenerateInputError(AvqError):
    """Structurally valid input that the operation cannot act on (T=0, H*W=0)."""


class MissingGradientError(AvqError):
    """An optimizer step was requested before gradients were populated."""


class EvaluationError(AvqError):
    """A checked function evaluation produced a non-finite value."""


class ZeroVarianceError(AvqError):
    """A correlation was requested on a constant sequence."""


class DegenerateTestError(AvqError):
    """A paired significance test received all-zero differences."""


class FitError(AvqError):
    """Curve fitting produced non-finite residuals."""


class DivergenceError(AvqError):
    """Training loss became non-finite; message reports epoch and step."""


class AlignmentError(AvqError):
    """Files or sequences that must be index-aligned have different lengths."""


class FormatError(AvqError):
    """A serialized file is malformed; carries the byte offset of the defect."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
