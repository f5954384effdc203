"""Exception hierarchy shared by every module."""


class PseudoBenchError(Exception):
    """Base class for all errors raised by pseudobench."""


class FormatError(PseudoBenchError, ValueError):
    """A container manifest or results file is malformed."""


class SizeMismatchError(FormatError):
    """Payload byte count disagrees with the manifest."""


class ValidationError(PseudoBenchError, ValueError):
    """A domain object violates one of its invariants."""


class ParameterError(PseudoBenchError, ValueError):
    """An argument is outside its admissible range."""


class NumericError(PseudoBenchError, ArithmeticError):
    """A numerical routine received or produced unusable values."""


class ConvergenceError(NumericError):
    """An iterative routine stopped before reaching its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class DegenerateSplitError(PseudoBenchError):
    """A train/test split lacks the classes needed for scoring."""


class ProtocolError(PseudoBenchError):
    """An evaluation protocol cannot be applied to the given data."""


class UndefinedTestError(PseudoBenchError):
    """A statistical test is undefined for the given sample."""
