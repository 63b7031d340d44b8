"""Exception hierarchy.

Validation problems derive from :class:`ValueError` so callers can catch
them generically; the CLI maps them to exit code 2.  I/O problems use the
builtin :class:`OSError`.
"""


class DerivwinError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DerivwinError, ValueError):
    """Invalid arguments or configuration."""


class InvalidLength(ValidationError):
    pass


class InvalidFftSize(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class ZeroSignal(ValidationError):
    pass


class DegenerateGrid(ValidationError):
    pass


class TooManyTapers(ValidationError):
    pass


class SignalTooShort(ValidationError):
    pass


class FormatError(ValidationError):
    """A feature, model, trial or score file does not follow its format."""


class NotPowerOfTwo(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class EmptyData(ValidationError):
    pass


class EmptyFeatures(ValidationError):
    pass


class DegenerateCohort(ValidationError):
    pass


class SingleClassOnly(ValidationError):
    pass


class ConfigError(ValidationError):
    pass
