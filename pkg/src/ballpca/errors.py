"""Exception hierarchy shared by the library and the CLI exit-code scheme."""


class BallPcaError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BallPcaError, ValueError):
    """Invalid argument values or incompatible in-memory objects (CLI exit 3)."""


class FormatError(BallPcaError, ValueError):
    """Malformed or truncated artifact file (CLI exit 2)."""


class DataError(FormatError):
    """Structurally valid input carrying invalid values, e.g. NaNs (CLI exit 2)."""


class CompatibilityError(DomainError):
    """Cross-file mismatch between well-formed files, e.g. a coefficient file
    against a different basis than expected (CLI exit 3)."""


class NumericalError(BallPcaError, RuntimeError):
    """Numerical routine failed to converge or produced invalid output (CLI exit 4)."""
