"""Exception types. Each carries the process exit code the CLI reports."""


class CorrwitError(Exception):
    exit_code = 1


class ParseError(CorrwitError):
    """Malformed input file or flag value."""
    exit_code = 2


class ParameterError(CorrwitError, ValueError):
    """Invalid class parameters (d, L, sector, index ranges)."""
    exit_code = 3


class ValidationError(CorrwitError, ValueError):
    """An input object violates its invariants (trace, positivity, norm, dims)."""
    exit_code = 3


class ResourceCapError(CorrwitError):
    """A dense construction would exceed the configured memory cap."""
    exit_code = 4


class NumericError(CorrwitError):
    """Eigensolve or projector construction failed; carries the residual."""
    exit_code = 3

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class SelftestFailure(CorrwitError):
    exit_code = 5
