class PomdpError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(PomdpError, ValueError):
    """Malformed input: unknown identifiers, bad distributions, parse failures."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class CapacityError(PomdpError):
    """A construction exceeded its configured resource limit."""


class NumericalError(PomdpError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InternalError(PomdpError):
    """An invariant that should hold by construction was violated."""
