"""Exception types shared across the package."""


class InvalidCircuitError(ValueError):
    """Circuit violates a structural invariant (bad index, unwritten classical bit, ...)."""


class StatevectorModeError(InvalidCircuitError):
    """Circuit contains a non-unitary element and cannot run in statevector mode."""


class UnsupportedTopologyError(ValueError):
    """Coupling map is not a topology the router knows how to handle."""


class ResourceLimitError(RuntimeError):
    """Requested computation exceeds a configured size cap."""


class PreconditionError(ValueError):
    """Caller did not assert a precondition the operation refuses to assume."""
