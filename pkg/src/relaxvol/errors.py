"""Exception types shared across the package."""


class RelaxvolError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RelaxvolError):
    """An argument violates the mathematical domain of an operation."""


class CapabilityError(RelaxvolError):
    """The requested operation is not supported by this function family."""


class NumericalError(RelaxvolError):
    """An iterative routine failed to converge or would overflow."""


class InputError(RelaxvolError):
    """Malformed caller input: wrong sizes, ordering, or out-of-range counts."""
