"""Package exception types."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or lost stability."""
