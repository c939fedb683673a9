"""Exception types raised by stabsse."""


class ModelError(ValueError):
    """Hamiltonian parameters that would introduce a sign problem or are malformed."""


class CapabilityError(RuntimeError):
    """Requested size exceeds what a dense/exact routine can handle."""


class TruncationError(ArithmeticError):
    """Truncated partition function is not positive at the requested order."""


class EstimationError(ValueError):
    """Too few samples for the requested error estimate."""
