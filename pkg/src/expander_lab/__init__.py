"""Finite verification lab for congruence-quotient expanders and their tensor operators."""

__version__ = "0.1.0"

from expander_lab.errors import ConsistencyError, DomainError, NumericalError, ResourceError

__all__ = [
    "ConsistencyError",
    "DomainError",
    "NumericalError",
    "ResourceError",
    "__version__",
]
