"""Exception hierarchy shared by all lab modules.

The CLI maps these onto exit codes: domain errors are usage problems (2),
numerical and resource errors are exit code 3, consistency errors mean two
independent computations disagreed and are reported as check failures (1).
"""


class LabError(Exception):
    pass


class DomainError(LabError, ValueError):
    """Input outside an operation's precondition."""


class NumericalError(LabError, ArithmeticError):
    """An iterative solver failed to converge."""


class ResourceError(LabError, RuntimeError):
    """A configured size or search cap was exceeded."""


class ConsistencyError(LabError, RuntimeError):
    """Two independent routes to the same quantity disagree."""
