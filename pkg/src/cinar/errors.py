"""Exception hierarchy shared across the package.

The split mirrors how failures are reported at the command line: validation
problems (bad parameters, malformed input) are distinct from numerical
failures (singular systems, non-finite objectives), which are distinct from
an optimizer that simply did not converge.
"""


class CinarError(Exception):
    """Base class for all package errors."""


class ValidationError(CinarError):
    """Invalid parameters, malformed input, or violated preconditions."""


class NumericalError(CinarError):
    """Singular linear systems, non-finite values, failed factorizations."""


class ConvergenceError(CinarError):
    """An iterative routine stopped without meeting its tolerance."""
