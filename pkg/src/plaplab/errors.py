"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes (validation -> 1, numeric -> 2,
non-convergence -> 3), so solver code should raise the most specific one.
"""


class PlapError(Exception):
    """Base class for all package errors."""


class DomainError(PlapError, ValueError):
    """Invalid input: violated precondition or malformed parameter."""


class NumericError(PlapError, ArithmeticError):
    """A numerical procedure failed (root-find, bracket, degenerate data)."""


class NonConvergenceError(NumericError):
    """An iterative solver exhausted its budget without meeting tolerances."""


class InconclusiveError(NumericError):
    """The requested certificate cannot be established at this resolution."""
