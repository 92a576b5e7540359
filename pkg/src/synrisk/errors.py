"""Shared exception types.

Parameter and input problems raise plain ``ValueError``; iterative solvers
that fail to reach their tolerance raise ``ConvergenceError`` carrying the
last residual so callers can report how far the run got.
"""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, residual=None, iterations=None):
        if residual is not None:
            message = f"{message} (residual={residual:.3e}, iterations={iterations})"
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
