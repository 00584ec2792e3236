"""Exception types shared by the numerical modules."""

from __future__ import annotations


class NonConvergenceError(RuntimeError):
    """An iteration budget was exhausted before the requested accuracy."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class NotInPetalError(ValueError):
    """A point handed to a Fatou chart lies outside the chart's petal."""


class NotInBasinError(ValueError):
    """The orbit of a point never reached the attracting petal."""


class EscapeError(NotInBasinError):
    """The orbit left every bounded region."""
