"""Exception types shared across the package."""


class TorusRdError(Exception):
    """Base class for all package errors."""


class Extinct(TorusRdError):
    """Total event rate hit zero: every site is empty and b(0) = 0."""


class EventBudgetExceeded(TorusRdError):
    """The hard cap on simulated events was reached before any stop condition."""


class NotExploded(TorusRdError):
    """An explosion-time estimate was requested for a run that never hit the stop threshold."""


class DivergentTail(TorusRdError):
    """The tail integral of 1/f diverges (no finite-time blow-up)."""


class StepUnderflow(TorusRdError):
    """The ODE step size collapsed below the floor before reaching the cap."""


class ZeroBirthRate(TorusRdError):
    """A birth rate vanished where upward passage is required."""


class NonSummable(TorusRdError):
    """The hitting-time series remainder cannot be driven below tolerance."""


class GridMismatch(TorusRdError):
    """Comparison grids are incommensurable."""
