"""Exception types shared across the solver blocks."""


class InfeasibleError(RuntimeError):
    """A constraint set admits no point (budget below its floor, zero-rate load, ...).

    ``where`` names the violated budget or resource so callers can report it.
    """

    def __init__(self, message: str, where: str | None = None):
        super().__init__(message)
        self.where = where


class InfeasibleRateError(InfeasibleError):
    """Positive load routed over a link or CPU share of zero capacity."""
