"""Exception hierarchy shared by every module."""


class WayAuditError(ValueError):
    """Base class for input errors raised by the toolkit."""


class LayoutError(WayAuditError):
    """Operands live on incompatible tensor-factor layouts."""


class InvariantError(WayAuditError):
    """A domain object failed one of its stated invariants.

    The ``invariant`` attribute names the failed condition so callers (the
    CLI in particular) can report it without parsing the message.
    """

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        msg = f"invariant violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
