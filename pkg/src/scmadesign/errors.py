"""Exception hierarchy shared by the library and the command line."""


class ScmaError(ValueError):
    """Base class for all scmadesign errors."""

    exit_code = 1


class ConfigError(ScmaError):
    """Invalid parameters or configuration."""

    exit_code = 2


class InvariantError(ScmaError):
    """A structural invariant of a constellation or codebook is violated.

    ``invariant`` names the failing check so callers can report it.
    """

    exit_code = 3

    def __init__(self, invariant, detail=""):
        self.invariant = invariant
        msg = f"invariant violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InfeasibleError(ScmaError):
    exit_code = 4


class BudgetExceededError(ScmaError):
    """Exhaustive enumeration would exceed the configured budget."""

    exit_code = 5
