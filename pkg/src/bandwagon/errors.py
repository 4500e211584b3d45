"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function (e.g. a fraction not in (0, 1))."""


class ConvergenceError(RuntimeError):
    """A numerical solver lost its bracket or ran out of iterations."""


class NoViableStrategy(RuntimeError):
    """Every profit-maximizing candidate requires a price below the unit cost."""
