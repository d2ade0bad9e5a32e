"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class NumericalError(RuntimeError):
    """A root bracket or optimizer failed to produce a usable result."""
