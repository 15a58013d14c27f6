"""Exception hierarchy shared across the package."""


class HiercopError(Exception):
    """Base class for all package errors."""


class DomainError(HiercopError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(HiercopError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""


class ConfigError(HiercopError, ValueError):
    """Invalid run or sampler configuration."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DataError(HiercopError, ValueError):
    """Malformed or unusable input data."""
