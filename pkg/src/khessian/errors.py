"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input violates a mathematical precondition (cone membership, index
    ranges, Hermitian symmetry, positive definiteness)."""


class ConeViolationError(DomainError):
    """A spectrum or field left the Garding cone where strict membership is
    required."""

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class SamplingBudgetError(RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


class LinearSolveError(RuntimeError):
    """Krylov solve of a Newton system did not reach the requested tolerance."""


class SolveFailure(RuntimeError):
    """Newton continuation failed; carries the partial report for diagnosis."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(ValueError):
    """Run configuration is malformed (unknown key, bad type, bad value)."""
