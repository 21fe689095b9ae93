"""Exception types shared across the package."""


class CodesignError(Exception):
    """Base class for all engine errors."""


class SpaceExhaustedError(CodesignError):
    """Requested more distinct samples than the design space holds."""


class InvalidInputError(CodesignError):
    """Input data is empty or contains non-finite values."""


class DegenerateInputError(CodesignError):
    """Rank correlation is undefined for the given inputs."""


class PartitionInfeasibleError(CodesignError):
    """An architecture cannot be split into the required segment count."""


class EmptyOptimalSetError(CodesignError):
    """No constraint point admitted a feasible architecture."""


class MissingCellsError(CodesignError):
    """A performance table has gaps where complete coverage is required."""


class ConfigValidationError(CodesignError):
    """An experiment configuration failed validation.

    Carries every violation found, not just the first one.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.violations))
