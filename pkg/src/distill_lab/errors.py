"""Exception types shared across the package."""


class DistillLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(DistillLabError):
    """An array has the wrong shape or length for the requested operation."""


class RankDeficient(DistillLabError):
    """A design matrix failed the full-column-rank requirement."""

    def __init__(self, rank: int, expected: int):
        self.rank = rank
        self.expected = expected
        super().__init__(f"numerical rank {rank} < required {expected}")


class DomainError(DistillLabError):
    """A scalar argument is outside its mathematical domain."""


class SingularSystem(DistillLabError):
    """A linear system that should be regular turned out singular."""


class ZeroInitialWeight(DistillLabError):
    """Distillation was started from the all-zero weight vector."""


class UnstableStep(DistillLabError):
    """Euler step size exceeds the stability bound of the flow."""


class InsufficientRounds(DistillLabError):
    """Fewer than two rounds supplied where a comparison is required."""


class ModeMismatch(DistillLabError):
    """Token-mode data fed to a patch-mode model, or vice versa."""


class ShapeMismatch(DistillLabError):
    """Two parameter sets do not share a common structure."""


class NonFiniteLoss(DistillLabError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, step: int, value: float):
        self.step = step
        self.value = value
        super().__init__(f"non-finite loss {value!r} at step {step}")


class UnknownVariant(DistillLabError):
    """Unrecognized distillation-loss variant name."""


class SubsampleTooSmall(DistillLabError):
    """Requested subsample cannot cover every class."""


class ConfigError(DistillLabError):
    """Bad key, value, or line in an experiment configuration."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where += f" (key {key!r}"
            where += f", line {line})" if line is not None else ")"
        elif line is not None:
            where += f" (line {line})"
        super().__init__(message + where)
