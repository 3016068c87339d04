"""Exception types shared across the package."""


class TwoBarrierError(Exception):
    """Base class for all package-specific errors."""


class NonIntegrableTailError(TwoBarrierError):
    """The requested parameterization has an infinite mean, so tail
    integrals and every downstream ruin formula are undefined."""


class UnorderedPremiumsError(TwoBarrierError):
    """Premium rates must satisfy p1 > p2."""


class UnstableModelError(TwoBarrierError):
    """The safety-loading condition p2 > E[claim]/E[interarrival] fails,
    so reserves do not drift to infinity and the asymptotic formulas
    degenerate."""


class StepCapExceededError(TwoBarrierError):
    """Too many simulated paths hit the hard step cap before the
    truncation policy could resolve them."""


class WeightDegeneracyError(TwoBarrierError):
    """Importance-sampling weights collapsed: the effective sample size
    fell below 1% of the replication count."""


class ConfigError(TwoBarrierError):
    """Experiment config file could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
