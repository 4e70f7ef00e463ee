"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """Invalid or physically infeasible configuration."""


class InfeasibleTimingError(ConfigurationError):
    """Loop timing cannot fit the requested measurements per iteration."""


class MetricUndefinedError(ValueError):
    """A statistic or metric is undefined for the given input."""


class NoMeasurableTurbulence(ValueError):
    """Angle-of-arrival fluctuation is zero; Fried parameter is infinite."""


class NoStableParameters(RuntimeError):
    """Every autotune trial diverged; no usable (amplitude, gain) pair."""
