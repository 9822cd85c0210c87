"""Exception types raised across the package."""


class BatteryError(Exception):
    """Base class for all package errors."""


class SizeError(BatteryError, ValueError):
    """Atom number outside the supported range."""


class DomainError(BatteryError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DimensionError(BatteryError, ValueError):
    """Operator and state dimensions disagree."""


class AccuracyError(BatteryError, RuntimeError):
    """Propagation could not meet its norm-drift budget."""

    def __init__(self, message, drift):
        super().__init__(message)
        self.drift = drift


class RootNotBracketedError(BatteryError, RuntimeError):
    """A bisection solver found no sign change on its search interval."""

    def __init__(self, message, f_lo=None, f_hi=None):
        super().__init__(message)
        self.f_lo = f_lo
        self.f_hi = f_hi


class DegenerateInputError(BatteryError, ValueError):
    """Input makes a closed-form quantity undefined (e.g. zero Rabi frequency)."""


class ConfigError(BatteryError, ValueError):
    """Invalid run configuration."""
