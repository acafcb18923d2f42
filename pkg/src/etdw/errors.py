"""Exception hierarchy shared by all modules."""


class EtdwError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(EtdwError, ValueError):
    """Inconsistent dimensions, invalid parameters or unreadable scenario files."""


class NumericError(EtdwError, ArithmeticError):
    """Non-finite state, singular innovation bound or similar numeric failure."""


class DesignError(NumericError):
    """Controller design failed (Riccati iteration diverged or closed loop unstable)."""


class CalibrationError(EtdwError, ValueError):
    """Not enough attack-free data to calibrate detector thresholds."""
