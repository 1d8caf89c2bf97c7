"""Exception and warning types raised across the simulator."""


class SimulatorError(Exception):
    """Base class for all simulator errors."""


class InvalidGraph(SimulatorError, ValueError):
    pass


class NotHermitian(SimulatorError, ValueError):
    pass


class DimensionError(SimulatorError, ValueError):
    pass


class InvalidGap(SimulatorError, ValueError):
    pass


class InvalidGadgetOperator(SimulatorError, ValueError):
    pass


class InvalidPathParameter(SimulatorError, ValueError):
    pass


class BadInitialState(SimulatorError, ValueError):
    pass


class BadState(SimulatorError, ValueError):
    pass


class Unphysical(SimulatorError, ValueError):
    pass


class ObservableNotCommuting(SimulatorError, ValueError):
    pass


class LemmaUnverifiable(SimulatorError):
    pass


class DegenerateSignal(SimulatorError, ValueError):
    pass


class FitFailed(SimulatorError):
    """Raised when no multi-start run converged. ``best`` carries the best-effort result."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(SimulatorError, ValueError):
    pass


class RangeWarning(UserWarning):
    """A function was evaluated outside its range of validity."""
