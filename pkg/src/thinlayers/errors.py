"""Exception hierarchy shared by the solver modules."""


class ThinLayersError(Exception):
    """Base class for all package errors."""


class InputError(ThinLayersError, ValueError):
    """An argument is outside the documented domain of an operation."""


class ConfigurationError(ThinLayersError, ValueError):
    """A run configuration is inconsistent (e.g. quadrature too coarse for the mode count)."""


class NumericalOverflowError(ThinLayersError, ArithmeticError):
    """Non-finite values appeared while assembling the vector field."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class StepRejected(ThinLayersError):
    """A single time step failed (e.g. Newton did not converge); retry with a smaller step."""


class IntegrationError(ThinLayersError, RuntimeError):
    """Time integration cannot continue. ``state`` is the last successfully sampled state."""

    def __init__(self, message, state=None, dt=None):
        super().__init__(message)
        self.state = state
        self.dt = dt
