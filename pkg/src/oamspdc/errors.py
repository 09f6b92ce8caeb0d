"""Exception types shared across the toolkit."""


class WindowError(ValueError):
    """An OAM window is empty, inverted, or does not bracket zero."""


class DivergenceError(ValueError):
    """A closed-form evaluation was requested outside its convergence region."""


class NormalizationError(ValueError):
    """An operation required a normalized spectrum but got an un-normalized one."""


class DegenerateInputError(ValueError):
    """Input carries no usable signal (e.g. an all-zero pump or counts matrix)."""


class AccuracyError(RuntimeError):
    """Quadrature failed to reach the requested accuracy.

    The ``residual`` attribute carries the integrator's error estimate.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class MappingSingularityError(ValueError):
    """The ray-mapping ODE hit a zero of the target intensity inside the mapped range."""


class SamplingError(RuntimeError):
    """A propagation grid was too coarse to conserve energy."""


class ConvergenceError(RuntimeError):
    """Iterative optimization stopped before reaching its convergence criteria.

    Attributes ``objective`` and ``iterate`` hold the last state reached.
    """

    def __init__(self, message, objective=None, iterate=None):
        super().__init__(message)
        self.objective = objective
        self.iterate = iterate
