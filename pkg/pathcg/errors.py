# File: pathcg/errors.py
"""Exception hierarchy.

Two families: ``ConfigError`` for bad user input (CLI exit code 2) and
``NumericalError`` for everything the mathematics refuses (exit code 1).
"""


class PathCGError(Exception):
    """Base class for all pathcg errors."""
    exit_code = 1

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context

    def __str__(self):
        message = super().__str__()
        if self.context:
            return f"[{self.context}] {message}"
        return message


# --- Configuration ---

class ConfigError(PathCGError):
    """Invalid or unreadable run configuration."""
    exit_code = 2


class ValidationError(ConfigError):
    """Raised by RunConfig.validate_<field> methods."""


# --- Numerics ---

class NumericalError(PathCGError):
    """A numerical precondition or postcondition failed."""
    exit_code = 1


class DimensionError(NumericalError):
    """Array shapes do not agree with the declared dimensions."""


class RankDeficientError(NumericalError):
    """A matrix required to have full rank does not."""

    def __init__(self, message, singular_values=None, context=None):
        super().__init__(message, context)
        self.singular_values = singular_values


class SingularDiffusionError(NumericalError):
    """sigma^T sigma (or a CG covariance) is not invertible."""


class FluctuationDissipationError(NumericalError):
    """An equilibrium model violates sigma sigma^T = 2 gamma / beta."""


class BlowUpError(NumericalError):
    """A simulated state became non-finite."""

    def __init__(self, message, step=None, replica=None, context=None):
        super().__init__(message, context)
        self.step = step
        self.replica = replica


class FrictionConsistencyError(NumericalError):
    """gamma_bar Pi_q = Pi_p gamma has no solution within tolerance."""

    def __init__(self, message, residual=None, context=None):
        super().__init__(message, context)
        self.residual = residual


class CGDiffusionError(NumericalError):
    """Pi Sigma Pi^T is not positive definite or depends on the state."""


class IllConditionedError(NumericalError):
    """Normal matrix too ill-conditioned for a unique least-squares solution."""

    def __init__(self, message, condition_number=None, dependent_pairs=(), context=None):
        super().__init__(message, context)
        self.condition_number = condition_number
        self.dependent_pairs = tuple(dependent_pairs)


class ConvergenceError(NumericalError):
    """An iterative optimizer exhausted its budget."""

    def __init__(self, message, gradient_norm=None, iterations=None, context=None):
        super().__init__(message, context)
        self.gradient_norm = gradient_norm
        self.iterations = iterations


class QuadratureError(NumericalError):
    """Grid quadrature did not converge or the grid misses probability mass."""


class UnstableModelError(NumericalError):
    """A linear drift matrix has eigenvalues with non-positive real part."""


class DegenerateDataError(NumericalError):
    """The data carry no information about the requested quantity."""


class HypothesisError(NumericalError):
    """Inputs fall outside the hypotheses an objective is derived under."""
