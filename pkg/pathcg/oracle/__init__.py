from .ou import (
    OUMLEResult, OUModel, discrete_ou_mle, gaussian_relative_entropy, lyapunov_solve, ou_finite_time_theta,
    ou_optimal_objective, ou_optimal_theta, ou_transient_moments,
)
from .quadrature import GridSpec, QuadratureResult, gaussian_density, quadrature_expectation

__all__ = [
    'OUMLEResult', 'OUModel', 'discrete_ou_mle', 'gaussian_relative_entropy', 'lyapunov_solve',
    'ou_finite_time_theta', 'ou_optimal_objective', 'ou_optimal_theta', 'ou_transient_moments',
    'GridSpec', 'QuadratureResult', 'gaussian_density', 'quadrature_expectation',
]
