# File: pathcg/inference/descent.py
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..app_config import current_config
from ..cg_maps.coefficients import cg_friction
from ..cg_maps.maps import PhaseCGMap
from ..errors import ConvergenceError, DimensionError
from ..integrators.simulate import pooled_states
from ..metrics.norms import WeightedNorm
from ..metrics.statistics import replica_batch_means
from ..models import FitMethod, FrictionOption, LangevinModel, make_langevin_sde
from ..utils.decorators import with_context
from .normal_equations import FitResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DescentSchedule:
    """ Stopping rule for fit_descent. """
    grad_tol: float = field(default_factory=lambda: current_config().GRAD_TOL)
    max_iter: int = field(default_factory=lambda: current_config().MAX_ITER)
    method: str = 'L-BFGS-B'


@with_context('inference')
def fit_descent(objective, theta0, schedule=None):
    """Minimise ``objective(theta) -> (value, gradient)`` from theta0.

    Deterministic given theta0 and the schedule. Returns theta0 untouched when
    its gradient already satisfies the tolerance.
    """
    schedule = schedule or DescentSchedule()
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    value0, grad0 = objective(theta0)
    grad0 = np.asarray(grad0, dtype=float)
    if grad0.shape != theta0.shape:
        raise DimensionError(f"gradient has shape {grad0.shape}, expected {theta0.shape}")
    norm0 = float(np.linalg.norm(grad0))
    if norm0 <= schedule.grad_tol:
        return _result(objective, theta0, float(value0), 0)

    scale = max(1.0, norm0)

    def fun(theta):
        value, grad = objective(theta)
        return float(value), np.asarray(grad, dtype=float)

    res = minimize(fun, theta0, jac=True, method=schedule.method,
                   options=dict(maxiter=schedule.max_iter, gtol=schedule.grad_tol * scale, ftol=0.0))
    grad_norm = float(np.linalg.norm(res.jac))
    if not res.success:
        if res.nit >= schedule.max_iter:
            raise ConvergenceError(f"descent stopped after {res.nit} iterations with |grad| = {grad_norm:.3e}",
                                   gradient_norm=grad_norm, iterations=res.nit)
        if grad_norm > np.sqrt(schedule.grad_tol) * scale:
            raise ConvergenceError(f"descent terminated abnormally ({res.message}) with |grad| = {grad_norm:.3e}",
                                   gradient_norm=grad_norm, iterations=res.nit)
        logger.warning(f"descent terminated at the line-search precision limit, |grad| = {grad_norm:.3e}")
    logger.info(f"descent converged in {res.nit} iterations, |grad| = {grad_norm:.3e}")
    return _result(objective, res.x, float(res.fun), res.nit)


def _result(objective, theta, value, iterations):
    se = getattr(objective, 'objective_se', None)
    return FitResult(theta=np.asarray(theta, dtype=float), objective=value,
                     objective_se=None if se is None else float(se(theta)), std_errors=None,
                     method=FitMethod.DESCENT, n_samples=getattr(objective, 'n_samples', 0))


class StationaryRERObjective:
    """ theta -> (1/2 E ||b(X) - b~(X; theta)||_Xi^2, gradient) on a fixed sample set.

    Evaluated in microscopic space: b~ is the reconstructed drift, so the
    mismatch is Pi^# (Pi b - bbar) with bbar = fixed + D(xbar) theta. The same
    samples serve every theta.
    """

    def __init__(self, x, drift_values, design, cg_map, norm, fixed=None, n_replicas=1):
        x = np.asarray(x, dtype=float)
        drift_values = np.asarray(drift_values, dtype=float)
        if drift_values.shape != x.shape:
            raise DimensionError(f"drift values {drift_values.shape} do not match states {x.shape}")
        projected = cg_map.apply(drift_values)
        if fixed is not None:
            projected = projected - fixed
        self.n_samples, self.n_replicas = x.shape[0], n_replicas
        # (I - Pi^# Pi) b cancels in b - b~
        self._residual0 = norm.transform(cg_map.lift(projected), x)
        lifted_columns = cg_map.lift(np.swapaxes(design, -1, -2))  # (N, K, n)
        self._jacobian = np.swapaxes(norm.transform(lifted_columns, x[:, None, :]), -1, -2)

    @classmethod
    def overdamped(cls, samples, model, family, cg_map):
        x, n_replicas = pooled_states(samples)
        norm = WeightedNorm.from_sigma(model.diffusion)
        return cls(x, model.drift_at(x), family.design(cg_map.apply(x)), cg_map, norm, n_replicas=n_replicas)

    @classmethod
    def langevin(cls, samples, model, family, pm, friction_option=FrictionOption.A):
        """Phase-space objective of a Langevin model; CG drift (Mbar^-1 pbar, Fbar - gamma_bar Mbar^-1 pbar)."""
        if not isinstance(model, LangevinModel) or not isinstance(pm, PhaseCGMap):
            raise DimensionError("the Langevin objective needs a LangevinModel and a PhaseCGMap")
        x, n_replicas = pooled_states(samples)
        gamma_bar = cg_friction(model, pm, friction_option)
        phase = pm.phase_map
        xbar = phase.apply(x)
        m = pm.m
        qbar, pbar = xbar[:, :m], xbar[:, m:]
        cg_velocity = pbar / pm.cg_mass_diagonal
        fixed = np.concatenate([cg_velocity, -cg_velocity @ gamma_bar.T], axis=1)
        force_design = family.design(qbar)
        design = np.concatenate([np.zeros_like(force_design), force_design], axis=1)
        sigma = np.vstack([np.zeros((model.dof, model.dof)), model.noise])
        norm = WeightedNorm.from_sigma(sigma)
        drift = make_langevin_sde(model).drift_at(x)
        return cls(x, drift, design, phase, norm, fixed=fixed, n_replicas=n_replicas)

    @property
    def size(self):
        return self._jacobian.shape[-1]

    def _errors(self, theta):
        return self._residual0 - np.einsum('nik,k->ni', self._jacobian, np.asarray(theta, dtype=float))

    def __call__(self, theta):
        errors = self._errors(theta)
        value = 0.5 * np.einsum('ni,ni->n', errors, errors).mean()
        gradient = -np.einsum('nik,ni->k', self._jacobian, errors) / self.n_samples
        return float(value), gradient

    def objective_se(self, theta):
        errors = self._errors(theta)
        _, se = replica_batch_means(0.5 * np.einsum('ni,ni->n', errors, errors), self.n_replicas)
        return float(se)
