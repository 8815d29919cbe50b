# File: pathcg/metrics/rer.py
# Path-space relative entropy estimators. Objectives are reported up to
# theta-independent additive constants.

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import CGDiffusionError, DimensionError, HypothesisError
from ..integrators.simulate import Ensemble, RngSpec, pooled_states
from ..models import BBKConvention, RERMode
from .norms import WeightedNorm
from .statistics import iid_mean, replica_batch_means

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RERReport:
    """ Monte Carlo estimate of a relative entropy (rate) with its standard error. """
    value: float
    std_error: float
    n_samples: int
    mode: RERMode

    @property
    def consistent(self):
        """Nonnegative up to three standard errors."""
        return self.value >= -3 * self.std_error

    def to_text(self):
        return f"value={self.value!r} se={self.std_error!r} n={self.n_samples} mode={self.mode.value}"


def _norm(sigma):
    return sigma if isinstance(sigma, WeightedNorm) else WeightedNorm.from_sigma(sigma)


def rer_stationary(samples, b, b_tilde, sigma):
    """E_mu[1/2 ||b(X) - b~(X)||_Xi^2] over stationary samples.

    ``sigma`` is the diffusion (array or callable) or a prepared WeightedNorm.
    """
    x, n_replicas = pooled_states(samples)
    norm = _norm(sigma)
    integrand = 0.5 * norm.squared(np.asarray(b(x)) - np.asarray(b_tilde(x)), x)
    value, se = replica_batch_means(integrand, n_replicas)
    return RERReport(value=float(value), std_error=float(se), n_samples=x.shape[0], mode=RERMode.STATIONARY)


def re_finite_time(paths, b, b_tilde, sigma, initial_term=0.0):
    """1/2 int_0^T ||b - b~||_Xi^2 ds averaged over paths, plus R(mu_0 | nu_0).

    The integral is the left-endpoint rectangle rule at the recorded states;
    a list of trajectories must share step and length.
    """
    if not isinstance(paths, Ensemble):
        paths = Ensemble.from_trajectories(paths)
    if paths.length < 2:
        raise DimensionError("finite-time relative entropy needs at least one step")
    norm = _norm(sigma)
    x = paths.states[:, :-1, :]
    integrand = 0.5 * norm.squared(np.asarray(b(x)) - np.asarray(b_tilde(x)), x)
    per_path = integrand.sum(axis=1) * paths.step + float(initial_term)
    value, se = iid_mean(per_path)
    return RERReport(value=float(value), std_error=float(se), n_samples=paths.n_replicas,
                     mode=RERMode.FINITE_TIME)


# --- Discrete-scheme objectives ---

@dataclass(frozen=True)
class DiscreteRERPieces:
    """ A(theta) and B(theta) of the Euler-scheme RER; the objective is A/h + B. """
    a: float
    a_se: float
    b: float
    b_se: float
    h: float
    cg_dim: int
    b_gradient: Optional[np.ndarray] = None

    @property
    def objective(self):
        return self.a / self.h + self.b

    @property
    def objective_se(self):
        return float(np.hypot(self.a_se / self.h, self.b_se))

    @property
    def limit_objective(self):
        """Small-h reduction for a fixed CG diffusion: only B depends on theta."""
        return self.b

    def to_report(self):
        return RERReport(value=float(self.objective), std_error=self.objective_se, n_samples=0,
                         mode=RERMode.DISCRETE)


def _cholesky(cov, what):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise CGDiffusionError(f"{what} is not positive definite at a sample")


def discrete_rer_overdamped(samples, model, cg_map, family, theta, h, cg_covariance=None):
    """A(theta), B(theta) for the Euler scheme of an overdamped micro model and a CG family.

    ``cg_covariance`` is Sigma_bar: None (use Pi Sigma Pi^T), a constant (m, m)
    array, or a callable of the CG states returning (..., m, m).
    """
    x, n_replicas = pooled_states(samples)
    pi = cg_map.matrix
    m = cg_map.m
    sigma = model.diffusion_at(x)
    micro_cov = pi @ (sigma @ np.swapaxes(sigma, -1, -2)) @ pi.T
    xbar = cg_map.apply(x)
    if cg_covariance is None:
        cg_cov = micro_cov
    elif callable(cg_covariance):
        cg_cov = np.asarray(cg_covariance(xbar), dtype=float)
    else:
        cg_cov = np.broadcast_to(np.asarray(cg_covariance, dtype=float), micro_cov.shape)
    if cg_cov.shape != micro_cov.shape:
        raise DimensionError(f"CG covariance has shape {cg_cov.shape}, expected {micro_cov.shape}")
    chol = _cholesky(cg_cov, "CG covariance")
    # Pi Sigma Pi^T Sigma_bar^-1 is similar to L^-1 Pi Sigma Pi^T L^-T
    whitened = np.linalg.solve(chol, np.linalg.solve(chol, micro_cov).swapaxes(-1, -2))
    _, logdet = np.linalg.slogdet(whitened)
    a_values = 0.5 * (-logdet + np.trace(whitened, axis1=-2, axis2=-1))

    design = family.design(xbar)
    theta = family.theta if theta is None else np.asarray(theta, dtype=float)
    residual = model.drift_at(x) @ pi.T - design @ theta
    white_res = np.linalg.solve(chol, residual[..., None])[..., 0]
    b_values = 0.5 * np.einsum('...i,...i->...', white_res, white_res)
    # grad B = -E[D^T Sigma_bar^-1 r]
    white_design = np.linalg.solve(chol, design)
    b_grad = -np.einsum('...ik,...i->...k', white_design, white_res).mean(axis=0)

    a, a_se = replica_batch_means(a_values, n_replicas)
    b, b_se = replica_batch_means(b_values, n_replicas)
    return DiscreteRERPieces(a=float(a), a_se=float(a_se), b=float(b), b_se=float(b_se), h=float(h),
                             cg_dim=m, b_gradient=b_grad)


@dataclass(frozen=True)
class BBKObjective:
    """ C(theta) and D_h(theta) of the BBK-scheme RER with their theta-gradients. """
    c: float
    c_se: float
    d: float
    d_se: float
    c_gradient: np.ndarray
    d_gradient: np.ndarray
    h: float

    @property
    def objective(self):
        return self.c + self.d

    @property
    def objective_se(self):
        return float(np.hypot(self.c_se, self.d_se))

    @property
    def gradient(self):
        return self.c_gradient + self.d_gradient

    @property
    def smoothing_ratio(self):
        """D_h / (4 C); tends to 1 as h -> 0."""
        return self.d / (4 * self.c) if self.c > 0 else np.nan

    def gradient_ratio(self):
        """Componentwise grad(C + D_h) / grad(5 C); tends to 1 as h -> 0."""
        with np.errstate(divide='ignore', invalid='ignore'):
            return self.gradient / (5 * self.c_gradient)


def _scalar_of(matrix, what):
    matrix = np.asarray(matrix, dtype=float)
    value = matrix[0, 0]
    if np.max(np.abs(matrix - value * np.eye(matrix.shape[0]))) > 1e-12 * max(abs(value), 1.0):
        raise HypothesisError(f"{what} must be a scalar multiple of the identity")
    return float(value)


def discrete_rer_bbk(samples, model, phase_map, family, theta, h, rng=None,
                     convention=BBKConvention.STANDARD):
    """C(theta) and the one-step smoothed D_h(theta) for a BBK-discretised Langevin model.

    Requires equal particle masses and scalar friction and noise. D_h evaluates
    the force mismatch at q' drawn from the one-step position kernel
    N(q + h M^-1 (p + F h/2 - gamma M^-1 p h/2), sigma^2 h^3 / (2 m^2) I); the
    same draws are reused for every theta when ``rng`` is fixed.
    """
    masses = model.masses
    if np.ptp(masses) > 0:
        raise HypothesisError("the BBK objective requires equal particle masses")
    gamma = _scalar_of(model.friction, "friction")
    s = _scalar_of(model.noise, "noise")
    if s <= 0:
        raise HypothesisError("noise amplitude must be positive")
    mass = float(masses[0])
    sign = 1.0 if BBKConvention(convention) is BBKConvention.STANDARD else -1.0

    x, n_replicas = pooled_states(samples)
    q, p = model.split(x)
    rng = rng or RngSpec(0)
    theta = family.theta if theta is None else np.asarray(theta, dtype=float)
    pi_q, pi_p = phase_map.pos_map, phase_map.mom_map

    force = model.force_at(q)
    design = family.design(pi_q.apply(q))
    residual = pi_p.apply(force) - design @ theta
    c_values = np.einsum('...i,...i->...', residual, residual) / (4 * s ** 2)
    c_grad = -(np.einsum('...ik,...i->...k', design, residual) / (2 * s ** 2)).mean(axis=0)

    mean = q + (h / mass) * (p + sign * force * (h / 2) - gamma * p / mass * (h / 2))
    spread = s * np.sqrt(h ** 3 / 2) / mass
    q_next = mean + spread * rng.generator(0).standard_normal(q.shape)
    design_next = family.design(pi_q.apply(q_next))
    residual_next = pi_p.apply(model.force_at(q_next)) - design_next @ theta
    d_values = np.einsum('...i,...i->...', residual_next, residual_next) / s ** 2
    d_grad = -(2 * np.einsum('...ik,...i->...k', design_next, residual_next) / s ** 2).mean(axis=0)

    c, c_se = replica_batch_means(c_values, n_replicas)
    d, d_se = replica_batch_means(d_values, n_replicas)
    return BBKObjective(c=float(c), c_se=float(c_se), d=float(d), d_se=float(d_se),
                        c_gradient=c_grad, d_gradient=d_grad, h=float(h))
