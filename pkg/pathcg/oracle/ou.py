# File: pathcg/oracle/ou.py
# Closed-form ground truth for Ornstein-Uhlenbeck test beds dX = -A X dt + sigma dB.

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..app_config import current_config
from ..errors import DegenerateDataError, DimensionError, IllConditionedError, UnstableModelError
from ..integrators.simulate import Trajectory
from ..metrics.norms import WeightedNorm
from ..models import SDEModel, as_square_matrix
from ..utils.decorators import returns_finite

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OUModel:
    """ Linear drift b(x) = -A x with constant noise sigma; A must be stable. """
    A: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"A must be square, got {a.shape}")
        sigma = np.asarray(self.sigma, dtype=float)
        sigma = as_square_matrix(sigma, a.shape[0], 'sigma') if sigma.ndim < 2 else sigma
        if sigma.shape[0] != a.shape[0]:
            raise DimensionError(f"sigma has {sigma.shape[0]} rows, A has {a.shape[0]}")
        eigenvalues = np.linalg.eigvals(a)
        if np.any(eigenvalues.real <= 0):
            raise UnstableModelError(f"A has eigenvalues with non-positive real part: {eigenvalues}")
        object.__setattr__(self, 'A', a)
        object.__setattr__(self, 'sigma', sigma)

    @property
    def dim(self):
        return self.A.shape[0]

    @property
    def noise_covariance(self):
        return self.sigma @ self.sigma.T

    @property
    def covariance(self):
        """Stationary covariance C with A C + C A^T = sigma sigma^T."""
        return lyapunov_solve(self.A, self.noise_covariance)

    def drift(self, x):
        return -np.asarray(x, dtype=float) @ self.A.T

    def to_sde(self, name='ou'):
        return SDEModel(dim=self.dim, drift=self.drift, diffusion=self.sigma, name=name)

    def stationary_sampler(self):
        """Callable drawing one state from N(0, C) with the generator it is given."""
        factor = np.linalg.cholesky(self.covariance)
        return lambda generator: factor @ generator.standard_normal(self.dim)

    def stationary_samples(self, n, generator):
        """n iid draws from N(0, C) with one generator."""
        factor = np.linalg.cholesky(self.covariance)
        return generator.standard_normal((n, self.dim)) @ factor.T


@returns_finite('Lyapunov solve')
def lyapunov_solve(A, Q):
    """Solve A C + C A^T = Q by a direct Kronecker-vectorised linear solve."""
    a = np.atleast_2d(np.asarray(A, dtype=float))
    q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = a.shape[0]
    if np.any(np.linalg.eigvals(a).real <= 0):
        raise UnstableModelError("Lyapunov equation of an unstable drift has no positive solution")
    eye = np.eye(n)
    operator = np.kron(eye, a) + np.kron(a, eye)
    c = np.linalg.solve(operator, q.reshape(-1, order='F')).reshape(n, n, order='F')
    c = 0.5 * (c + c.T)
    residual = np.max(np.abs(a @ c + c @ a.T - q))
    tol = current_config().LYAPUNOV_RESIDUAL_TOL * max(np.linalg.norm(q), np.finfo(float).tiny)
    if not residual <= tol:
        raise UnstableModelError(f"Lyapunov residual {residual:.3e} exceeds {tol:.3e}")
    return c


def _weight(ou, cg_map, weight):
    if weight is None:
        return WeightedNorm.for_cg(ou.sigma, cg_map).weight()
    return np.atleast_2d(np.asarray(weight, dtype=float))


def _normal_entries(ou, pi, family, w, mean, second):
    """Phi and a of the affine family under a Gaussian law with moments (mean, E[x x^T])."""
    ops, offs = family.operators, family.offsets
    if ops is None:
        raise DimensionError("closed-form oracles need an affine basis family")
    cg_second = pi @ second @ pi.T
    cg_mean = pi @ mean
    k = len(ops)
    phi = np.empty((k, k))
    a = np.empty(k)
    drift_cross = pi @ ou.A @ second @ pi.T   # E[(Pi A x)(Pi x)^T]
    drift_mean = pi @ ou.A @ mean
    for i in range(k):
        for j in range(k):
            phi[i, j] = (np.trace(ops[i].T @ w @ ops[j] @ cg_second)
                         + offs[i] @ w @ ops[j] @ cg_mean + (ops[i] @ cg_mean) @ w @ offs[j]
                         + offs[i] @ w @ offs[j])
        a[i] = -np.trace(ops[i].T @ w @ drift_cross) - offs[i] @ w @ drift_mean
    return 0.5 * (phi + phi.T), a


def _solve(phi, a):
    cond = np.linalg.cond(phi)
    if not cond <= current_config().MAX_CONDITION:
        raise IllConditionedError(f"oracle normal matrix is singular (condition number {cond:.3e})",
                                  condition_number=cond)
    return np.linalg.solve(phi, a)


def ou_optimal_theta(ou, cg_map, family, weight=None):
    """theta* of the stationary RER for an affine basis, from the Lyapunov covariance."""
    phi, a = _normal_entries(ou, cg_map.matrix, family, _weight(ou, cg_map, weight), np.zeros(ou.dim),
                             ou.covariance)
    return _solve(phi, a)


def ou_optimal_objective(ou, cg_map, family, weight=None):
    """Minimal value 1/2 (E||Pi b||_W^2 - a^T theta*) of the stationary RER."""
    w = _weight(ou, cg_map, weight)
    c = ou.covariance
    pi = cg_map.matrix
    phi, a = _normal_entries(ou, pi, family, w, np.zeros(ou.dim), c)
    theta = _solve(phi, a)
    total = np.trace(w @ pi @ ou.A @ c @ ou.A.T @ pi.T)
    return 0.5 * float(total - a @ theta)


def ou_transient_moments(ou, mean0, cov0, times):
    """Mean e^{-At} m0 and covariance e^{-At}(C0 - C)e^{-A^T t} + C at each time."""
    c = ou.covariance
    mean0 = np.asarray(mean0, dtype=float)
    cov0 = np.zeros((ou.dim, ou.dim)) if cov0 is None else np.asarray(cov0, dtype=float)
    means, covs = [], []
    for t in np.atleast_1d(times):
        prop = expm(-ou.A * t)
        means.append(prop @ mean0)
        covs.append(prop @ (cov0 - c) @ prop.T + c)
    return np.array(means), np.array(covs)


def ou_finite_time_theta(ou, cg_map, family, mean0, cov0, horizon, h, weight=None):
    """theta*(T) from left-endpoint time sums of the transient Gaussian moments."""
    steps = int(round(horizon / h))
    means, covs = ou_transient_moments(ou, mean0, cov0, np.arange(steps) * h)
    second = (covs + np.einsum('ti,tj->tij', means, means)).sum(axis=0) * h
    mean = means.sum(axis=0) * h
    phi, a = _normal_entries(ou, cg_map.matrix, family, _weight(ou, cg_map, weight), mean, second)
    return _solve(phi, a)


@dataclass(frozen=True)
class OUMLEResult:
    """ Closed-form Euler-OU drift coefficient with its asymptotic standard error. """
    theta: float
    std_error: float
    n_transitions: int


def discrete_ou_mle(series, h, sigma=None):
    """theta_hat = sum x_i (x_{i+1} - x_i) / (h sum x_i^2) for the Euler drift theta x.

    The SE is sqrt(sigma^2 / (h sum x_i^2)); without ``sigma`` the noise level
    is estimated from the increment residuals.
    """
    x = series.states if isinstance(series, Trajectory) else np.asarray(series, dtype=float)
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    if x.shape[1] != 1:
        raise DimensionError(f"the closed-form MLE needs a 1D series, got dimension {x.shape[1]}")
    x = x[:, 0]
    if x.size < 2:
        raise DegenerateDataError("the closed-form MLE needs at least one transition")
    if np.ptp(x) == 0:
        raise DegenerateDataError("constant series carries no information about the drift")
    head, increments = x[:-1], np.diff(x)
    denominator = h * np.sum(head ** 2)
    if denominator == 0:
        raise DegenerateDataError("zero denominator in the closed-form MLE")
    theta = float(np.sum(head * increments) / denominator)
    if sigma is None:
        sigma2 = float(np.mean((increments - theta * h * head) ** 2) / h)
    else:
        sigma2 = float(sigma) ** 2
    return OUMLEResult(theta=theta, std_error=float(np.sqrt(sigma2 / denominator)), n_transitions=head.size)


def gaussian_relative_entropy(mean0, cov0, mean1, cov1):
    """KL(N(m0, C0) | N(m1, C1))."""
    m0, m1 = np.atleast_1d(mean0).astype(float), np.atleast_1d(mean1).astype(float)
    c0, c1 = np.atleast_2d(cov0).astype(float), np.atleast_2d(cov1).astype(float)
    k = m0.size
    diff = m1 - m0
    solve = np.linalg.solve(c1, np.column_stack([c0, diff]))
    _, logdet0 = np.linalg.slogdet(c0)
    _, logdet1 = np.linalg.slogdet(c1)
    return 0.5 * float(np.trace(solve[:, :k]) + diff @ solve[:, k] - k + logdet1 - logdet0)
