# File: pathcg/metrics/likelihood.py
# Path log-likelihoods of theta-linear Gaussian transition kernels.
#
# Every kernel factorises into Gaussian factors y ~ N(G theta, S) with S
# independent of theta, so the log-likelihood is an exact quadratic in theta
# and is stored through its sufficient statistics.

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from ..errors import DimensionError, SingularDiffusionError
from ..integrators.simulate import Ensemble, Trajectory
from ..models import BBKConvention

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class GaussianFactor:
    """ Transitions y_i ~ N(G_i theta, S), plus a theta-independent log-Jacobian per transition. """
    y: np.ndarray          # (N, d)
    design: np.ndarray     # (N, d, K)
    covariance: np.ndarray  # (d, d)
    log_jacobian: float = 0.0

    def whitened(self):
        """(L^-1 y, L^-1 G, log det S) with S = L L^T."""
        try:
            chol = np.linalg.cholesky(self.covariance)
        except np.linalg.LinAlgError:
            raise SingularDiffusionError("transition covariance is degenerate")
        n, d = self.y.shape
        y = solve_triangular(chol, self.y.T, lower=True).T
        k = self.design.shape[-1]
        g = solve_triangular(chol, self.design.transpose(1, 0, 2).reshape(d, n * k), lower=True)
        g = g.reshape(d, n, k).transpose(1, 0, 2)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return y, g, logdet


def _transitions(states):
    """Pooled (x_i, x_{i+1}) pairs from an array (..., T+1, d)."""
    states = np.asarray(states, dtype=float)
    if states.ndim == 2:
        states = states[None]
    if states.shape[1] < 2:
        raise DimensionError("a likelihood needs at least one transition")
    d = states.shape[-1]
    return states[:, :-1].reshape(-1, d), states[:, 1:].reshape(-1, d)


@dataclass(frozen=True)
class EulerKernel:
    """ xbar' ~ N(xbar + (f(xbar) + D(xbar) theta) h, Sigma_bar h). """
    family: object
    covariance: np.ndarray
    h: float
    fixed_drift: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def factors(self, states):
        x, x_next = _transitions(states)
        m = self.family.cg_dim
        if x.shape[-1] != m:
            raise DimensionError(f"CG series has {x.shape[-1]} components, family expects {m}")
        y = x_next - x
        if self.fixed_drift is not None:
            y = y - self.h * np.asarray(self.fixed_drift(x), dtype=float)
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        return [GaussianFactor(y=y, design=self.h * self.family.design(x), covariance=cov * self.h)]


@dataclass(frozen=True)
class BBKKernel:
    """ Two-factor Gaussian kernel of the BBK scheme on CG phase states (qbar, pbar).

    The position factor is the half-kick plus drift; the momentum factor is the
    implicit half-kick, which carries the Jacobian |det K| with
    K = I + gamma_bar Mbar^-1 h/2.
    """
    family: object
    cg_masses: np.ndarray   # per CG coordinate
    friction: np.ndarray
    covariance: np.ndarray
    h: float
    convention: BBKConvention = BBKConvention.STANDARD

    def factors(self, states):
        x, x_next = _transitions(states)
        m = self.family.cg_dim
        if x.shape[-1] != 2 * m:
            raise DimensionError(f"CG phase series has {x.shape[-1]} components, expected {2 * m}")
        h = self.h
        s = 1.0 if BBKConvention(self.convention) is BBKConvention.STANDARD else -1.0
        minv = 1.0 / np.broadcast_to(np.asarray(self.cg_masses, dtype=float), (m,))
        gamma = np.atleast_2d(np.asarray(self.friction, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        q, p = x[:, :m], x[:, m:]
        q_next, p_next = x_next[:, :m], x_next[:, m:]

        friction_force = (p * minv) @ gamma.T
        y_q = q_next - q - h * minv * (p - friction_force * (h / 2))
        g_q = s * (h ** 2 / 2) * minv[:, None] * self.family.design(q)
        s_q = (h ** 3 / 2) * minv[:, None] * cov * minv[None, :]

        k = np.eye(m) + gamma * minv[None, :] * (h / 2)
        sign, logdet_k = np.linalg.slogdet(k)
        if sign <= 0:
            raise SingularDiffusionError("implicit friction factor I + gamma_bar Mbar^-1 h/2 is singular")
        y_p = p_next @ k.T - (q_next - q) / (minv * h)
        g_p = s * (h / 2) * self.family.design(q_next)
        s_p = cov * (h / 2)
        return [GaussianFactor(y=y_q, design=g_q, covariance=s_q),
                GaussianFactor(y=y_p, design=g_p, covariance=s_p, log_jacobian=float(logdet_k))]


class PathLikelihood:
    """log L(theta) = sum over transitions of the Gaussian log-densities; exact quadratic in theta."""

    def __init__(self, factors):
        factors = list(factors)
        k = factors[0].design.shape[-1]
        self.n_transitions = factors[0].y.shape[0]
        self._quad = np.zeros((k, k))
        self._lin = np.zeros(k)
        self._const = 0.0
        for factor in factors:
            y, g, logdet = factor.whitened()
            n, d = y.shape
            self._quad += np.einsum('nik,nil->kl', g, g)
            self._lin += np.einsum('nik,ni->k', g, y)
            self._const += (-0.5 * float(np.sum(y * y)) - 0.5 * n * (d * LOG_2PI + logdet)
                            + n * factor.log_jacobian)
        self._quad = 0.5 * (self._quad + self._quad.T)

    @property
    def size(self):
        return self._lin.size

    def __call__(self, theta):
        """(log L(theta), grad log L(theta))."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.size:
            raise DimensionError(f"theta has {theta.size} entries, likelihood expects {self.size}")
        value = self._const + self._lin @ theta - 0.5 * theta @ self._quad @ theta
        return float(value), self._lin - self._quad @ theta

    def hessian(self):
        return -self._quad

    def is_concave(self, tol=0.0):
        return bool(np.linalg.eigvalsh(self._quad).min() > tol)

    def argmax(self):
        """Maximiser and its standard errors sqrt(diag(information^-1))."""
        if not self.is_concave():
            logger.warning("path likelihood is not strictly concave; argmax is not unique")
        try:
            factor = cho_factor(self._quad)
        except np.linalg.LinAlgError:
            raise SingularDiffusionError("likelihood information matrix is singular")
        theta = cho_solve(factor, self._lin)
        se = np.sqrt(np.diag(cho_solve(factor, np.eye(self.size))))
        return theta, se


def path_log_likelihood(cg_series, kernel):
    """L_s for a single series or the finite-ensemble L summed over replicas."""
    if isinstance(cg_series, Ensemble):
        states = cg_series.states
    elif isinstance(cg_series, Trajectory):
        states = cg_series.states
    else:
        states = np.asarray(cg_series, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
    return PathLikelihood(kernel.factors(states))
