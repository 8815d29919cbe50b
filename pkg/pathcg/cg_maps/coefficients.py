# File: pathcg/cg_maps/coefficients.py
# Coarse-grained diffusion and friction coefficients.

import logging
from dataclasses import dataclass

import numpy as np

from ..app_config import current_config
from ..errors import CGDiffusionError, FrictionConsistencyError
from ..models import FrictionOption, symmetric_sqrt
from ..utils.decorators import returns_finite
from .maps import PhaseCGMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CGDiffusion:
    """ Sigma_bar = Pi Sigma Pi^T and its symmetric square root sigma_bar. """
    covariance: np.ndarray
    factor: np.ndarray


def cg_diffusion(sigma, cg_map, x_samples=None, tol=None):
    """Sigma_bar = Pi sigma sigma^T Pi^T, required to be constant and positive definite.

    A callable ``sigma`` is evaluated on ``x_samples`` and the product must agree
    across samples within ``tol`` (relative), otherwise Sigma_bar is not a
    function of the CG state.
    """
    config = current_config()
    tol = config.CG_DIFFUSION_TOL if tol is None else tol
    pi = cg_map.mom_map.matrix if isinstance(cg_map, PhaseCGMap) else cg_map.matrix
    if callable(sigma):
        if x_samples is None:
            raise CGDiffusionError("state-dependent sigma needs x_samples")
        s = np.asarray(sigma(np.atleast_2d(x_samples)), dtype=float)
        covs = np.einsum('ij,sjk,slk,ml->sim', pi, s, s, pi)
        covariance = covs[0]
        spread = np.max(np.abs(covs - covariance))
        if spread > tol * max(np.max(np.abs(covariance)), 1.0):
            raise CGDiffusionError(
                f"Pi Sigma(x) Pi^T varies by {spread:.3e} across samples; CG diffusion is not a function of Pi x")
    else:
        s = np.asarray(sigma, dtype=float)
        covariance = pi @ s @ s.T @ pi.T
    covariance = 0.5 * (covariance + covariance.T)
    eigenvalues = np.linalg.eigvalsh(covariance)
    if eigenvalues.min() <= config.RANK_TOL * max(eigenvalues.max(), 0.0):
        raise CGDiffusionError(f"Pi Sigma Pi^T is not positive definite (eigenvalues {eigenvalues})")
    return CGDiffusion(covariance=covariance, factor=symmetric_sqrt(covariance))


@returns_finite('CG friction')
def cg_friction(model, pm, option=FrictionOption.A, tol=None):
    """CG friction: option a solves gamma_bar Pi_q = Pi_p gamma, option b is Pi_p gamma Pi_p^T."""
    config = current_config()
    option = FrictionOption(option)
    pi_q, pi_p = pm.pos_map, pm.mom_map.matrix
    target = pi_p @ model.friction
    if option is FrictionOption.A:
        tol = config.FRICTION_RESIDUAL_TOL if tol is None else tol
        gamma_bar = target @ pi_q.right_inverse
        residual = float(np.linalg.norm(gamma_bar @ pi_q.matrix - target))
        scale = float(np.linalg.norm(target))
        if residual > tol * max(scale, np.finfo(float).tiny):
            raise FrictionConsistencyError(
                f"gamma_bar Pi_q = Pi_p gamma has no solution (residual {residual:.3e}); use friction option b",
                residual=residual)
        return gamma_bar
    gamma_bar = target @ pi_p.T
    if model.equilibrium:
        diffusion = cg_diffusion(model.noise, pm)
        gap = np.max(np.abs(0.5 * model.beta * diffusion.covariance - gamma_bar))
        if gap > config.FD_TOL * max(np.max(np.abs(gamma_bar)), 1.0):
            logger.warning(f"CG fluctuation-dissipation mismatch {gap:.3e} for friction option b")
    return gamma_bar
