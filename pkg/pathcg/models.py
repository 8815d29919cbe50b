# File: pathcg/models.py
# Microscopic and coarse-grained dynamical models, independent of any integrator.

import enum
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .app_config import current_config
from .errors import (
    DimensionError, FluctuationDissipationError, HypothesisError, NumericalError, SingularDiffusionError
)

logger = logging.getLogger(__name__)

# Vectorised field: maps (..., n) arrays to (..., n) arrays
Field = Callable[[np.ndarray], np.ndarray]


# --- Enums ---

class Scheme(enum.Enum):
    """ Time-stepping schemes available to the simulator. """
    EULER_MARUYAMA = 'euler_maruyama'
    BBK = 'bbk'


class BBKConvention(enum.Enum):
    """ Sign of the force in the two BBK half-kicks. """
    STANDARD = 'standard'            # +F, consistent with dp = F dt - ...
    PAPER_LITERAL = 'paper_literal'  # -F in both half-kicks


class CGMapKind(enum.Enum):
    """ How a coarse-graining map was built. """
    CENTER_OF_MASS = 'center_of_mass'
    PROJECTION = 'projection'
    GENERAL = 'general'


class FrictionOption(enum.Enum):
    """ Choice of coarse-grained friction. """
    A = 'a'  # gamma_bar Pi_q = Pi_p gamma
    B = 'b'  # gamma_bar = Pi_p gamma Pi_p^T


class RERMode(enum.Enum):
    """ Which path-space information functional a report holds. """
    STATIONARY = 'stationary'
    FINITE_TIME = 'finite_time'
    DISCRETE = 'discrete'


class NormMode(enum.Enum):
    """ Weighted norms built from Xi = (sigma^T sigma)^-1 sigma^T. """
    XI_NORM = 'xi_norm'
    CG_XI_NORM = 'cg_xi_norm'


class FitMethod(enum.Enum):
    """ Estimator that produced a FitResult. """
    FORCE_MATCHING = 'fm'
    RER = 'rer'
    RE_FINITE_TIME = 're_finite'
    MLE = 'mle'
    DESCENT = 'descent'


# --- Helpers ---

def as_square_matrix(value, dim, name='matrix'):
    """Expand a scalar, a diagonal vector or a matrix to a (dim, dim) float array."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = float(arr) * np.eye(dim)
    elif arr.ndim == 1:
        if arr.shape[0] != dim:
            raise DimensionError(f"{name} diagonal has length {arr.shape[0]}, expected {dim}")
        arr = np.diag(arr)
    if arr.shape != (dim, dim):
        raise DimensionError(f"{name} has shape {arr.shape}, expected {(dim, dim)}")
    return arr


def has_full_column_rank(matrix, rank_tol=None):
    """Smallest singular value above rank_tol times the largest one."""
    if rank_tol is None:
        rank_tol = current_config().RANK_TOL
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[-1] == 0:
        return True
    s = np.linalg.svd(matrix, compute_uv=False)
    return bool(s.max() > 0 and s.min(axis=-1).min() > rank_tol * s.max())


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def symmetric_sqrt(matrix):
    """Symmetric positive square root through an eigendecomposition."""
    vals, vecs = np.linalg.eigh(0.5 * (matrix + matrix.T))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


# --- Models ---

@dataclass(frozen=True)
class SDEModel:
    """ dX = b(X) dt + sigma(X) dB on R^n with k-dimensional noise. """
    dim: int
    drift: Field
    diffusion: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]
    noise_dim: Optional[int] = None
    name: str = 'sde'
    check_rank: bool = field(default=True, compare=False)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DimensionError(f"SDE dimension must be positive, got {self.dim}")
        if callable(self.diffusion):
            if self.noise_dim is None:
                raise DimensionError("noise_dim is required for a state-dependent diffusion")
            return
        sigma = np.asarray(self.diffusion, dtype=float)
        if sigma.ndim < 2:
            sigma = as_square_matrix(sigma, self.dim, 'diffusion')
        if sigma.shape[0] != self.dim or sigma.shape[1] > self.dim:
            raise DimensionError(f"diffusion has shape {sigma.shape}, expected ({self.dim}, k<= {self.dim})")
        if self.check_rank and not has_full_column_rank(sigma):
            raise SingularDiffusionError(f"diffusion of {self.name} does not have full column rank")
        object.__setattr__(self, 'diffusion', _frozen(sigma))
        object.__setattr__(self, 'noise_dim', sigma.shape[1])

    @property
    def constant_diffusion(self):
        return not callable(self.diffusion)

    def drift_at(self, x):
        x = np.asarray(x, dtype=float)
        value = np.asarray(self.drift(x), dtype=float)
        if value.shape != x.shape:
            raise DimensionError(f"drift of {self.name} returned shape {value.shape} for input {x.shape}")
        return value

    def diffusion_at(self, x):
        """sigma(x) with shape (..., n, k)."""
        x = np.asarray(x, dtype=float)
        if self.constant_diffusion:
            return np.broadcast_to(self.diffusion, x.shape[:-1] + self.diffusion.shape)
        value = np.asarray(self.diffusion(x), dtype=float)
        expected = x.shape[:-1] + (self.dim, self.noise_dim)
        if value.shape != expected:
            raise DimensionError(f"diffusion of {self.name} returned shape {value.shape}, expected {expected}")
        if self.check_rank and not has_full_column_rank(value):
            raise SingularDiffusionError(f"diffusion of {self.name} lost column rank at an evaluated state")
        return value

    def __repr__(self):
        return f'<SDEModel {self.name} n={self.dim} k={self.noise_dim}>'


@dataclass(frozen=True)
class LangevinModel:
    """ dq = M^-1 p dt,  dp = F(q) dt - gamma M^-1 p dt + sigma dW  for N particles in R^d. """
    masses: np.ndarray
    force: Field
    friction: np.ndarray
    noise: np.ndarray
    beta: float = 1.0
    spatial_dim: int = 3
    conservative: bool = False
    equilibrium: bool = False
    name: str = 'langevin'

    def __post_init__(self):
        masses = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if masses.ndim != 1 or masses.size == 0:
            raise DimensionError("masses must be a non-empty vector, one entry per particle")
        if np.any(masses <= 0) or not np.all(np.isfinite(masses)):
            raise NumericalError("masses must be strictly positive")
        if self.spatial_dim < 1:
            raise DimensionError(f"spatial_dim must be positive, got {self.spatial_dim}")
        if not self.beta > 0:
            raise NumericalError(f"beta must be positive, got {self.beta}")
        dof = masses.size * self.spatial_dim
        object.__setattr__(self, 'masses', _frozen(masses))
        object.__setattr__(self, 'friction', _frozen(as_square_matrix(self.friction, dof, 'friction')))
        object.__setattr__(self, 'noise', _frozen(as_square_matrix(self.noise, dof, 'noise')))
        if self.equilibrium and not check_fluctuation_dissipation(self):
            raise FluctuationDissipationError(
                f"{self.name}: sigma sigma^T differs from 2 gamma / beta beyond FD_TOL")

    @classmethod
    def thermostatted(cls, masses, force, friction, beta=1.0, spatial_dim=3, conservative=True, name='langevin'):
        """Equilibrium model whose noise is the symmetric root of 2 gamma / beta."""
        masses = np.atleast_1d(np.asarray(masses, dtype=float))
        dof = masses.size * spatial_dim
        gamma = as_square_matrix(friction, dof, 'friction')
        noise = symmetric_sqrt(2.0 * gamma / beta)
        return cls(masses=masses, force=force, friction=gamma, noise=noise, beta=beta,
                   spatial_dim=spatial_dim, conservative=conservative, equilibrium=True, name=name)

    @property
    def n_particles(self):
        return self.masses.size

    @property
    def dof(self):
        return self.masses.size * self.spatial_dim

    @property
    def mass_diagonal(self):
        return np.repeat(self.masses, self.spatial_dim)

    @property
    def inverse_mass(self):
        return 1.0 / self.mass_diagonal

    def force_at(self, q):
        q = np.asarray(q, dtype=float)
        value = np.asarray(self.force(q), dtype=float)
        if value.shape != q.shape:
            raise DimensionError(f"force of {self.name} returned shape {value.shape}, expected {q.shape}")
        return value

    def split(self, x):
        """(q, p) views of phase-space states (..., 2dN)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 2 * self.dof:
            raise DimensionError(f"phase state has {x.shape[-1]} components, expected {2 * self.dof}")
        return x[..., :self.dof], x[..., self.dof:]

    def __repr__(self):
        return f'<LangevinModel {self.name} N={self.n_particles} d={self.spatial_dim}>'


# Names of the runs that must not evaluate a Gibbs density; shared across threads.
_gibbs_forbidden = []


@contextmanager
def forbid_gibbs_density(run):
    """Make every GibbsSpec.log_weight call inside the block raise HypothesisError."""
    _gibbs_forbidden.append(run)
    try:
        yield
    finally:
        _gibbs_forbidden.remove(run)


@dataclass(frozen=True)
class GibbsSpec:
    """ Gibbs density exp(-beta U(q)) / Z; Z is never computed.

    log_weight is the only place a Gibbs density is evaluated, so
    forbid_gibbs_density can guard non-equilibrium pipelines.
    """
    potential: Callable[[np.ndarray], np.ndarray]
    beta: float = 1.0

    def log_weight(self, q):
        if _gibbs_forbidden:
            raise HypothesisError(f"Gibbs density evaluated during {_gibbs_forbidden[-1]}")
        return -self.beta * np.asarray(self.potential(q), dtype=float)


@dataclass(frozen=True)
class ParametricDriftFamily:
    """ b(xbar; theta) = sum_k theta_k phi_k(xbar), linear in theta. """
    cg_dim: int
    basis: Tuple[Field, ...]
    theta: Optional[np.ndarray] = None
    names: Tuple[str, ...] = ()
    operators: Optional[np.ndarray] = None  # (K, m, m) when phi_k(x) = L_k x + c_k
    offsets: Optional[np.ndarray] = None    # (K, m)

    def __post_init__(self):
        basis = tuple(self.basis)
        if not basis:
            raise DimensionError("a drift family needs at least one basis function")
        object.__setattr__(self, 'basis', basis)
        theta = np.zeros(len(basis)) if self.theta is None else np.asarray(self.theta, dtype=float).reshape(-1)
        if theta.shape != (len(basis),):
            raise DimensionError(f"theta has {theta.size} entries for {len(basis)} basis functions")
        object.__setattr__(self, 'theta', _frozen(theta))
        if not self.names:
            object.__setattr__(self, 'names', tuple(f"phi_{k}" for k in range(len(basis))))
        if self.operators is not None:
            ops = np.asarray(self.operators, dtype=float)
            if ops.shape != (len(basis), self.cg_dim, self.cg_dim):
                raise DimensionError(f"operators have shape {ops.shape}")
            offsets = np.zeros((len(basis), self.cg_dim)) if self.offsets is None else self.offsets
            object.__setattr__(self, 'operators', _frozen(ops))
            object.__setattr__(self, 'offsets', _frozen(offsets))

    @property
    def size(self):
        return len(self.basis)

    @property
    def is_affine(self):
        return self.operators is not None

    def design(self, xbar):
        """Matrix with columns phi_k(xbar); shape (..., m, K)."""
        xbar = np.asarray(xbar, dtype=float)
        if xbar.shape[-1] != self.cg_dim:
            raise DimensionError(f"CG state has {xbar.shape[-1]} components, family expects {self.cg_dim}")
        columns = []
        for k, phi in enumerate(self.basis):
            value = np.asarray(phi(xbar), dtype=float)
            if value.shape != xbar.shape:
                raise DimensionError(
                    f"basis function {self.names[k]} returned shape {value.shape}, expected {xbar.shape}")
            columns.append(value)
        return np.stack(columns, axis=-1)

    def __call__(self, xbar, theta=None):
        theta = self.theta if theta is None else np.asarray(theta, dtype=float)
        return self.design(xbar) @ theta

    def with_theta(self, theta):
        return replace(self, theta=np.asarray(theta, dtype=float))

    def scaled(self, c):
        """Family with every basis function multiplied by c."""
        basis = tuple((lambda x, phi=phi: c * np.asarray(phi(x), dtype=float)) for phi in self.basis)
        operators = None if self.operators is None else c * self.operators
        offsets = None if self.offsets is None else c * self.offsets
        return replace(self, basis=basis, operators=operators, offsets=offsets)

    def __repr__(self):
        return f'<ParametricDriftFamily m={self.cg_dim} K={self.size}>'


# --- Operations ---

def check_fluctuation_dissipation(model, tol=None):
    """True iff max |sigma sigma^T - 2 gamma / beta| <= tol."""
    if tol is None:
        tol = current_config().FD_TOL
    sigma = np.asarray(model.noise, dtype=float)
    gap = sigma @ sigma.T - 2.0 * np.asarray(model.friction, dtype=float) / model.beta
    return bool(np.max(np.abs(gap)) <= tol)


def make_langevin_sde(model):
    """Phase-space SDE of a Langevin model: x = (q, p), sigma_0 = (0, sigma)^T."""
    dof = model.dof
    sample_force = model.force(np.zeros(dof))
    if np.shape(sample_force) != (dof,):
        raise DimensionError(f"force of {model.name} returns shape {np.shape(sample_force)}, expected ({dof},)")
    inverse_mass = model.inverse_mass
    gamma_t = model.friction.T

    def drift(x):
        q, p = x[..., :dof], x[..., dof:]
        velocity = p * inverse_mass
        return np.concatenate([velocity, model.force_at(q) - velocity @ gamma_t], axis=-1)

    diffusion = np.vstack([np.zeros((dof, dof)), model.noise])
    return SDEModel(dim=2 * dof, drift=drift, diffusion=diffusion, name=f"{model.name}-phase")


def make_overdamped_sde(grad_potential, sigma, dim=None, divergence=None, name='overdamped'):
    """dX = -1/2 Sigma grad U dt + 1/2 div Sigma dt + sigma dB with constant sigma.

    ``divergence`` supplies the 1/2 div Sigma term analytically; it vanishes for
    constant sigma and is accepted for callers that fold a correction into it.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim < 2:
        if dim is None:
            raise DimensionError("dim is required for a scalar or diagonal sigma")
        sigma = as_square_matrix(sigma, dim, 'sigma')
    n = sigma.shape[0]
    big_sigma = sigma @ sigma.T

    def drift(x):
        value = -0.5 * np.asarray(grad_potential(x), dtype=float) @ big_sigma.T
        if divergence is not None:
            value = value + 0.5 * np.asarray(divergence(x), dtype=float)
        return value

    return SDEModel(dim=n, drift=drift, diffusion=sigma, name=name)


def eval_parametric_drift(family, xbar, theta=None):
    """sum_k theta_k phi_k(xbar)."""
    xbar = np.asarray(xbar, dtype=float)
    if xbar.shape[-1] != family.cg_dim:
        raise DimensionError(f"CG state has {xbar.shape[-1]} components, family expects {family.cg_dim}")
    return family(xbar, theta)


def check_conservative_force(force, gibbs, points, rel_tol=1e-5, step=1e-6):
    """Central-difference gradient of the Gibbs log-weight, divided by beta, against F on the given points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[-1]
    worst = 0.0
    for x in points:
        grad = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = step
            grad[i] = (float(gibbs.log_weight(x + e)) - float(gibbs.log_weight(x - e))) / (2 * step * gibbs.beta)
        f = np.asarray(force(x), dtype=float)
        scale = max(np.linalg.norm(f), 1.0)
        worst = max(worst, np.linalg.norm(f - grad) / scale)
    if worst > rel_tol:
        logger.warning(f"force deviates from -grad U by {worst:.3e} (relative)")
    return worst <= rel_tol
