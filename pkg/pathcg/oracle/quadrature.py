# File: pathcg/oracle/quadrature.py
# Tensor-grid trapezoid expectations in one or two dimensions.

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from ..app_config import current_config
from ..errors import QuadratureError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    """ Per-axis grid mean +- half_width * scale with ``points`` nodes. """
    center: np.ndarray
    scale: np.ndarray
    half_width: float = field(default_factory=lambda: current_config().QUAD_HALF_WIDTH)
    points: int = field(default_factory=lambda: current_config().QUAD_POINTS)

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        scale = np.broadcast_to(np.asarray(self.scale, dtype=float), center.shape).copy()
        if center.size > 2:
            raise QuadratureError(f"grid quadrature supports dimension <= 2, got {center.size}")
        if np.any(scale <= 0):
            raise QuadratureError("grid scales must be positive")
        if self.points < 5 or self.points % 2 == 0:
            raise QuadratureError("grids need an odd number of at least 5 points")
        object.__setattr__(self, 'center', center)
        object.__setattr__(self, 'scale', scale)

    @classmethod
    def gaussian(cls, mean, cov, **kwargs):
        return cls(center=mean, scale=np.sqrt(np.diag(np.atleast_2d(cov))), **kwargs)

    @property
    def dim(self):
        return self.center.size

    def axes(self, points=None):
        points = self.points if points is None else points
        return [np.linspace(c - self.half_width * s, c + self.half_width * s, points)
                for c, s in zip(self.center, self.scale)]


@dataclass(frozen=True)
class QuadratureResult:
    """ Expectation with the fine/coarse grid difference as error estimate. """
    value: float
    error: float
    mass: float
    tail_mass: float


def _integrate(values, axes):
    for ax in reversed(axes):
        values = trapezoid(values, ax, axis=-1)
    return values


def _evaluate(density, integrand, axes):
    mesh = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1)
    p = np.asarray(density(mesh), dtype=float).reshape(mesh.shape[:-1])
    f = np.asarray(integrand(mesh), dtype=float).reshape(mesh.shape[:-1])
    return p, p * f


def quadrature_expectation(density, integrand, grid):
    """E[f] = int p f / int p on the grid, refined against a grid with half the spacing removed.

    Raises QuadratureError when the mass outside the inner +-(half_width - 1)
    band exceeds QUAD_TAIL_MASS or when the two grids disagree beyond QUAD_RTOL.
    """
    config = current_config()
    fine_axes = grid.axes()
    coarse_axes = grid.axes((grid.points - 1) // 2 + 1)
    p, pf = _evaluate(density, integrand, fine_axes)
    mass = float(_integrate(p, fine_axes))
    if not mass > 0:
        raise QuadratureError("density has no mass on the grid")
    value = float(_integrate(pf, fine_axes)) / mass

    inner = np.ones(p.shape, dtype=bool)
    for i, (ax, c, s) in enumerate(zip(fine_axes, grid.center, grid.scale)):
        shape = [1] * grid.dim
        shape[i] = ax.size
        inner &= (np.abs(ax - c) <= (grid.half_width - 1) * s).reshape(shape)
    tail_mass = float(_integrate(np.where(inner, 0.0, p), fine_axes)) / mass
    if tail_mass > config.QUAD_TAIL_MASS:
        raise QuadratureError(f"grid tails carry mass {tail_mass:.3e}; widen the grid")

    cp, cpf = _evaluate(density, integrand, coarse_axes)
    coarse = float(_integrate(cpf, coarse_axes)) / float(_integrate(cp, coarse_axes))
    error = abs(value - coarse)
    if error > config.QUAD_RTOL * max(abs(value), 1.0):
        raise QuadratureError(f"quadrature did not converge: fine {value!r} vs coarse {coarse!r}")
    return QuadratureResult(value=value, error=error, mass=mass, tail_mass=tail_mass)


def gaussian_density(mean, cov):
    """Vectorised N(mean, cov) density on (..., d) points."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    inv = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    norm = -0.5 * (mean.size * np.log(2 * np.pi) + logdet)

    def density(x):
        d = np.asarray(x, dtype=float) - mean
        return np.exp(norm - 0.5 * np.einsum('...i,ij,...j->...', d, inv, d))

    return density
