# File: pathcg/metrics/norms.py
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ..app_config import current_config
from ..errors import DimensionError, SingularDiffusionError
from ..models import NormMode

logger = logging.getLogger(__name__)


def xi_matrix(sigma):
    """Xi = (sigma^T sigma)^-1 sigma^T, batched over leading axes; Xi sigma = I_k."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim < 2:
        sigma = np.atleast_2d(sigma) if sigma.ndim == 1 else sigma.reshape(1, 1)
    gram = np.swapaxes(sigma, -1, -2) @ sigma
    cond = np.linalg.cond(gram)
    if not np.all(np.isfinite(cond)) or np.max(cond) > 1.0 / current_config().RANK_TOL ** 2:
        raise SingularDiffusionError(f"sigma^T sigma is singular (condition number {np.max(cond):.3e})")
    return np.linalg.solve(gram, np.swapaxes(sigma, -1, -2))


@dataclass(frozen=True)
class WeightedNorm:
    """ ||z||_Xi^2 = |Xi z|^2, or |Xi Pi^# zbar|^2 on CG vectors in cg_xi_norm mode. """
    xi: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]
    mode: NormMode = NormMode.XI_NORM
    lift: Optional[np.ndarray] = None  # Pi^# (n, m), cg mode only

    def __post_init__(self):
        object.__setattr__(self, 'mode', NormMode(self.mode))
        if self.mode is NormMode.CG_XI_NORM and self.lift is None:
            raise DimensionError("the CG norm needs the right inverse Pi^#")
        if not callable(self.xi):
            object.__setattr__(self, 'xi', np.atleast_2d(np.asarray(self.xi, dtype=float)))

    @classmethod
    def from_sigma(cls, sigma):
        """Norm of the SDE whose diffusion is sigma (constant array or callable of x)."""
        if callable(sigma):
            return cls(xi=lambda x: xi_matrix(sigma(x)))
        return cls(xi=xi_matrix(sigma))

    @classmethod
    def for_cg(cls, sigma, cg_map):
        """||zbar||_{Pi^# Xi} for CG vectors; sigma is the microscopic diffusion."""
        norm = cls.from_sigma(sigma)
        return cls(xi=norm.xi, mode=NormMode.CG_XI_NORM, lift=cg_map.right_inverse)

    @classmethod
    def for_phase_map(cls, noise, phase_map):
        """Norm on CG forces: Xi^(2) of the phase SDE acts on the momentum block only,
        so the weight is |sigma^-1 Pi^#_p Fbar|^2."""
        return cls.for_cg(noise, phase_map.mom_map)

    @property
    def input_dim(self):
        return self.lift.shape[1] if self.mode is NormMode.CG_XI_NORM else None

    def xi_at(self, x=None):
        if callable(self.xi):
            if x is None:
                raise DimensionError("a state-dependent norm needs the states it is evaluated at")
            return self.xi(np.asarray(x, dtype=float))
        return self.xi

    def transform(self, z, x=None):
        """Xi z (or Xi Pi^# zbar); the squared norm is the squared Euclidean length of this."""
        z = np.asarray(z, dtype=float)
        if self.mode is NormMode.CG_XI_NORM:
            if z.shape[-1] != self.lift.shape[1]:
                raise DimensionError(f"CG vector has {z.shape[-1]} components, expected {self.lift.shape[1]}")
            z = z @ self.lift.T
        xi = self.xi_at(x)
        if xi.ndim == 2:
            return z @ xi.T
        return np.einsum('...ij,...j->...i', xi, z)

    def squared(self, z, x=None):
        w = self.transform(z, x)
        return np.einsum('...i,...i->...', w, w)

    def inner(self, u, v, x=None):
        return np.einsum('...i,...i->...', self.transform(u, x), self.transform(v, x))

    def weight(self, x=None):
        """Matrix W with ||z||^2 = z^T W z."""
        xi = self.xi_at(x)
        if self.mode is NormMode.CG_XI_NORM:
            xi = xi @ self.lift
        return np.swapaxes(xi, -1, -2) @ xi
