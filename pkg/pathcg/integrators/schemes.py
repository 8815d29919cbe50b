# File: pathcg/integrators/schemes.py
# One-step maps of the Euler-Maruyama and BBK schemes. All steppers act on
# batches: states carry a leading replica axis.

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..errors import BlowUpError, NumericalError
from ..models import BBKConvention


class EulerStepper:
    """x' = x + b(x) h + sigma(x) dW."""

    def __init__(self, model, h):
        self.model = model
        self.h = float(h)
        self.noise_dim = model.noise_dim
        self._sigma_t = model.diffusion.T.copy() if model.constant_diffusion else None

    def __call__(self, x, dW):
        drift = self.model.drift_at(x)
        if self._sigma_t is not None:
            kick = dW @ self._sigma_t
        else:
            kick = np.einsum('...ij,...j->...i', self.model.diffusion_at(x), dW)
        return x + drift * self.h + kick


class BBKStepper:
    """Half-kick with explicit friction, drift, half-kick with implicit friction.

    dW1 and dW2 have variance h/2 each. The implicit substep is solved exactly
    with an LU factorisation of K = I + gamma M^-1 h/2.
    """

    def __init__(self, model, h, convention=BBKConvention.STANDARD):
        self.model = model
        self.h = float(h)
        self.dof = model.dof
        self.sign = 1.0 if BBKConvention(convention) is BBKConvention.STANDARD else -1.0
        self.inverse_mass = model.inverse_mass
        self._gamma_t = model.friction.T.copy()
        self._sigma_t = model.noise.T.copy()
        k = np.eye(self.dof) + model.friction * self.inverse_mass[None, :] * (self.h / 2)
        if not np.all(np.isfinite(k)) or np.linalg.cond(k) > 1e14:
            raise NumericalError("implicit friction factor I + gamma M^-1 h/2 is singular")
        self._k_lu = lu_factor(k)

    def __call__(self, q, p, dW1, dW2):
        h, s = self.h, self.sign
        p_half = (p + s * self.model.force_at(q) * (h / 2)
                  - ((p * self.inverse_mass) @ self._gamma_t) * (h / 2)
                  + dW1 @ self._sigma_t)
        q_next = q + p_half * self.inverse_mass * h
        rhs = p_half + s * self.model.force_at(q_next) * (h / 2) + dW2 @ self._sigma_t
        flat = rhs.reshape(-1, self.dof)
        p_next = lu_solve(self._k_lu, flat.T).T.reshape(rhs.shape)
        return q_next, p_next


def euler_maruyama_step(model, x, h, dW):
    """x + b(x) h + sigma(x) dW; dW ~ N(0, h I_k) is drawn by the caller."""
    x = np.asarray(x, dtype=float)
    out = EulerStepper(model, h)(x, np.asarray(dW, dtype=float))
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"Euler-Maruyama step of {model.name} produced non-finite values")
    return out


def bbk_step(model, q, p, h, dW1, dW2, convention=BBKConvention.STANDARD):
    """One BBK step of a LangevinModel; returns (q', p')."""
    q_next, p_next = BBKStepper(model, h, convention)(
        np.asarray(q, dtype=float), np.asarray(p, dtype=float),
        np.asarray(dW1, dtype=float), np.asarray(dW2, dtype=float))
    if not (np.all(np.isfinite(q_next)) and np.all(np.isfinite(p_next))):
        raise BlowUpError(f"BBK step of {model.name} produced non-finite values")
    return q_next, p_next
