# File: pathcg/inference/normal_equations.py
# Force-matching least squares: Phi theta = a with Phi_ij = E<phi_i, phi_j>_W and
# a_i = E<phi_i, y>_W, assembled from whitened per-sample designs.

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lstsq

from ..app_config import current_config
from ..cg_maps.maps import PhaseCGMap
from ..errors import DimensionError, IllConditionedError
from ..integrators.simulate import pooled_states
from ..metrics.statistics import replica_batch_means
from ..models import FitMethod
from ..utils.decorators import with_context

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitResult:
    """ Fitted parameters with the objective at the optimum and their standard errors. """
    theta: np.ndarray
    objective: float
    objective_se: Optional[float]   # None means exact (no Monte Carlo error)
    std_errors: Optional[np.ndarray]
    method: FitMethod
    condition_number: Optional[float] = None
    degenerate: bool = False
    residual: Optional[float] = None
    n_samples: int = 0
    names: Tuple[str, ...] = ()
    dependent_pairs: Tuple[Tuple[int, int], ...] = field(default=())

    def to_text(self):
        se = 'exact' if self.std_errors is None else np.asarray(self.std_errors).tolist()
        objective_se = 'exact' if self.objective_se is None else repr(float(self.objective_se))
        cond = 'n/a' if self.condition_number is None else f"{self.condition_number:.6g}"
        return (f"theta={np.asarray(self.theta).tolist()} objective={float(self.objective)!r} "
                f"objective_se={objective_se} se={se} method={self.method.value} cond={cond} "
                f"degenerate={self.degenerate}")


@dataclass(frozen=True)
class NormalSystem:
    """ Phi and a together with the whitened samples they were averaged from. """
    phi: np.ndarray
    a: np.ndarray
    jacobian: np.ndarray  # (N, r, K) whitened design
    target: np.ndarray    # (N, r) whitened target
    n_replicas: int = 1
    scale: float = 1.0    # multiplies the objective (horizon for path functionals)

    @property
    def size(self):
        return self.a.size

    @property
    def n_samples(self):
        return self.target.shape[0]


def _whiten(norm, design, target, x):
    if norm is None:
        return design, target
    cols = np.swapaxes(design, -1, -2)
    if callable(norm.xi):
        if x is None:
            raise DimensionError("a state-dependent norm needs the microscopic states")
        jac = norm.transform(cols, x[:, None, :])
    else:
        jac = norm.transform(cols)
    return np.swapaxes(jac, -1, -2), norm.transform(target, x)


def assemble(design, target, norm=None, x=None, n_replicas=1, scale=1.0):
    """Build the normal system of min_theta 1/2 E ||target - design theta||_W^2.

    ``design`` has shape (N, m, K) and ``target`` (N, m); ``norm`` is a
    WeightedNorm on CG vectors or None for the Euclidean norm.
    """
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    if design.ndim != 3 or target.shape != design.shape[:2]:
        raise DimensionError(f"design {design.shape} and target {target.shape} do not match")
    jac, rhs = _whiten(norm, design, target, x)
    n = jac.shape[0]
    phi = np.einsum('nik,nil->kl', jac, jac) / n
    a = np.einsum('nik,ni->k', jac, rhs) / n
    return NormalSystem(phi=0.5 * (phi + phi.T), a=a, jacobian=jac, target=rhs,
                        n_replicas=n_replicas, scale=scale)


def _dependent_pairs(phi):
    diag = np.sqrt(np.clip(np.diag(phi), 0.0, None))
    pairs = []
    for i in range(phi.shape[0]):
        if diag[i] == 0:
            pairs.append((i, i))
            continue
        for j in range(i + 1, phi.shape[0]):
            if diag[j] > 0 and abs(phi[i, j] / (diag[i] * diag[j])) > 1 - 1e-6:
                pairs.append((i, j))
    return tuple(pairs)


@with_context('inference')
def solve_normal_system(system, method=FitMethod.FORCE_MATCHING, strict=False, names=()):
    """theta* = Phi^-1 a by Cholesky with one refinement step.

    Above MAX_CONDITION the minimal-norm solution from a pivoted QR solve is
    returned and flagged degenerate, or IllConditionedError is raised when
    ``strict``.
    """
    config = current_config()
    phi, a = system.phi, system.a
    cond = float(np.linalg.cond(phi)) if np.all(np.isfinite(phi)) else np.inf
    degenerate = not cond <= config.MAX_CONDITION
    pairs = ()
    if degenerate:
        pairs = _dependent_pairs(phi)
        message = (f"normal matrix condition number {cond:.3e} exceeds {config.MAX_CONDITION:.0e}; "
                   f"near-dependent basis pairs {list(pairs)}")
        if strict:
            raise IllConditionedError(message, condition_number=cond, dependent_pairs=pairs)
        logger.warning(message)
        theta = lstsq(phi, a, cond=1.0 / config.MAX_CONDITION, lapack_driver='gelsy')[0]
        inverse = np.linalg.pinv(phi, rcond=1.0 / config.MAX_CONDITION, hermitian=True)
    else:
        factor = cho_factor(phi)
        theta = cho_solve(factor, a)
        theta = theta + cho_solve(factor, a - phi @ theta)
        inverse = cho_solve(factor, np.eye(system.size))

    residual = float(np.linalg.norm(phi @ theta - a))
    if not degenerate and residual > config.NORMAL_RESIDUAL_TOL * max(np.linalg.norm(a), np.finfo(float).tiny):
        logger.warning(f"normal-equation residual {residual:.3e} above tolerance")

    errors = system.target - np.einsum('nik,k->ni', system.jacobian, theta)
    per_sample = 0.5 * np.einsum('ni,ni->n', errors, errors) * system.scale
    objective, objective_se = replica_batch_means(per_sample, system.n_replicas)
    influence = np.einsum('nik,ni->nk', system.jacobian, errors) @ inverse.T
    _, std_errors = replica_batch_means(influence, system.n_replicas)

    result = FitResult(theta=theta, objective=float(objective), objective_se=float(objective_se),
                       std_errors=std_errors, method=FitMethod(method), condition_number=cond,
                       degenerate=degenerate, residual=residual, n_samples=system.n_samples,
                       names=tuple(names), dependent_pairs=pairs)
    logger.info(f"{result.method.value} fit over {system.n_samples} samples: theta={theta.tolist()} cond={cond:.3e}")
    return result


def force_matching_ls(samples, drift, family, cg_map, weight=None, strict=False, method=FitMethod.FORCE_MATCHING):
    """Least-squares fit of E ||Pi b(X) - bbar(Pi X; theta)||^2 over stationary samples.

    ``weight`` is a WeightedNorm on CG vectors (WeightedNorm.for_cg gives the
    Pi^# Xi norm); None means the Euclidean norm.
    For a PhaseCGMap the block map acts on phase states.
    """
    x, n_replicas = pooled_states(samples)
    if isinstance(cg_map, PhaseCGMap):
        cg_map = cg_map.phase_map
    target = cg_map.apply(np.asarray(drift(x), dtype=float))
    design = family.design(cg_map.apply(x))
    system = assemble(design, target, weight, x, n_replicas)
    return solve_normal_system(system, method, strict, family.names)
