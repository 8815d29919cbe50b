# File: pathcg/cg_maps/reconstruction.py
# Reconstructed microscopic drift b~(x) = Pi^# b_bar(Pi x) + (I - Pi^# Pi) y_perp(x)
# and the Monte Carlo check that Pi X~_t and X_bar_t agree in law.

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import DimensionError
from ..integrators.simulate import initial_states, simulate_ensemble
from ..metrics.statistics import iid_mean
from ..models import SDEModel, Scheme

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReconstructionSpec:
    """ CG map plus the theta-independent orthogonal part y_perp (None means the microscopic drift). """
    cg_map: object
    orthogonal_part: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def check(self, x_samples, drift=None):
        """max |Pi (I - Pi^# Pi) y_perp(x)| over the samples; zero up to rounding."""
        y_perp = self.orthogonal_part or drift
        if y_perp is None:
            raise DimensionError("no orthogonal part and no drift to default to")
        x = np.atleast_2d(np.asarray(x_samples, dtype=float))
        return float(np.max(np.abs(self.cg_map.apply(self.cg_map.complement(y_perp(x))))))


def reconstruct_drift(drift, family, spec, theta=None):
    """b~(x; theta) = Pi^# b_bar(Pi x; theta) + (I - Pi^# Pi) y_perp(x)."""
    cg_map = spec.cg_map
    y_perp = spec.orthogonal_part or drift
    if family.cg_dim != cg_map.m:
        raise DimensionError(f"family acts on R^{family.cg_dim}, CG map maps to R^{cg_map.m}")

    def reconstructed(x):
        x = np.asarray(x, dtype=float)
        return cg_map.lift(family(cg_map.apply(x), theta)) + cg_map.complement(y_perp(x))

    return reconstructed


def reconstructed_sde(micro, cg_drift, cg_map, orthogonal_part=None):
    """Microscopic-space SDE with drift b~ and the microscopic diffusion."""
    y_perp = orthogonal_part or micro.drift_at

    def drift(x):
        return cg_map.lift(cg_drift(cg_map.apply(x))) + cg_map.complement(y_perp(x))

    return SDEModel(dim=micro.dim, drift=drift, diffusion=micro.diffusion, noise_dim=micro.noise_dim,
                    name=f"{micro.name}-reconstructed", check_rank=micro.check_rank)


@dataclass(frozen=True)
class ReconstructionReport:
    """ Mean and covariance differences of Pi X~_t and X_bar_t with standard errors. """
    times: np.ndarray
    mean_diff: np.ndarray
    mean_se: np.ndarray
    cov_diff: np.ndarray
    cov_se: np.ndarray
    n_samples: int
    passed: bool

    @property
    def worst_ratio(self):
        ratios = [np.abs(self.mean_diff) / np.maximum(self.mean_se, 1e-300),
                  np.abs(self.cov_diff) / np.maximum(self.cov_se, 1e-300)]
        return float(max(r.max() for r in ratios))

    def to_text(self):
        lines = [f"passed={self.passed} n={self.n_samples}"]
        for i, t in enumerate(self.times):
            lines.append(f"t={t!r} mean_diff={self.mean_diff[i].tolist()} mean_se={self.mean_se[i].tolist()} "
                         f"cov_diff={self.cov_diff[i].ravel().tolist()} cov_se={self.cov_se[i].ravel().tolist()}")
        return '\n'.join(lines)


def _moments(a):
    """Sample mean, covariance and their SEs over the replica axis."""
    mean, mean_se = iid_mean(a)
    centred = a - mean
    products = centred[:, :, None] * centred[:, None, :]
    n = a.shape[0]
    cov, cov_se = iid_mean(products)
    return mean, mean_se, cov * n / (n - 1), cov_se


def verify_reconstruction(micro, cg, cg_map, x0_sampler, n_samples, times, h, rng, reconstructed=None):
    """Simulate X~ from x0 and X_bar from Pi x0 and compare their first two moments.

    Passes iff every mean and covariance difference lies within 3 combined
    standard errors at every requested time.
    """
    if reconstructed is None:
        reconstructed = reconstructed_sde(micro, cg.drift_at, cg_map)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    indices = np.rint(times / h).astype(int)
    if np.any(np.abs(indices * h - times) > 1e-9 * np.maximum(times, 1.0)):
        raise DimensionError(f"requested times {times} are not multiples of h={h}")
    steps = int(indices.max())
    x0 = initial_states(x0_sampler, n_samples, micro.dim, rng)
    fine = simulate_ensemble(reconstructed, Scheme.EULER_MARUYAMA, x0, h, steps, n_samples, rng, burn_in=0)
    coarse = simulate_ensemble(cg, Scheme.EULER_MARUYAMA, cg_map.apply(x0), h, steps, n_samples,
                               rng.child(1), burn_in=0)
    m = cg_map.m
    shape = (times.size, m)
    mean_diff, mean_se = np.empty(shape), np.empty(shape)
    cov_diff, cov_se = np.empty(shape + (m,)), np.empty(shape + (m,))
    passed = True
    for k, idx in enumerate(indices):
        a = cg_map.apply(fine.states[:, idx])
        b = coarse.states[:, idx]
        ma, sa, ca, csa = _moments(a)
        mb, sb, cb, csb = _moments(b)
        mean_diff[k], mean_se[k] = ma - mb, np.hypot(sa, sb)
        cov_diff[k], cov_se[k] = ca - cb, np.hypot(csa, csb)
        floor = 1e-12
        ok = (np.all(np.abs(mean_diff[k]) <= 3 * mean_se[k] + floor)
              and np.all(np.abs(cov_diff[k]) <= 3 * cov_se[k] + floor))
        passed = passed and bool(ok)
    report = ReconstructionReport(times=times, mean_diff=mean_diff, mean_se=mean_se, cov_diff=cov_diff,
                                  cov_se=cov_se, n_samples=n_samples, passed=passed)
    logger.info(f"reconstruction check over {n_samples} replicas: passed={passed}")
    return report
