# File: pathcg/metrics/observables.py
# Transferability of fitted models to coarse observables.

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from .statistics import batch_means

logger = logging.getLogger(__name__)


def _evaluate(phi, samples):
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    values = np.asarray(phi(x), dtype=float)
    if values.size != x.shape[0]:
        raise DimensionError(f"observable returned {values.size} values for {x.shape[0]} samples")
    return values.reshape(x.shape[0])


@dataclass(frozen=True)
class CKPResult:
    """ Both sides of |E_P[phi] - E_Q[phi]| <= ||phi||_inf sqrt(2 R). """
    lhs: float
    rhs: float
    std_error: float
    sup_norm: float
    sup_estimated: bool
    divergence: float
    holds: bool

    def to_text(self):
        sup = 'empirical sup' if self.sup_estimated else 'exact'
        return (f"lhs={self.lhs!r} rhs={self.rhs!r} se={self.std_error!r} sup={self.sup_norm!r} ({sup}) "
                f"divergence={self.divergence!r} holds={self.holds}")


def ckp_bound(phi, micro_projected, cg_samples, divergence, sup_norm=None, paired=False):
    """Check the CKP transferability bound for one observable.

    ``paired`` takes the SE from batch means of phi(a_i) - phi(b_i), for sample
    sets driven by common random numbers. Without ``sup_norm`` the sup is
    estimated as the largest |phi| seen on either sample set.
    """
    a = _evaluate(phi, micro_projected)
    b = _evaluate(phi, cg_samples)
    mean_a, se_a = batch_means(a)
    mean_b, se_b = batch_means(b)
    if paired:
        if a.shape != b.shape:
            raise DimensionError("paired CKP estimates need sample sets of equal size")
        _, se = batch_means(a - b)
    else:
        se = np.hypot(se_a, se_b)
    estimated = sup_norm is None
    if estimated:
        sup_norm = float(max(np.max(np.abs(a)), np.max(np.abs(b))))
    lhs = float(abs(mean_a - mean_b))
    rhs = float(sup_norm) * np.sqrt(2.0 * max(float(divergence), 0.0))
    holds = lhs <= rhs + 3 * float(se)
    return CKPResult(lhs=lhs, rhs=float(rhs), std_error=float(se), sup_norm=float(sup_norm),
                     sup_estimated=estimated, divergence=float(divergence), holds=bool(holds))


@dataclass(frozen=True)
class DiscrepancyReport:
    """ sum_i |E_P[phi_i] - E_Q[phi_i]|^2 with delta-method SE. """
    value: float
    std_error: float
    differences: np.ndarray
    difference_se: np.ndarray

    @property
    def indistinguishable(self):
        return bool(np.all(np.abs(self.differences) <= 3 * self.difference_se))

    def to_text(self):
        return (f"value={self.value!r} se={self.std_error!r} differences={self.differences.tolist()} "
                f"difference_se={self.difference_se.tolist()}")


def observable_discrepancy(phis, micro_projected, cg_samples):
    """Moment-matching discrepancy over a list of observables."""
    diffs, ses = [], []
    for phi in phis:
        mean_a, se_a = batch_means(_evaluate(phi, micro_projected))
        mean_b, se_b = batch_means(_evaluate(phi, cg_samples))
        diffs.append(float(mean_a - mean_b))
        ses.append(float(np.hypot(se_a, se_b)))
    diffs, ses = np.array(diffs), np.array(ses)
    value = float(np.sum(diffs ** 2))
    se = float(np.sqrt(np.sum((2 * diffs * ses) ** 2)))
    return DiscrepancyReport(value=value, std_error=se, differences=diffs, difference_se=ses)
