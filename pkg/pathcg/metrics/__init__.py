from .statistics import batch_means, iid_mean, replica_batch_means
from .norms import WeightedNorm, xi_matrix
from .rer import (
    BBKObjective, DiscreteRERPieces, RERReport, discrete_rer_bbk, discrete_rer_overdamped,
    re_finite_time, rer_stationary,
)
from .likelihood import BBKKernel, EulerKernel, GaussianFactor, PathLikelihood, path_log_likelihood
from .observables import CKPResult, DiscrepancyReport, ckp_bound, observable_discrepancy

__all__ = [
    'batch_means', 'iid_mean', 'replica_batch_means',
    'WeightedNorm', 'xi_matrix',
    'BBKObjective', 'DiscreteRERPieces', 'RERReport', 'discrete_rer_bbk', 'discrete_rer_overdamped',
    're_finite_time', 'rer_stationary',
    'BBKKernel', 'EulerKernel', 'GaussianFactor', 'PathLikelihood', 'path_log_likelihood',
    'CKPResult', 'DiscrepancyReport', 'ckp_bound', 'observable_discrepancy',
]
