# File: pathcg/metrics/statistics.py
# Monte Carlo means with standard errors. numpy reductions over contiguous
# arrays use pairwise summation, so results do not depend on how work was split.

import numpy as np

from ..app_config import current_config


def _constant(values):
    return values.shape[0] > 0 and bool(np.all(values == values[0]))


def batch_means(values, n_batches=None):
    """Mean and batch-means standard error of a time-ordered series.

    ``values`` has shape (N,) or (N, K). The series is split into ``n_batches``
    contiguous batches (fewer when N is small); a constant series has SE 0.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n == 0:
        raise ValueError("batch_means needs at least one value")
    mean = values.mean(axis=0)
    if _constant(values):
        return mean, np.zeros_like(mean)
    if n == 1:
        return mean, np.full_like(mean, np.nan)
    n_batches = current_config().SE_BATCHES if n_batches is None else n_batches
    n_batches = max(2, min(int(n_batches), n))
    batches = np.stack([b.mean(axis=0) for b in np.array_split(values, n_batches, axis=0)])
    se = batches.std(axis=0, ddof=1) / np.sqrt(n_batches)
    return mean, se


def iid_mean(values):
    """Mean and SE of independent values (e.g. one per replica)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    mean = values.mean(axis=0)
    if _constant(values):
        return mean, np.zeros_like(mean)
    if n == 1:
        return mean, np.full_like(mean, np.nan)
    return mean, values.std(axis=0, ddof=1) / np.sqrt(n)


def replica_batch_means(values, n_replicas, n_batches=None):
    """SE for values pooled replica-major: across replicas when M >= 2, batch means otherwise."""
    values = np.asarray(values, dtype=float)
    if n_replicas >= 2 and values.shape[0] % n_replicas == 0:
        per_replica = values.reshape((n_replicas, -1) + values.shape[1:]).mean(axis=1)
        mean = values.mean(axis=0)
        _, se = iid_mean(per_replica)
        return mean, se
    return batch_means(values, n_batches)
