# File: pathcg/integrators/io.py
# CSV persistence of trajectories and ensembles.
#
#   # dim=<n> step=<h> seed=<s> scheme=<name>
#   replica,step,t,x_1,...,x_n

import logging
import os

import numpy as np
import pandas as pd

from ..errors import ConfigError, DimensionError
from .simulate import Ensemble, Trajectory

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def ensemble_frame(ensemble):
    """Long-format DataFrame, one row per recorded state."""
    m, length, n = ensemble.states.shape
    steps = np.tile(np.arange(length), m)
    frame = pd.DataFrame({
        'replica': np.repeat(ensemble.replicas, length),
        'step': steps,
        't': steps * ensemble.step,
    })
    values = pd.DataFrame(ensemble.states.reshape(m * length, n), columns=[f"x_{i + 1}" for i in range(n)])
    return pd.concat([frame, values], axis=1)


def metadata_line(ensemble):
    return (f"# dim={ensemble.dim} step={ensemble.step!r} seed={ensemble.seed} "
            f"scheme={ensemble.scheme or 'none'}")


def write_ensemble_csv(data, path):
    """Write a Trajectory or Ensemble; full double precision."""
    ensemble = data.as_ensemble() if isinstance(data, Trajectory) else data
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='') as handle:
        handle.write(metadata_line(ensemble) + '\n')
        ensemble_frame(ensemble).to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"wrote {ensemble.n_replicas} replicas to {path}")
    return path


def _parse_metadata(line, path):
    if not line.startswith('#'):
        raise ConfigError(f"{path}: missing '#' metadata line")
    meta = {}
    for token in line[1:].split():
        key, _, value = token.partition('=')
        meta[key] = value
    try:
        return int(meta['dim']), float(meta['step']), int(meta['seed']), meta.get('scheme', 'none')
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed metadata line: {exc}")


def read_ensemble_csv(path):
    """Read the format written by write_ensemble_csv back into an Ensemble."""
    if not os.path.exists(path):
        raise ConfigError(f"trajectory file not found: {path}")
    with open(path) as handle:
        first = handle.readline().strip()
    dim, step, seed, scheme = _parse_metadata(first, path)
    frame = pd.read_csv(path, skiprows=1)
    columns = [f"x_{i + 1}" for i in range(dim)]
    missing = [c for c in ['replica', 'step'] + columns if c not in frame.columns]
    if missing:
        raise ConfigError(f"{path}: missing columns {missing}")
    frame = frame.sort_values(['replica', 'step'], kind='stable')
    replicas = frame['replica'].unique()
    counts = frame.groupby('replica', sort=True).size()
    if counts.nunique() != 1:
        raise DimensionError(f"{path}: replicas have unequal lengths")
    length = int(counts.iloc[0])
    states = frame[columns].to_numpy(dtype=float).reshape(len(replicas), length, dim)
    return Ensemble(states=states, step=step, seed=seed, scheme='' if scheme == 'none' else scheme,
                    replicas=np.asarray(replicas, dtype=int))
