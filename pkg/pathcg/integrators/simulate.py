# File: pathcg/integrators/simulate.py
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from ..app_config import current_config, worker_count
from ..errors import BlowUpError, ConfigError, DimensionError, HypothesisError
from ..models import BBKConvention, LangevinModel, Scheme, make_langevin_sde
from .schemes import BBKStepper, EulerStepper

logger = logging.getLogger(__name__)


# --- Random streams ---

@dataclass(frozen=True)
class RngSpec:
    """ Master seed plus the rule: replica r draws from SeedSequence(master_seed, spawn_key=(r,)). """
    master_seed: int
    stream: int = 0

    def __post_init__(self):
        seed = int(self.master_seed)
        if not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.master_seed}")
        object.__setattr__(self, 'master_seed', seed)

    def _key(self, replica, *purpose):
        key = (int(replica),)
        if self.stream:
            key += (int(self.stream),)
        return key + purpose

    def generator(self, replica=0):
        """Gaussian-increment stream of one replica."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self._key(replica))
        return np.random.Generator(np.random.PCG64(seq))

    def initial_generator(self, replica=0):
        """Stream used only to draw the initial state of one replica."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self._key(replica, 0))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, stream):
        """Independent family of streams under the same master seed."""
        if int(stream) < 1:
            raise ConfigError("child streams are numbered from 1")
        return RngSpec(self.master_seed, int(stream))


# --- Path data ---

def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Trajectory:
    """ States X_0..X_T recorded every h time units. """
    states: np.ndarray
    step: float
    seed: int = 0
    replica: int = 0
    scheme: str = ''

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.ndim != 2 or states.shape[0] < 1:
            raise DimensionError(f"trajectory states must be (T+1, n), got {states.shape}")
        if not self.step > 0:
            raise DimensionError(f"step must be positive, got {self.step}")
        if not np.all(np.isfinite(states)):
            raise BlowUpError("trajectory contains non-finite states", replica=self.replica)
        object.__setattr__(self, 'states', _readonly(states))
        object.__setattr__(self, 'step', float(self.step))

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def length(self):
        return self.states.shape[0]

    @property
    def times(self):
        return np.arange(self.length) * self.step

    @property
    def horizon(self):
        return (self.length - 1) * self.step

    def as_ensemble(self):
        return Ensemble(states=self.states[None], step=self.step, seed=self.seed,
                        scheme=self.scheme, replicas=np.array([self.replica]))

    def __repr__(self):
        return f'<Trajectory n={self.dim} T+1={self.length} h={self.step} replica={self.replica}>'


@dataclass(frozen=True)
class Ensemble:
    """ M replicas of equal dimension, step and length; states has shape (M, T+1, n). """
    states: np.ndarray
    step: float
    seed: int = 0
    scheme: str = ''
    replicas: Optional[np.ndarray] = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 3 or states.shape[0] < 1 or states.shape[1] < 1:
            raise DimensionError(f"ensemble states must be (M, T+1, n), got {states.shape}")
        if not self.step > 0:
            raise DimensionError(f"step must be positive, got {self.step}")
        if not np.all(np.isfinite(states)):
            raise BlowUpError("ensemble contains non-finite states")
        replicas = np.arange(states.shape[0]) if self.replicas is None else np.asarray(self.replicas, dtype=int)
        if replicas.shape != (states.shape[0],):
            raise DimensionError("one replica index per trajectory is required")
        object.__setattr__(self, 'states', _readonly(states))
        object.__setattr__(self, 'step', float(self.step))
        replicas.setflags(write=False)
        object.__setattr__(self, 'replicas', replicas)

    @classmethod
    def from_trajectories(cls, trajectories):
        trajectories = list(trajectories)
        if not trajectories:
            raise DimensionError("an ensemble needs at least one trajectory")
        first = trajectories[0]
        for traj in trajectories[1:]:
            if traj.dim != first.dim or traj.length != first.length:
                raise DimensionError(
                    f"replica {traj.replica} has shape {traj.states.shape}, expected {first.states.shape}")
            if not np.isclose(traj.step, first.step, rtol=1e-12, atol=0.0):
                raise DimensionError(f"replica {traj.replica} has step {traj.step}, expected {first.step}")
        return cls(states=np.stack([t.states for t in trajectories]), step=first.step, seed=first.seed,
                   scheme=first.scheme, replicas=np.array([t.replica for t in trajectories]))

    @property
    def n_replicas(self):
        return self.states.shape[0]

    @property
    def length(self):
        return self.states.shape[1]

    @property
    def dim(self):
        return self.states.shape[2]

    @property
    def times(self):
        return np.arange(self.length) * self.step

    @property
    def horizon(self):
        return (self.length - 1) * self.step

    def trajectory(self, i):
        return Trajectory(states=self.states[i], step=self.step, seed=self.seed,
                          replica=int(self.replicas[i]), scheme=self.scheme)

    @property
    def trajectories(self):
        return [self.trajectory(i) for i in range(self.n_replicas)]

    def __len__(self):
        return self.n_replicas

    def samples(self, start=0, stop=None, stride=1):
        """Pooled states (replica-major) from the time window [start, stop)."""
        window = self.states[:, start:stop:stride, :]
        return window.reshape(-1, self.dim)

    def with_states(self, states):
        return Ensemble(states=states, step=self.step, seed=self.seed, scheme=self.scheme,
                        replicas=self.replicas)

    def __repr__(self):
        return f'<Ensemble M={self.n_replicas} n={self.dim} T+1={self.length} h={self.step}>'


# --- Engine ---

def _resolve_scheme(model, scheme):
    scheme = Scheme(scheme)
    if scheme is Scheme.BBK and not isinstance(model, LangevinModel):
        raise HypothesisError("the BBK scheme requires a LangevinModel")
    if scheme is Scheme.EULER_MARUYAMA and isinstance(model, LangevinModel):
        model = make_langevin_sde(model)
    return model, scheme


def _state_dim(model, scheme):
    return 2 * model.dof if scheme is Scheme.BBK else model.dim


def _simulate_block(model, scheme, x0, h, steps, burn_in, rng, replicas, convention, chunk):
    """Advance a block of replicas together; each replica draws from its own stream."""
    generators = [rng.generator(r) for r in replicas]
    x = np.array(x0, dtype=float)
    n_block, n = x.shape
    if scheme is Scheme.BBK:
        stepper = BBKStepper(model, h, convention)
        dof = model.dof
        noise_shape, scale = (2, dof), np.sqrt(h / 2)
    else:
        stepper = EulerStepper(model, h)
        noise_shape, scale = (model.noise_dim,), np.sqrt(h)

    out = np.empty((n_block, steps + 1, n))
    if burn_in == 0:
        out[:, 0] = x
    total = burn_in + steps
    done = 0
    while done < total:
        size = min(chunk, total - done)
        noise = np.stack([g.standard_normal((size,) + noise_shape) for g in generators], axis=1) * scale
        for j in range(size):
            if scheme is Scheme.BBK:
                q, p = stepper(x[:, :dof], x[:, dof:], noise[j, :, 0], noise[j, :, 1])
                x = np.concatenate([q, p], axis=1)
            else:
                x = stepper(x, noise[j])
            step = done + j + 1
            finite = np.isfinite(x).all(axis=1)
            if not finite.all():
                bad = int(replicas[int(np.argmin(finite))])
                raise BlowUpError(f"non-finite state at step {step} in replica {bad}", step=step, replica=bad)
            if step >= burn_in:
                out[:, step - burn_in] = x
        done += size
    return out


def _check_run(h, steps, burn_in):
    if not h > 0:
        raise ConfigError(f"time step must be positive, got {h}")
    if steps < 0:
        raise ConfigError(f"steps must be non-negative, got {steps}")
    if burn_in is None:
        burn_in = int(current_config().BURN_IN_FRACTION * steps)
    if burn_in < 0:
        raise ConfigError(f"burn_in must be non-negative, got {burn_in}")
    return int(burn_in)


def simulate_trajectory(model, scheme, x0, h, steps, rng, burn_in=None, replica=0,
                        convention=BBKConvention.STANDARD):
    """Simulate one replica and record the post-burn-in states X_0..X_steps."""
    model, scheme = _resolve_scheme(model, scheme)
    burn_in = _check_run(h, steps, burn_in)
    n = _state_dim(model, scheme)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (n,):
        raise DimensionError(f"initial state has {x0.size} components, expected {n}")
    states = _simulate_block(model, scheme, x0[None], float(h), int(steps), burn_in, rng,
                             np.array([replica]), convention, current_config().NOISE_CHUNK)
    return Trajectory(states=states[0], step=h, seed=rng.master_seed, replica=replica, scheme=scheme.value)


def initial_states(x0_sampler, n_replicas, n, rng):
    if callable(x0_sampler):
        x0 = np.stack([np.asarray(x0_sampler(rng.initial_generator(r)), dtype=float).reshape(-1)
                       for r in range(n_replicas)])
    else:
        x0 = np.asarray(x0_sampler, dtype=float)
        if x0.ndim == 1:
            x0 = np.broadcast_to(x0, (n_replicas, x0.size))
    if x0.shape != (n_replicas, n):
        raise DimensionError(f"initial states have shape {x0.shape}, expected {(n_replicas, n)}")
    return x0


def simulate_ensemble(model, scheme, x0_sampler, h, steps, n_replicas, rng, burn_in=None,
                      convention=BBKConvention.STANDARD, n_jobs=None):
    """Simulate M independent replicas.

    ``x0_sampler`` is a fixed state, an (M, n) array of per-replica states, or a
    callable drawing one state from the generator it is handed. Replicas are
    simulated in fixed-size blocks, so results do not depend on ``n_jobs``.
    """
    if n_replicas < 1:
        raise ConfigError(f"number of replicas must be positive, got {n_replicas}")
    model, scheme = _resolve_scheme(model, scheme)
    burn_in = _check_run(h, steps, burn_in)
    n = _state_dim(model, scheme)
    x0 = initial_states(x0_sampler, n_replicas, n, rng)
    config = current_config()
    block = config.REPLICA_BLOCK
    starts = range(0, n_replicas, block)
    n_jobs = worker_count() if n_jobs is None else n_jobs

    def run(start):
        replicas = np.arange(start, min(start + block, n_replicas))
        return _simulate_block(model, scheme, x0[replicas], float(h), int(steps), burn_in, rng,
                               replicas, convention, config.NOISE_CHUNK)

    if n_jobs > 1 and len(starts) > 1:
        blocks = Parallel(n_jobs=n_jobs, prefer='threads')(delayed(run)(s) for s in starts)
    else:
        blocks = [run(s) for s in starts]
    states = np.concatenate(blocks, axis=0)
    logger.info(f"simulated {n_replicas} replicas x {steps} steps of {getattr(model, 'name', 'model')} "
                f"with {scheme.value} (h={h}, burn_in={burn_in})")
    return Ensemble(states=states, step=h, seed=rng.master_seed, scheme=scheme.value)


def pooled_states(samples):
    """(N, n) states and the replica count from an Ensemble, a Trajectory or an array."""
    if isinstance(samples, Ensemble):
        return samples.samples(), samples.n_replicas
    if isinstance(samples, Trajectory):
        return samples.states, 1
    x = np.asarray(samples, dtype=float)
    return (x[:, None] if x.ndim == 1 else x), 1
