# File: pathcg/cg_maps/maps.py
import logging
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.linalg import block_diag, cho_factor, cho_solve

from ..app_config import current_config
from ..errors import ConfigError, DimensionError, NumericalError, RankDeficientError
from ..integrators.simulate import Trajectory
from ..models import CGMapKind

logger = logging.getLogger(__name__)


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def right_inverse(matrix, rank_tol=None):
    """Pi^# = Pi^T (Pi Pi^T)^-1 for a full-rank Pi (m <= n)."""
    config = current_config()
    rank_tol = config.RANK_TOL if rank_tol is None else rank_tol
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    m, n = matrix.shape
    s = np.linalg.svd(matrix, compute_uv=False)
    if m > n or s.size < m or s.max() == 0 or s.min() <= rank_tol * s.max():
        raise RankDeficientError(
            f"CG map of shape {matrix.shape} is rank deficient; singular values {np.array2string(s, precision=3)}",
            singular_values=s)
    gram = cho_factor(matrix @ matrix.T)
    pinv = cho_solve(gram, matrix).T
    residual = np.max(np.abs(matrix @ pinv - np.eye(m)))
    if residual > config.RIGHT_INVERSE_TOL:
        raise NumericalError(f"right inverse residual {residual:.3e} exceeds {config.RIGHT_INVERSE_TOL}")
    return pinv


@dataclass(frozen=True)
class CGMap:
    """ Linear map Pi: R^n -> R^m with a cached right inverse (Pi Pi^# = I_m). """
    matrix: np.ndarray
    right_inverse: np.ndarray
    kind: CGMapKind = CGMapKind.GENERAL

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        pinv = np.atleast_2d(np.asarray(self.right_inverse, dtype=float))
        if pinv.shape != matrix.T.shape:
            raise DimensionError(f"right inverse has shape {pinv.shape}, expected {matrix.T.shape}")
        object.__setattr__(self, 'matrix', _readonly(matrix))
        object.__setattr__(self, 'right_inverse', _readonly(pinv))
        object.__setattr__(self, 'kind', CGMapKind(self.kind))

    @classmethod
    def from_matrix(cls, matrix, kind=CGMapKind.GENERAL):
        return cls(matrix=matrix, right_inverse=right_inverse(matrix), kind=kind)

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]

    def apply(self, x):
        """Pi x for states (..., n)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionError(f"state has {x.shape[-1]} components, CG map expects {self.n}")
        return x @ self.matrix.T

    def lift(self, xbar):
        """Pi^# xbar for CG states (..., m)."""
        return np.asarray(xbar, dtype=float) @ self.right_inverse.T

    def complement(self, x):
        """(I - Pi^# Pi) x."""
        return np.asarray(x, dtype=float) - self.lift(self.apply(x))

    def right_inverse_residual(self):
        return float(np.max(np.abs(self.matrix @ self.right_inverse - np.eye(self.m))))

    def __repr__(self):
        return f'<CGMap {self.kind.value} {self.m}x{self.n}>'


@dataclass(frozen=True)
class PhaseCGMap:
    """ Position map Pi_q, momentum map Pi_p = Mbar Pi_q M^-1 and CG masses. """
    pos_map: CGMap
    mom_map: CGMap
    masses: np.ndarray
    cg_masses: np.ndarray
    spatial_dim: int = 3

    def __post_init__(self):
        object.__setattr__(self, 'masses', _readonly(np.atleast_1d(self.masses)))
        object.__setattr__(self, 'cg_masses', _readonly(np.atleast_1d(self.cg_masses)))
        if np.any(self.masses <= 0) or np.any(self.cg_masses <= 0):
            raise NumericalError("masses must be strictly positive")
        if self.pos_map.n != self.masses.size * self.spatial_dim:
            raise DimensionError(f"position map acts on {self.pos_map.n} coordinates, "
                                 f"expected {self.masses.size * self.spatial_dim}")
        if self.pos_map.m != self.cg_masses.size * self.spatial_dim:
            raise DimensionError(f"position map has {self.pos_map.m} rows, "
                                 f"expected {self.cg_masses.size * self.spatial_dim}")

    @classmethod
    def from_position_map(cls, pos_matrix, masses, cg_masses, spatial_dim=3, kind=CGMapKind.GENERAL,
                          mom_matrix=None):
        """Build Pi_p = Mbar Pi_q M^-1 and Pi^#_p = M Pi^#_q Mbar^-1 from Pi_q."""
        masses = np.atleast_1d(np.asarray(masses, dtype=float))
        cg_masses = np.atleast_1d(np.asarray(cg_masses, dtype=float))
        mass_diag = np.repeat(masses, spatial_dim)
        cg_mass_diag = np.repeat(cg_masses, spatial_dim)
        pos_map = CGMap.from_matrix(pos_matrix, kind)
        if mom_matrix is None:
            mom_matrix = cg_mass_diag[:, None] * pos_map.matrix / mass_diag[None, :]
        mom_pinv = mass_diag[:, None] * pos_map.right_inverse / cg_mass_diag[None, :]
        mom_map = CGMap(matrix=mom_matrix, right_inverse=mom_pinv, kind=kind)
        return cls(pos_map=pos_map, mom_map=mom_map, masses=masses, cg_masses=cg_masses,
                   spatial_dim=spatial_dim)

    @property
    def kind(self):
        return self.pos_map.kind

    @property
    def mass_diagonal(self):
        return np.repeat(self.masses, self.spatial_dim)

    @property
    def cg_mass_diagonal(self):
        return np.repeat(self.cg_masses, self.spatial_dim)

    @property
    def m(self):
        return self.pos_map.m

    @property
    def n(self):
        return self.pos_map.n

    @property
    def phase_map(self):
        """block-diag(Pi_q, Pi_p) acting on (q, p), with block-diag right inverse."""
        return CGMap(matrix=block_diag(self.pos_map.matrix, self.mom_map.matrix),
                     right_inverse=block_diag(self.pos_map.right_inverse, self.mom_map.right_inverse),
                     kind=self.kind)

    def mass_consistency_residual(self):
        """max |Pi_p - Mbar Pi_q M^-1| and max |Pi^#_p - M Pi^#_q Mbar^-1|."""
        md, cmd = self.mass_diagonal, self.cg_mass_diagonal
        mom = cmd[:, None] * self.pos_map.matrix / md[None, :]
        pinv = md[:, None] * self.pos_map.right_inverse / cmd[None, :]
        return (float(np.max(np.abs(self.mom_map.matrix - mom))),
                float(np.max(np.abs(self.mom_map.right_inverse - pinv))))

    def __repr__(self):
        return f'<PhaseCGMap {self.kind.value} {self.m}x{self.n}>'


# --- Constructors ---

def _check_groups(groups, n_particles):
    groups = [list(map(int, g)) for g in groups]
    seen = set()
    for j, group in enumerate(groups):
        if not group:
            raise ConfigError(f"CG group {j} is empty")
        for i in group:
            if not 0 <= i < n_particles:
                raise ConfigError(f"particle index {i} out of range 0..{n_particles - 1}")
            if i in seen:
                raise ConfigError(f"particle {i} appears in more than one group")
            seen.add(i)
    if len(seen) != n_particles:
        missing = sorted(set(range(n_particles)) - seen)
        raise ConfigError(f"groups do not cover particles {missing}")
    return groups


def make_center_of_mass_map(masses, groups, spatial_dim=3):
    """Map every group of particles to its centre of mass; Mbar_j is the group's total mass."""
    masses = np.atleast_1d(np.asarray(masses, dtype=float))
    if np.any(masses <= 0):
        raise NumericalError("masses must be strictly positive")
    groups = _check_groups(groups, masses.size)
    d = spatial_dim
    cg_masses = np.array([masses[g].sum() for g in groups])
    pos = np.zeros((len(groups) * d, masses.size * d))
    mom = np.zeros_like(pos)
    eye = np.eye(d)
    for j, group in enumerate(groups):
        for i in group:
            pos[j * d:(j + 1) * d, i * d:(i + 1) * d] = masses[i] / cg_masses[j] * eye
            mom[j * d:(j + 1) * d, i * d:(i + 1) * d] = eye
    return PhaseCGMap.from_position_map(pos, masses, cg_masses, spatial_dim, CGMapKind.CENTER_OF_MASS,
                                        mom_matrix=mom)


def _selection_matrix(n, kept):
    kept = [int(i) for i in kept]
    if not kept:
        raise ConfigError("projection must keep at least one coordinate")
    if len(set(kept)) != len(kept):
        raise ConfigError(f"projection indices are not distinct: {kept}")
    for i in kept:
        if not 0 <= i < n:
            raise DimensionError(f"projection index {i} out of range 0..{n - 1}")
    matrix = np.zeros((len(kept), n))
    matrix[np.arange(len(kept)), kept] = 1.0
    return matrix


def make_projection_map(n, kept):
    """0/1 selection of the kept coordinates; Pi^# = Pi^T."""
    matrix = _selection_matrix(n, kept)
    return CGMap(matrix=matrix, right_inverse=matrix.T.copy(), kind=CGMapKind.PROJECTION)


def make_particle_projection_map(masses, kept, spatial_dim=3):
    """Keep whole particles; Mbar holds the kept masses so Pi_p = Pi_q."""
    masses = np.atleast_1d(np.asarray(masses, dtype=float))
    d = spatial_dim
    kept = [int(i) for i in kept]
    coords = [i * d + a for i in kept for a in range(d)]
    pos = make_projection_map(masses.size * d, coords)
    mom = CGMap(matrix=pos.matrix, right_inverse=pos.right_inverse, kind=CGMapKind.PROJECTION)
    return PhaseCGMap(pos_map=pos, mom_map=mom, masses=masses, cg_masses=masses[kept], spatial_dim=d)


# --- Projection of path data ---

def _matrix_for(cg_map):
    return cg_map.phase_map if isinstance(cg_map, PhaseCGMap) else cg_map


def project_trajectory(traj, cg_map):
    """Apply Pi row-wise; step, seed and replica are preserved."""
    cg_map = _matrix_for(cg_map)
    if traj.dim != cg_map.n:
        raise DimensionError(f"trajectory dimension {traj.dim} does not match CG map input {cg_map.n}")
    return Trajectory(states=cg_map.apply(traj.states), step=traj.step, seed=traj.seed,
                      replica=traj.replica, scheme=traj.scheme)


def project_ensemble(ensemble, cg_map):
    cg_map = _matrix_for(cg_map)
    if ensemble.dim != cg_map.n:
        raise DimensionError(f"ensemble dimension {ensemble.dim} does not match CG map input {cg_map.n}")
    return ensemble.with_states(cg_map.apply(ensemble.states))


# --- CSV dumps ---

def write_cg_map_csv(cg_map, path):
    """Header ``m,n,kind`` (plus spatial_dim for phase maps), matrix rows, then mass vectors."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    phase = isinstance(cg_map, PhaseCGMap)
    base = cg_map.pos_map if phase else cg_map
    with open(path, 'w', newline='') as handle:
        if phase:
            handle.write('m,n,kind,spatial_dim\n')
            handle.write(f"{base.m},{base.n},{base.kind.value},{cg_map.spatial_dim}\n")
        else:
            handle.write('m,n,kind\n')
            handle.write(f"{base.m},{base.n},{base.kind.value}\n")
        pd.DataFrame(base.matrix).to_csv(handle, header=False, index=False, float_format='%.17g',
                                         lineterminator='\n')
        if phase:
            handle.write('masses,' + ','.join(f"{v:.17g}" for v in cg_map.masses) + '\n')
            handle.write('cg_masses,' + ','.join(f"{v:.17g}" for v in cg_map.cg_masses) + '\n')
    return path


def read_cg_map_csv(path):
    if not os.path.exists(path):
        raise ConfigError(f"CG map file not found: {path}")
    with open(path) as handle:
        lines = [line.strip() for line in handle if line.strip()]
    header = lines[0].split(',')
    values = lines[1].split(',')
    meta = dict(zip(header, values))
    m, n, kind = int(meta['m']), int(meta['n']), CGMapKind(meta['kind'])
    matrix = np.array([[float(v) for v in row.split(',')] for row in lines[2:2 + m]])
    if matrix.shape != (m, n):
        raise ConfigError(f"{path}: matrix has shape {matrix.shape}, header says {(m, n)}")
    if 'spatial_dim' not in meta:
        if kind is CGMapKind.PROJECTION:
            return CGMap(matrix=matrix, right_inverse=matrix.T.copy(), kind=kind)
        return CGMap.from_matrix(matrix, kind)
    extra = {row.split(',')[0]: np.array([float(v) for v in row.split(',')[1:]]) for row in lines[2 + m:]}
    d = int(meta['spatial_dim'])
    if kind is CGMapKind.CENTER_OF_MASS:
        groups = [list(np.nonzero(matrix[j * d])[0] // d) for j in range(m // d)]
        return make_center_of_mass_map(extra['masses'], groups, d)
    if kind is CGMapKind.PROJECTION:
        kept = [int(np.nonzero(matrix[j * d])[0][0]) // d for j in range(m // d)]
        return make_particle_projection_map(extra['masses'], kept, d)
    return PhaseCGMap.from_position_map(matrix, extra['masses'], extra['cg_masses'], d, kind)
