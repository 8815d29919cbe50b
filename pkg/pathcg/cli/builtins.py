# File: pathcg/cli/builtins.py
# Builders from a RunConfig to models, CG maps, basis families and initial-state samplers.

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import sympy

from ..bases import get_basis
from ..cg_maps.maps import (
    CGMap, PhaseCGMap, make_center_of_mass_map, make_particle_projection_map, make_projection_map,
    read_cg_map_csv,
)
from ..errors import ConfigError
from ..integrators.simulate import RngSpec
from ..models import BBKConvention, FrictionOption, LangevinModel, SDEModel, Scheme, as_square_matrix
from ..oracle.ou import OUModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BuiltModel:
    """ A microscopic model together with what the CLI needs to run it. """
    model: object
    x0_sampler: object
    ou: Optional[OUModel] = None

    @property
    def is_langevin(self):
        return isinstance(self.model, LangevinModel)

    @property
    def state_dim(self):
        return 2 * self.model.dof if self.is_langevin else self.model.dim

    @property
    def default_scheme(self):
        return Scheme.BBK if self.is_langevin else Scheme.EULER_MARUYAMA


# --- Models ---

def _noise_matrix(config, key, dim, default):
    raw = config.get_matrix(key, default)
    if raw.shape == (1, 1):
        return as_square_matrix(raw[0, 0], dim, key)
    if raw.shape[0] == 1 and raw.shape[1] == dim:
        return as_square_matrix(raw[0], dim, key)
    return as_square_matrix(raw, dim, key)


def _chain_stiffness(n_particles, k, k0, spatial_dim):
    """(k * graph Laplacian of the chain + k0 I) kron I_d."""
    stiffness = k0 * np.eye(n_particles)
    for j in range(n_particles - 1):
        stiffness[j, j] += k
        stiffness[j + 1, j + 1] += k
        stiffness[j, j + 1] -= k
        stiffness[j + 1, j] -= k
    return np.kron(stiffness, np.eye(spatial_dim))


def _gibbs_gaussian_sampler(stiffness, mass_diagonal, beta):
    """Exact draws of q ~ N(0, (beta K)^-1), p ~ N(0, M / beta)."""
    try:
        factor = np.linalg.cholesky(np.linalg.inv(beta * stiffness))
    except np.linalg.LinAlgError:
        raise ConfigError("stiffness matrix is singular; set model.k0 > 0 or give an explicit init.x0")
    p_scale = np.sqrt(mass_diagonal / beta)

    def sampler(generator):
        q = factor @ generator.standard_normal(factor.shape[0])
        p = p_scale * generator.standard_normal(p_scale.size)
        return np.concatenate([q, p])

    return sampler


def _ou(config):
    a = config.get_matrix('model.A', '1')
    ou = OUModel(A=a, sigma=_noise_matrix(config, 'model.sigma', a.shape[0], '1'))
    return BuiltModel(model=ou.to_sde(), x0_sampler=ou.stationary_sampler(), ou=ou)


def _langevin_parameters(config):
    n_particles = config.get_int('model.n_particles', 1)
    spatial_dim = config.get_int('model.spatial_dim', 1)
    if n_particles < 1 or spatial_dim < 1:
        raise ConfigError("model.n_particles and model.spatial_dim must be positive")
    masses = np.full(n_particles, config.get_float('model.mass', 1.0))
    return n_particles, spatial_dim, masses, config.get_float('model.gamma', 1.0), config.get_float('model.beta', 1.0)


def _harmonic_chain(config):
    n_particles, d, masses, gamma, beta = _langevin_parameters(config)
    stiffness = _chain_stiffness(n_particles, config.get_float('model.k', 1.0),
                                 config.get_float('model.k0', 0.0), d)

    def force(q):
        return -np.asarray(q, dtype=float) @ stiffness

    model = LangevinModel.thermostatted(masses, force, gamma, beta=beta, spatial_dim=d, conservative=True,
                                        name='harmonic_chain')
    sampler = None
    if config.get('init.x0', 'stationary') == 'stationary':
        sampler = _gibbs_gaussian_sampler(stiffness, model.mass_diagonal, beta)
    return BuiltModel(model=model, x0_sampler=sampler)


def _driven_langevin(config):
    n_particles, d, masses, gamma, beta = _langevin_parameters(config)
    k = config.get_float('model.k', 1.0)
    drive = config.get_float('model.f', 0.5)

    def force(q):
        return -k * np.asarray(q, dtype=float) + drive

    model = LangevinModel.thermostatted(masses, force, gamma, beta=beta, spatial_dim=d, conservative=False,
                                        name='driven_langevin')
    return BuiltModel(model=model, x0_sampler=None)


def expression_field(text, n):
    """Vectorised field from ';'-separated sympy expressions in q1..qn."""
    symbols = sympy.symbols(' '.join(f"q{i + 1}" for i in range(n)))
    symbols = symbols if isinstance(symbols, tuple) else (symbols,)
    parts = [p.strip() for p in text.split(';') if p.strip()]
    if len(parts) != n:
        raise ConfigError(f"expression has {len(parts)} components, expected {n}")
    try:
        exprs = [sympy.sympify(p, locals={s.name: s for s in symbols}) for p in parts]
    except (sympy.SympifyError, TypeError) as exc:
        raise ConfigError(f"cannot parse force expression {text!r}: {exc}")
    unknown = set().union(*(e.free_symbols for e in exprs)) - set(symbols)
    if unknown:
        raise ConfigError(f"unknown symbols {sorted(map(str, unknown))} in force expression")
    components = [sympy.lambdify(symbols, e, modules='numpy') for e in exprs]

    def field(x):
        x = np.asarray(x, dtype=float)
        args = [x[..., i] for i in range(n)]
        return np.stack([np.broadcast_to(np.asarray(c(*args), dtype=float), x.shape[:-1]) for c in components],
                        axis=-1)

    return field


def _expression(config):
    kind = config.get('model.kind', 'langevin')
    text = config.get('model.force')
    if not text:
        raise ConfigError("expression models need model.force")
    if kind == 'overdamped':
        n = config.get_int('model.dim', 1)
        sigma = _noise_matrix(config, 'model.sigma', n, str(np.sqrt(2.0)))
        model = SDEModel(dim=n, drift=expression_field(text, n), diffusion=sigma, name='expression')
        return BuiltModel(model=model, x0_sampler=None)
    if kind != 'langevin':
        raise ConfigError(f"model.kind must be 'langevin' or 'overdamped', got {kind!r}")
    n_particles, d, masses, gamma, beta = _langevin_parameters(config)
    model = LangevinModel.thermostatted(masses, expression_field(text, n_particles * d), gamma, beta=beta,
                                        spatial_dim=d, conservative=False, name='expression')
    return BuiltModel(model=model, x0_sampler=None)


MODEL_BUILDERS = {
    'ou': _ou,
    'harmonic_chain': _harmonic_chain,
    'driven_langevin': _driven_langevin,
    'expression': _expression,
}


def build_model(config):
    name = config.get('model.name', 'ou')
    try:
        builder = MODEL_BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose one of {sorted(MODEL_BUILDERS)}")
    built = builder(config)
    if config.has('init.x0') and config.get('init.x0') != 'stationary':
        x0 = config.get_list('init.x0')
        if x0.size != built.state_dim:
            raise ConfigError(f"init.x0 has {x0.size} entries, the {name} state has {built.state_dim}")
        built = BuiltModel(model=built.model, x0_sampler=x0, ou=built.ou)
    elif built.x0_sampler is None:
        if config.get('init.x0') == 'stationary':
            raise ConfigError(f"{name} has no exact stationary sampler; give init.x0 and a burn-in")
        built = BuiltModel(model=built.model, x0_sampler=np.zeros(built.state_dim), ou=built.ou)
    logger.debug(f"built model {built.model!r}")
    return built


# --- CG maps and bases ---

def build_cg_map(config, model):
    kind = config.get('cg.kind', 'projection')
    langevin = isinstance(model, LangevinModel)
    if kind == 'file':
        cg_map = read_cg_map_csv(config.get('cg.file', ''))
    elif kind == 'center_of_mass':
        if not langevin:
            raise ConfigError("center_of_mass maps need a Langevin model")
        cg_map = make_center_of_mass_map(model.masses, config.get_groups('cg.groups'), model.spatial_dim)
    elif kind == 'particle_projection':
        if not langevin:
            raise ConfigError("particle_projection maps need a Langevin model")
        kept = [int(i) for i in config.get_list('cg.kept')]
        cg_map = make_particle_projection_map(model.masses, kept, model.spatial_dim)
    elif kind == 'projection':
        if langevin:
            raise ConfigError("use particle_projection to project a Langevin model")
        cg_map = make_projection_map(model.dim, [int(i) for i in config.get_list('cg.kept', '0')])
    elif kind == 'general':
        matrix = config.get_matrix('cg.matrix')
        if langevin:
            cg_masses = config.get_list('cg.masses')
            cg_map = PhaseCGMap.from_position_map(matrix, model.masses, cg_masses, model.spatial_dim)
        else:
            cg_map = CGMap.from_matrix(matrix)
    else:
        raise ConfigError(f"unknown CG map kind {kind!r}")
    expected = model.dof if langevin else model.dim
    if cg_map.n != expected or isinstance(cg_map, PhaseCGMap) != langevin:
        raise ConfigError(f"CG map {cg_map!r} does not fit model {model!r}")
    return cg_map


def build_family(config, cg_map, model):
    spatial_dim = model.spatial_dim if isinstance(model, LangevinModel) else 1
    return get_basis(config.get('fit.basis', 'linear'), cg_map.m, spatial_dim)


# --- Run settings ---

@dataclass(frozen=True)
class RunSettings:
    """ Simulation knobs shared by every command; all randomness flows from ``seed``. """
    scheme: Scheme
    h: float
    steps: int
    replicas: int
    seed: int
    burn_in: Optional[int]
    friction: FrictionOption
    convention: BBKConvention = BBKConvention.STANDARD

    @property
    def rng(self):
        return RngSpec(self.seed)


def run_settings(config, built):
    scheme = Scheme(config.get('scheme', built.default_scheme.value))
    burn_in = config.get_int('burn_in') if config.has('burn_in') else None
    return RunSettings(scheme=scheme, h=config.get_float('h', 0.01), steps=config.get_int('steps', 1000),
                       replicas=config.get_int('replicas', 1), seed=config.get_int('seed', 0), burn_in=burn_in,
                       friction=FrictionOption(config.get('fit.friction', 'a')),
                       convention=BBKConvention(config.get('bbk.convention', BBKConvention.STANDARD.value)))

