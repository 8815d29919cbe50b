# File: pathcg/inference/langevin.py
# Stationary RER and finite-time RE fits of coarse-grained forces.
#
# For a Langevin model the reconstructed-drift mismatch lives in the momentum
# block only, so both problems are force matching of
#   y = Pi_p F(q) - (Pi_p gamma - gamma_bar Pi_q) M^-1 p
# against Fbar(Pi_q q; theta) in the norm |sigma^-1 Pi^#_p . |.

import logging

from ..cg_maps.coefficients import cg_diffusion, cg_friction
from ..cg_maps.maps import PhaseCGMap
from ..cg_maps.reconstruction import ReconstructionSpec, reconstruct_drift, reconstructed_sde
from ..errors import DimensionError, HypothesisError
from ..integrators.simulate import Ensemble, pooled_states
from ..metrics.norms import WeightedNorm
from ..metrics.rer import rer_stationary
from ..models import FitMethod, FrictionOption, LangevinModel, SDEModel, make_langevin_sde
from ..utils.decorators import with_context
from .normal_equations import assemble, solve_normal_system

logger = logging.getLogger(__name__)


def langevin_targets(x, model, pm, option=FrictionOption.A, gamma_bar=None):
    """Force-matching targets y(q, p) and the CG friction they were built with."""
    option = FrictionOption(option)
    if gamma_bar is None:
        gamma_bar = cg_friction(model, pm, option)
    q, p = model.split(x)
    velocity = p * model.inverse_mass
    target = pm.mom_map.apply(model.force_at(q))
    if option is FrictionOption.B:
        mismatch = pm.mom_map.matrix @ model.friction - gamma_bar @ pm.pos_map.matrix
        target = target - velocity @ mismatch.T
    return target, gamma_bar


def _check(model, pm):
    if not isinstance(model, LangevinModel):
        raise HypothesisError("Langevin fits need a LangevinModel")
    if not isinstance(pm, PhaseCGMap):
        raise HypothesisError("Langevin fits need a PhaseCGMap")
    if pm.n != model.dof:
        raise DimensionError(f"CG map acts on {pm.n} coordinates, model has {model.dof}")


@with_context('inference')
def fit_rer_stationary_langevin(samples, family, pm, friction_option, model, strict=False):
    """Minimise the stationary RER over theta for (q, p) samples from the stationary law."""
    _check(model, pm)
    x, n_replicas = pooled_states(samples)
    target, _ = langevin_targets(x, model, pm, friction_option)
    q, _ = model.split(x)
    design = family.design(pm.pos_map.apply(q))
    norm = WeightedNorm.for_phase_map(model.noise, pm)
    system = assemble(design, target, norm, None, n_replicas)
    return solve_normal_system(system, FitMethod.RER, strict, family.names)


@with_context('inference')
def fit_re_finite_time(ensemble, family, cg_map, friction_option=FrictionOption.A, model=None, strict=False):
    """theta*(T) minimising the path-averaged mismatch over [0, T].

    Works on Langevin models with a PhaseCGMap and on overdamped SDE models with
    a CGMap. The time integral is the left-endpoint rule, so the objective is
    T times the mean over recorded (replica, time) states.
    """
    if not isinstance(ensemble, Ensemble):
        ensemble = Ensemble.from_trajectories(ensemble)
    if ensemble.length < 2:
        raise DimensionError("a finite-time fit needs at least one step")
    x = ensemble.states[:, :-1].reshape(-1, ensemble.dim)
    if isinstance(model, LangevinModel):
        _check(model, cg_map)
        target, _ = langevin_targets(x, model, cg_map, friction_option)
        q, _ = model.split(x)
        design = family.design(cg_map.pos_map.apply(q))
        norm = WeightedNorm.for_phase_map(model.noise, cg_map)
    elif isinstance(model, SDEModel):
        target = cg_map.apply(model.drift_at(x))
        design = family.design(cg_map.apply(x))
        norm = WeightedNorm.for_cg(model.diffusion, cg_map)
    else:
        raise HypothesisError("fit_re_finite_time needs a LangevinModel or an SDEModel")
    system = assemble(design, target, norm, x, ensemble.n_replicas, scale=ensemble.horizon)
    return solve_normal_system(system, FitMethod.RE_FINITE_TIME, strict, family.names)


def make_cg_langevin_model(family, theta, model, pm, friction_option=FrictionOption.A, name=None):
    """CG Langevin model with force Fbar(qbar; theta), friction gamma_bar and noise sigma_bar."""
    gamma_bar = cg_friction(model, pm, friction_option)
    noise = cg_diffusion(model.noise, pm).factor
    fitted = family.with_theta(theta)
    return LangevinModel(masses=pm.cg_masses, force=fitted, friction=gamma_bar, noise=noise, beta=model.beta,
                         spatial_dim=pm.spatial_dim, conservative=False, equilibrium=False,
                         name=name or f"{model.name}-cg")


def make_cg_sde(family, theta, model, cg_map, name=None):
    """Overdamped CG model with drift bbar(xbar; theta) and sigma_bar = (Pi Sigma Pi^T)^1/2."""
    noise = cg_diffusion(model.diffusion, cg_map).factor
    fitted = family.with_theta(theta)
    return SDEModel(dim=cg_map.m, drift=fitted, diffusion=noise, name=name or f"{model.name}-cg")


@with_context('inference')
def fit_force_matching_langevin(samples, family, pm, model, strict=False):
    """Plain Euclidean force matching of Pi_p F(q) against Fbar(Pi_q q; theta)."""
    _check(model, pm)
    x, n_replicas = pooled_states(samples)
    q, _ = model.split(x)
    target = pm.mom_map.apply(model.force_at(q))
    design = family.design(pm.pos_map.apply(q))
    system = assemble(design, target, None, None, n_replicas)
    return solve_normal_system(system, FitMethod.FORCE_MATCHING, strict, family.names)


def evaluate_rer(samples, model, family, theta, cg_map, friction_option=FrictionOption.A):
    """Stationary RER of the reconstructed process for a fitted family, in microscopic space."""
    if isinstance(model, LangevinModel):
        _check(model, cg_map)
        phase_sde = make_langevin_sde(model)
        cg_model = make_langevin_sde(make_cg_langevin_model(family, theta, model, cg_map, friction_option))
        b_tilde = reconstructed_sde(phase_sde, cg_model.drift_at, cg_map.phase_map).drift_at
        return rer_stationary(samples, phase_sde.drift_at, b_tilde, phase_sde.diffusion)
    b_tilde = reconstruct_drift(model.drift_at, family, ReconstructionSpec(cg_map), theta)
    return rer_stationary(samples, model.drift_at, b_tilde, model.diffusion)
