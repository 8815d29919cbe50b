# File: pathcg/cli/validate.py
# Acceptance battery. Every criterion returns (passed, detail); failures are
# results, not exceptions, so one broken criterion never hides the others.

import logging
from dataclasses import dataclass

import numpy as np

from ..app_config import current_config
from ..bases import affine_basis, isotropic_basis, linear_basis
from ..cg_maps.coefficients import cg_diffusion, cg_friction
from ..cg_maps.maps import (
    CGMap, make_center_of_mass_map, make_particle_projection_map, make_projection_map, project_ensemble,
)
from ..cg_maps.reconstruction import verify_reconstruction
from ..errors import PathCGError
from ..inference.descent import StationaryRERObjective, fit_descent
from ..inference.langevin import (
    fit_force_matching_langevin, fit_re_finite_time, fit_rer_stationary_langevin, make_cg_langevin_model,
)
from ..inference.mle import fit_mle_discrete
from ..inference.normal_equations import force_matching_ls
from ..integrators.simulate import RngSpec, simulate_ensemble
from ..metrics.likelihood import BBKKernel, EulerKernel, path_log_likelihood
from ..metrics.norms import WeightedNorm
from ..metrics.observables import ckp_bound
from ..metrics.rer import discrete_rer_bbk, re_finite_time, rer_stationary
from ..metrics.statistics import replica_batch_means
from ..models import FrictionOption, LangevinModel, Scheme, forbid_gibbs_density, make_langevin_sde
from ..oracle.ou import OUModel, gaussian_relative_entropy, ou_optimal_theta
from ..utils.decorators import timed

logger = logging.getLogger(__name__)

OU_2D = np.array([[1.0, 0.5], [0.0, 2.0]])


@dataclass(frozen=True)
class CriterionResult:
    """ Outcome of one acceptance criterion. """
    name: str
    passed: bool
    detail: str
    runtime: float = 0.0

    def to_text(self, number=0):
        return f"[{'PASS' if self.passed else 'FAIL'}] {number:2d} {self.name} ({self.runtime:.2f} s): {self.detail}"


def _within(a, b, se, slack=0.0):
    return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= 3 * np.asarray(se) + slack))


# --- Criteria ---

def rer_force_matching_equivalence(config, rng, fault):
    """Descent on the Monte Carlo RER and weighted force matching share their argmin."""
    ou = OUModel(A=OU_2D, sigma=np.eye(2))
    samples = ou.stationary_samples(config.VALIDATION_SAMPLES, rng.generator(0))
    cg_map, family = make_projection_map(2, [0]), linear_basis(1)
    fm = force_matching_ls(samples, ou.drift, family, cg_map, WeightedNorm.for_cg(ou.sigma, cg_map))
    objective = StationaryRERObjective.overdamped(samples, ou.to_sde(), family, cg_map)
    descent = fit_descent(objective, np.zeros(family.size))
    oracle = ou_optimal_theta(ou, cg_map, family)
    gap = float(np.max(np.abs(fm.theta - descent.theta)))
    passed = gap <= 1e-3 and _within(fm.theta, oracle, fm.std_errors)
    return passed, f"fm={fm.theta.tolist()} descent={descent.theta.tolist()} oracle={oracle.tolist()} gap={gap:.2e}"


def oracle_recovery(config, rng, fault):
    """1D OU: force matching recovers -a and the sample variance matches sigma^2 / (2a)."""
    ou = OUModel(A=[[1.0]], sigma=[[np.sqrt(2.0)]])
    replicas = max(config.VALIDATION_REPLICAS // 10, 64)
    ensemble = simulate_ensemble(ou.to_sde(), Scheme.EULER_MARUYAMA, ou.stationary_sampler(), 1e-3, 1000,
                                 replicas, rng, burn_in=0)
    fit = force_matching_ls(ensemble, ou.drift, linear_basis(1), make_projection_map(1, [0]))
    variance, variance_se = replica_batch_means(ensemble.samples()[:, 0] ** 2, replicas)
    target = float(ou.covariance[0, 0])
    passed = _within(fit.theta, [-1.0], fit.std_errors, 1e-10) and _within(variance, target, variance_se)
    return passed, (f"theta={fit.theta.tolist()} variance={variance:.5f}+-{variance_se:.5f} "
                    f"oracle={target:.5f}")


def time_step_independence(config, rng, fault):
    """MLE and force-matching estimates agree across h on one physical horizon."""
    horizon, replicas = 10.0, 64
    ou1 = OUModel(A=[[1.0]], sigma=[[np.sqrt(2.0)]])
    ou2 = OUModel(A=OU_2D, sigma=np.eye(2))
    cg_map, family = make_projection_map(2, [0]), linear_basis(1)
    mle, fm = [], []
    for h in (1e-2, 5e-3, 2.5e-3):
        steps = int(round(horizon / h))
        series = simulate_ensemble(ou1.to_sde(), Scheme.EULER_MARUYAMA, ou1.stationary_sampler(), h, steps,
                                   replicas, rng, burn_in=0)
        mle.append(fit_mle_discrete(series, EulerKernel(linear_basis(1), ou1.noise_covariance, h)))
        micro = simulate_ensemble(ou2.to_sde(), Scheme.EULER_MARUYAMA, ou2.stationary_sampler(), h, steps,
                                  replicas, rng.child(1), burn_in=0)
        fm.append(force_matching_ls(micro, ou2.drift, family, cg_map))
    passed, gaps = True, {}
    for label, fits in (('mle', mle), ('fm', fm)):
        pairs = list(zip(fits, fits[1:]))
        gaps[label] = [float(np.max(np.abs(coarse.theta - fine.theta))) for coarse, fine in pairs]
        ses = [float(np.max(np.hypot(coarse.std_errors, fine.std_errors))) for coarse, fine in pairs]
        passed = passed and all(_within(c.theta, f.theta, np.hypot(c.std_errors, f.std_errors), 0.05)
                                for c, f in pairs)
        # the gap at the finer pair may not exceed the coarser one beyond its own noise
        passed = passed and all(g_fine <= g_coarse + 3 * se for g_coarse, g_fine, se
                                in zip(gaps[label], gaps[label][1:], ses[1:]))
    rounded = {k: [round(g, 4) for g in v] for k, v in gaps.items()}
    return passed, (f"mle={[round(float(f.theta[0]), 4) for f in mle]} "
                    f"fm={[round(float(f.theta[0]), 4) for f in fm]} gaps={rounded}")


def finite_time_consistency(config, rng, fault):
    """re_finite_time / T matches the stationary RER for stationary input."""
    ou = OUModel(A=[[1.0]], sigma=[[np.sqrt(2.0)]])
    sde = ou.to_sde()

    def b_tilde(x):
        return -0.5 * np.asarray(x, dtype=float)

    exact = ou.stationary_samples(config.VALIDATION_SAMPLES, rng.child(2).generator(0))
    stationary = rer_stationary(exact, sde.drift_at, b_tilde, sde.diffusion)
    details, passed = [f"rer={stationary.value:.5f}+-{stationary.std_error:.5f}"], True
    for horizon in (1.0, 2.0, 4.0):
        h = 5e-3
        paths = simulate_ensemble(sde, Scheme.EULER_MARUYAMA, ou.stationary_sampler(), h,
                                  int(round(horizon / h)), config.VALIDATION_REPLICAS, rng, burn_in=0)
        finite = re_finite_time(paths, sde.drift_at, b_tilde, sde.diffusion)
        rate, rate_se = finite.value / horizon, finite.std_error / horizon
        passed = passed and _within(rate, stationary.value, np.hypot(rate_se, stationary.std_error))
        details.append(f"T={horizon:g}: {rate:.5f}+-{rate_se:.5f}")
    return passed, ' '.join(details)


def harmonic_langevin(spring=1.0):
    def force(q):
        return -spring * np.asarray(q, dtype=float)

    return LangevinModel.thermostatted([1.0], force, 1.0, beta=1.0, spatial_dim=1, name='harmonic')


def bbk_limit_constant(config, rng, fault):
    """D_h / C -> 4 and grad(C + D_h) / grad(5C) -> 1 on Gibbs samples at small h."""
    model = harmonic_langevin()
    samples = rng.generator(0).standard_normal((config.VALIDATION_SAMPLES, 2))
    pm = make_particle_projection_map([1.0], [0], 1)
    objective = discrete_rer_bbk(samples, model, pm, isotropic_basis(1), [-0.5], 1e-3, rng.child(1))
    ratio = objective.smoothing_ratio
    grad_ratio = float(objective.gradient_ratio()[0])
    passed = abs(ratio - 1) <= 0.1 and abs(grad_ratio - 1) <= 0.1
    return passed, f"D/(4C)={ratio:.4f} grad ratio={grad_ratio:.4f}"


def chain_model(k=1.0, k0=1.0, n_particles=3):
    stiffness = k0 * np.eye(n_particles)
    for j in range(n_particles - 1):
        stiffness[j:j + 2, j:j + 2] += k * np.array([[1.0, -1.0], [-1.0, 1.0]])
    model = LangevinModel.thermostatted(np.ones(n_particles), lambda q: -np.asarray(q, dtype=float) @ stiffness,
                                        1.0, beta=1.0, spatial_dim=1, name='chain')
    return model, stiffness


def reconstruction_consistency(config, rng, fault):
    """Projected reconstructed process and CG process agree in mean and covariance."""
    k0 = 1.0
    model, stiffness = chain_model(k0=k0)
    pm = make_center_of_mass_map(model.masses, [[0, 1, 2]], 1)
    cg = make_cg_langevin_model(isotropic_basis(1), [-3 * k0], model, pm)
    cov_q = np.linalg.inv(stiffness)
    factor = np.linalg.cholesky(cov_q)

    def gibbs(generator):
        return np.concatenate([factor @ generator.standard_normal(3), generator.standard_normal(3)])

    report = verify_reconstruction(make_langevin_sde(model), make_langevin_sde(cg), pm.phase_map, gibbs,
                                   config.VALIDATION_REPLICAS, [0.1, 1.0], 1e-2, rng)
    return report.passed, f"worst |diff|/se = {report.worst_ratio:.2f} over t=0.1,1"


def ckp_transferability(config, rng, fault):
    """The CKP bound holds for the fitted CG OU model on every seed."""
    ou = OUModel(A=OU_2D, sigma=np.eye(2))
    cg_map, family = make_projection_map(2, [0]), linear_basis(1)
    observables = {'tanh': np.tanh, 'lorentz': lambda x: 1.0 / (1.0 + x ** 2)}
    n = max(config.VALIDATION_SAMPLES // 10, 1000)
    c11 = float(ou.covariance[0, 0])
    failures = 0
    for seed in range(config.VALIDATION_SEEDS):
        z = RngSpec(rng.master_seed + seed).generator(0).standard_normal((n, 2))
        samples = z @ np.linalg.cholesky(ou.covariance).T
        theta = float(force_matching_ls(samples, ou.drift, family, cg_map).theta[0])
        cg_variance = 1.0 / (2 * abs(theta))
        divergence = gaussian_relative_entropy([0.0], [[c11]], [0.0], [[cg_variance]])
        micro = cg_map.apply(samples)
        # the fitted CG OU is Gaussian with variance 1 / (2 |theta|), so rescaled micro draws are exact
        # stationary samples of it and pair with them for the bound
        coarse = micro * np.sqrt(cg_variance / c11)
        for phi in observables.values():
            result = ckp_bound(lambda x, phi=phi: phi(x[..., 0]), micro, coarse, divergence, sup_norm=1.0,
                               paired=True)
            failures += not result.holds
    total = config.VALIDATION_SEEDS * len(observables)
    return failures == 0, f"bound held on {total - failures}/{total} (seed, observable) pairs"


def structural_exactness(config, rng, fault):
    """Right inverse, mass consistency, normal residual and likelihood gradients."""
    pm = make_center_of_mass_map([1.0, 2.0, 3.0], [[0, 1], [2]], 2)
    pos = pm.pos_map
    if fault == 'right-inverse':
        corrupted = np.array(pos.right_inverse)
        corrupted[0, 0] += 1e-3
        pos = CGMap(matrix=pos.matrix, right_inverse=corrupted, kind=pos.kind)
        logger.warning("fault injected: corrupted right inverse")
    checks = {'right_inverse': pos.right_inverse_residual() <= 1e-12,
              'mass_consistency': max(pm.mass_consistency_residual()) <= 1e-12}

    ou = OUModel(A=OU_2D, sigma=np.eye(2))
    samples = ou.stationary_samples(10_000, rng.generator(0))
    fit = force_matching_ls(samples, ou.drift, linear_basis(1), make_projection_map(2, [0]))
    checks['normal_residual'] = fit.residual <= 1e-10

    series = simulate_ensemble(OUModel(A=[[1.0]], sigma=[[np.sqrt(2.0)]]).to_sde(), Scheme.EULER_MARUYAMA,
                               [0.0], 1e-2, 500, 4, rng.child(1), burn_in=0)
    likelihood = path_log_likelihood(series, EulerKernel(affine_basis(1), [[2.0]], 1e-2))
    theta0, step = np.array([-0.7, 0.2]), 1e-3
    _, grad = likelihood(theta0)
    numeric = np.array([(likelihood(theta0 + step * e)[0] - likelihood(theta0 - step * e)[0]) / (2 * step)
                        for e in np.eye(theta0.size)])
    checks['likelihood_gradient'] = bool(np.max(np.abs(numeric - grad)) <= 1e-6 * max(np.max(np.abs(grad)), 1.0))
    failed = [name for name, ok in checks.items() if not ok]
    return not failed, 'all exact' if not failed else f"failed: {', '.join(failed)}"


def equilibrium_reduction(config, rng, fault):
    """Equilibrium Langevin chain, scalar noise and a particle projection: the stationary RER
    objective is the plain force-matching residual divided by 2 sigma^2 on every sample."""
    model, stiffness = chain_model()
    s2 = float(model.noise[0, 0] ** 2)
    pm = make_particle_projection_map(model.masses, [0, 1], 1)
    family = linear_basis(2)
    generator = rng.generator(0)
    n = 10_000
    q = generator.standard_normal((n, 3)) @ np.linalg.cholesky(np.linalg.inv(stiffness)).T
    samples = np.concatenate([q, generator.standard_normal((n, 3))], axis=1)
    rer = fit_rer_stationary_langevin(samples, family, pm, FrictionOption.A, model)
    fm = fit_force_matching_langevin(samples, family, pm, model)

    residual = pm.mom_map.apply(model.force_at(q)) - family(pm.pos_map.apply(q), fm.theta)
    weighted = 0.5 * WeightedNorm.for_phase_map(model.noise, pm).squared(residual)
    plain = 0.5 * np.sum(residual ** 2, axis=-1) / s2
    gap = float(np.max(np.abs(weighted - plain) / np.maximum(plain, 1.0)))
    theta_gap = float(np.max(np.abs(rer.theta - fm.theta)))
    objective_gap = abs(rer.objective - fm.objective / s2) / max(fm.objective / s2, 1.0)
    passed = gap <= 1e-12 and theta_gap <= 1e-10 and objective_gap <= 1e-12
    return passed, (f"per-sample gap={gap:.2e} theta gap={theta_gap:.2e} objective gap={objective_gap:.2e} "
                    f"sigma^2={s2:g}")


def driven_langevin_model(drive=0.5):
    def force(q):
        return -np.asarray(q, dtype=float) + drive

    return LangevinModel.thermostatted([1.0], force, 1.0, beta=1.0, spatial_dim=1, conservative=False,
                                       name='driven')


def non_equilibrium_pipeline(config, rng, fault):
    """Driven Langevin model: every fit runs on samples alone and recovers (-1, 0.5)."""
    with forbid_gibbs_density('the non-equilibrium pipeline'):
        model = driven_langevin_model()
        h = 1e-2
        replicas = max(config.VALIDATION_REPLICAS // 40, 16)
        ensemble = simulate_ensemble(model, Scheme.BBK, np.zeros(2), h, 2000, replicas, rng, burn_in=500)
        pm = make_particle_projection_map([1.0], [0], 1)
        family = affine_basis(1)
        expected = np.array([-1.0, 0.5])
        fits = {'rer': fit_rer_stationary_langevin(ensemble, family, pm, 'a', model),
                'fm': fit_force_matching_langevin(ensemble, family, pm, model),
                're_finite': fit_re_finite_time(ensemble, family, pm, 'a', model)}
        kernel = BBKKernel(family=family, cg_masses=pm.cg_mass_diagonal, friction=cg_friction(model, pm, 'a'),
                           covariance=cg_diffusion(model.noise, pm).covariance, h=h)
        mle = fit_mle_discrete(project_ensemble(ensemble, pm), kernel)
    passed = all(_within(f.theta, expected, f.std_errors, 1e-8) for f in fits.values())
    passed = passed and _within(mle.theta, expected, mle.std_errors, 0.02)
    fits['mle'] = mle
    return passed, ' '.join(f"{k}={np.round(f.theta, 6).tolist()}" for k, f in fits.items())


CRITERIA = (
    ('rer_fm_equivalence', rer_force_matching_equivalence),
    ('oracle_recovery', oracle_recovery),
    ('time_step_independence', time_step_independence),
    ('finite_time_consistency', finite_time_consistency),
    ('bbk_limit_constant', bbk_limit_constant),
    ('reconstruction', reconstruction_consistency),
    ('ckp_transferability', ckp_transferability),
    ('structural_exactness', structural_exactness),
    ('equilibrium_reduction', equilibrium_reduction),
    ('non_equilibrium', non_equilibrium_pipeline),
)


@timed
def _run(criterion, config, rng, fault):
    try:
        return criterion(config, rng, fault)
    except PathCGError as exc:
        logger.error(f"{criterion.__name__} raised {exc}")
        return False, f"error: {exc}"


def run_battery(fault=None, only=None):
    """Run the selected criteria (all by default) as [(number, CriterionResult)]."""
    config = current_config()
    results = []
    for number, (name, criterion) in enumerate(CRITERIA, start=1):
        if only and number not in only:
            continue
        rng = RngSpec(config.VALIDATION_SEED + number)
        (passed, detail), runtime = _run(criterion, config, rng, fault)
        results.append((number, CriterionResult(name=name, passed=bool(passed), detail=detail, runtime=runtime)))
        logger.info(f"criterion {number} {name}: {'pass' if passed else 'FAIL'} in {runtime:.2f} s")
    return results
