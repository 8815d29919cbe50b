# File: pathcg/cli/commands.py
import logging
import os
import time

import click
import numpy as np

from ..cg_maps.coefficients import cg_diffusion, cg_friction
from ..cg_maps.maps import project_ensemble, write_cg_map_csv
from ..errors import ConfigError
from ..inference.langevin import (
    evaluate_rer, fit_force_matching_langevin, fit_re_finite_time, fit_rer_stationary_langevin,
)
from ..inference.mle import fit_mle_discrete
from ..inference.normal_equations import force_matching_ls
from ..integrators.io import read_ensemble_csv, write_ensemble_csv
from ..integrators.simulate import simulate_ensemble
from ..metrics.likelihood import BBKKernel, EulerKernel
from ..metrics.norms import WeightedNorm
from ..models import FitMethod, Scheme
from ..oracle.ou import ou_optimal_theta
from ..utils.decorators import exits_on_error
from . import cli_group
from .builtins import build_cg_map, build_family, build_model, run_settings
from .forms import RunConfig
from .reports import Report, read_theta_csv, write_theta_csv

logger = logging.getLogger(__name__)

FIT_MODES = ('fm', 'rer', 're_finite', 'mle')


# --- Helpers ---

def _load(path, require_input=False):
    config = RunConfig.load(path).validate(require_input=require_input)
    logger.info(f"loaded configuration {path} (hash {config.config_hash()[:12]})")
    return config


def _output_dir(config, override):
    return override or config.get('output', 'out')


def _input_ensemble(config, out_dir, default='trajectories.csv'):
    path = config.get('input') or os.path.join(out_dir, default)
    return read_ensemble_csv(path)


def _report(command, config, settings=None):
    return Report(command=command, config_hash=config.config_hash(),
                  seed=None if settings is None else settings.seed)


def _stationary_part(ensemble, config):
    """Drop the first ``fit.discard`` recorded states of every replica."""
    discard = config.get_int('fit.discard', 0)
    if not 0 <= discard < ensemble.length:
        raise ConfigError(f"fit.discard must lie in [0, {ensemble.length}), got {discard}")
    return ensemble.with_states(ensemble.states[:, discard:])


def _mle_kernel(built, cg_map, family, settings, h, scheme):
    model = built.model
    if built.is_langevin:
        if scheme != Scheme.BBK.value:
            raise ConfigError("mle on Langevin data needs trajectories simulated with the bbk scheme")
        gamma_bar = cg_friction(model, cg_map, settings.friction)
        covariance = cg_diffusion(model.noise, cg_map).covariance
        return BBKKernel(family=family, cg_masses=cg_map.cg_mass_diagonal, friction=gamma_bar,
                         covariance=covariance, h=h, convention=settings.convention)
    return EulerKernel(family=family, covariance=cg_diffusion(model.diffusion, cg_map).covariance, h=h)


def _fit(mode, ensemble, built, cg_map, family, settings, config):
    model = built.model
    if mode == 'fm':
        if built.is_langevin:
            return fit_force_matching_langevin(ensemble, family, cg_map, model)
        return force_matching_ls(ensemble, model.drift_at, family, cg_map)
    if mode == 'rer':
        if built.is_langevin:
            return fit_rer_stationary_langevin(ensemble, family, cg_map, settings.friction, model)
        weight = WeightedNorm.for_cg(model.diffusion, cg_map)
        return force_matching_ls(ensemble, model.drift_at, family, cg_map, weight, method=FitMethod.RER)
    if mode == 're_finite':
        return fit_re_finite_time(ensemble, family, cg_map, settings.friction, model)
    projected = project_ensemble(ensemble, cg_map)
    kernel = _mle_kernel(built, cg_map, family, settings, ensemble.step, ensemble.scheme)
    return fit_mle_discrete(projected, kernel, optimizer=config.get('fit.optimizer', 'closed_form'))


def _oracle_check(report, mode, fit, built, cg_map, family):
    """Compare a stationary OU fit with the Lyapunov oracle when one exists."""
    if built.ou is None or not family.is_affine or mode not in ('fm', 'rer') or fit.std_errors is None:
        return
    weight = np.eye(cg_map.m) if mode == 'fm' else None
    oracle = ou_optimal_theta(built.ou, cg_map, family, weight)
    for name, value in zip(fit.names, oracle):
        report.add(f"oracle.theta.{name}", float(value))
    gap = np.abs(np.asarray(fit.theta) - oracle)
    report.add_check('oracle_within_3se', np.all(gap <= 3 * np.asarray(fit.std_errors) + 1e-12),
                     f"max |theta - oracle| = {gap.max():.3e}")


# --- Commands ---

@cli_group.command('simulate')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--output-dir', '-o', default=None, help="Directory for trajectories.csv.")
@exits_on_error
def simulate(config_path, output_dir):
    """Simulate the configured model and write trajectories.csv."""
    config = _load(config_path)
    built = build_model(config)
    settings = run_settings(config, built)
    start = time.perf_counter()
    ensemble = simulate_ensemble(built.model, settings.scheme, built.x0_sampler, settings.h, settings.steps,
                                 settings.replicas, settings.rng, burn_in=settings.burn_in,
                                 convention=settings.convention)
    out_dir = _output_dir(config, output_dir)
    path = write_ensemble_csv(ensemble, os.path.join(out_dir, 'trajectories.csv'))
    logger.info(f"simulate finished in {time.perf_counter() - start:.3f} s")
    click.echo(path)


@cli_group.command('project')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--output-dir', '-o', default=None, help="Directory for projected.csv and cg_map.csv.")
@exits_on_error
def project(config_path, output_dir):
    """Apply the configured CG map to a trajectory file."""
    config = _load(config_path)
    built = build_model(config)
    out_dir = _output_dir(config, output_dir)
    ensemble = _input_ensemble(config, out_dir)
    cg_map = build_cg_map(config, built.model)
    projected = project_ensemble(ensemble, cg_map)
    write_cg_map_csv(cg_map, os.path.join(out_dir, 'cg_map.csv'))
    click.echo(write_ensemble_csv(projected, os.path.join(out_dir, 'projected.csv')))


@cli_group.command('fit')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--mode', type=click.Choice(FIT_MODES), default='fm', show_default=True,
              help="Estimator: force matching, stationary RER, finite-time RE or path MLE.")
@click.option('--output-dir', '-o', default=None, help="Directory for report.txt and theta.csv.")
@exits_on_error
def fit(config_path, mode, output_dir):
    """Fit the configured basis family to microscopic trajectories."""
    config = _load(config_path)
    built = build_model(config)
    settings = run_settings(config, built)
    out_dir = _output_dir(config, output_dir)
    ensemble = _stationary_part(_input_ensemble(config, out_dir), config)
    cg_map = build_cg_map(config, built.model)
    family = build_family(config, cg_map, built.model)

    start = time.perf_counter()
    result = _fit(mode, ensemble, built, cg_map, family, settings, config)
    report = _report(f"fit --mode {mode}", config, settings)
    report.add_fit(result)
    _oracle_check(report, mode, result, built, cg_map, family)
    report.add_check('finite_theta', np.all(np.isfinite(result.theta)))
    report.time('fit', time.perf_counter() - start)
    report.write(out_dir)
    write_theta_csv(result, os.path.join(out_dir, 'theta.csv'))
    click.echo(result.to_text())


@cli_group.command('eval-rer')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--output-dir', '-o', default=None, help="Directory holding theta.csv; rer.txt is written here.")
@exits_on_error
def eval_rer(config_path, output_dir):
    """Stationary RER of the reconstructed process for fitted parameters."""
    config = _load(config_path)
    built = build_model(config)
    settings = run_settings(config, built)
    out_dir = _output_dir(config, output_dir)
    ensemble = _stationary_part(_input_ensemble(config, out_dir), config)
    cg_map = build_cg_map(config, built.model)
    family = build_family(config, cg_map, built.model)
    if config.has('fit.theta'):
        theta = config.get_list('fit.theta')
    else:
        theta = read_theta_csv(os.path.join(out_dir, 'theta.csv'))
    if theta.size != family.size:
        raise ConfigError(f"theta has {theta.size} entries, the basis has {family.size}")

    result = evaluate_rer(ensemble, built.model, family, theta, cg_map, settings.friction)
    report = _report('eval-rer', config, settings)
    report.add('rer', result.value, result.std_error)
    report.add_text('rer.mode', result.mode.value)
    report.add_text('rer.n_samples', result.n_samples)
    report.add_check('nonnegative_within_3se', result.consistent)
    report.write(out_dir, 'rer.txt')
    click.echo(result.to_text())


@cli_group.command('validate')
@click.option('--inject-fault', type=click.Choice(['right-inverse']), default=None,
              help="Corrupt an invariant to check that the battery catches it.")
@click.option('--only', multiple=True, type=int, help="Run only the given criterion numbers.")
@click.option('--output-dir', '-o', default='validation', show_default=True)
@exits_on_error
def validate(inject_fault, only, output_dir):
    """Run the acceptance battery; exits 1 when any criterion fails."""
    from .validate import run_battery

    results = run_battery(fault=inject_fault, only=only or None)
    report = Report(command='validate')
    for number, result in results:
        report.add_check(f"{number:02d}_{result.name}", result.passed, result.detail)
        report.time(f"{number:02d}_{result.name}", result.runtime)
        click.echo(result.to_text(number))
    report.write(output_dir)
    if not report.passed:
        logger.error("validation battery failed")
        raise SystemExit(1)
