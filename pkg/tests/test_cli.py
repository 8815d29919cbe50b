# File: tests/test_cli.py
from unittest import mock

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner
from numpy.testing import assert_allclose

from pathcg import create_cli
from pathcg.app_config import current_config
from pathcg.cli.builtins import build_cg_map, build_model, expression_field, run_settings
from pathcg.cli.forms import RunConfig
from pathcg.cli.reports import Report, read_theta_csv
from pathcg.cli.validate import (
    ckp_transferability, equilibrium_reduction, non_equilibrium_pipeline, time_step_independence,
)
from pathcg.errors import ConfigError, HypothesisError, ValidationError
from pathcg.integrators import RngSpec, read_ensemble_csv
from pathcg.models import BBKConvention, GibbsSpec, Scheme

OU_CONFIG = """\
# 2D Ornstein-Uhlenbeck test bed
model.name = ou
model.A = 1,0.5;0,2
model.sigma = 1
h = 0.01
steps = 400
replicas = 8
burn_in = 0
seed = 11
cg.kind = projection
cg.kept = 0
fit.basis = linear
"""

CHAIN_CONFIG = """\
model.name = harmonic_chain
model.n_particles = 3
model.k = 1
model.k0 = 1
h = 0.01
steps = 200
replicas = 4
seed = 5
cg.kind = center_of_mass
cg.groups = 0,1,2
fit.basis = isotropic
"""


@pytest.fixture
def cli():
    return create_cli('test')


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, text, name='run.cfg', **overrides):
    lines = [line for line in text.splitlines() if line.split('=')[0].strip() not in overrides]
    lines += [f"{key.replace('__', '.')} = {value}" for key, value in overrides.items()]
    path = tmp_path / name
    path.write_text('\n'.join(lines) + '\n')
    return str(path)


# --- Configuration ---

def test_run_config_parsing():
    config = RunConfig.parse("b = 2  # comment\n\na = 1,2;3,4\n")
    assert config.get_int('b') == 2
    assert_allclose(config.get_matrix('a'), [[1, 2], [3, 4]])
    assert RunConfig.parse(config.dumps()).values == config.values
    assert config.dumps() == "a = 1,2;3,4\nb = 2\n"
    assert len(config.config_hash()) == 64


def test_run_config_rejects_bad_input():
    with pytest.raises(ConfigError):
        RunConfig.parse("a = 1\na = 2\n")
    with pytest.raises(ConfigError):
        RunConfig.parse("just words\n")
    with pytest.raises(ValidationError):
        RunConfig.parse("h = -1\n").validate()
    with pytest.raises(ValidationError):
        RunConfig.parse("fit.friction = c\n").validate()
    with pytest.raises(ValidationError):
        RunConfig.parse("steps = many\n").validate()
    with pytest.raises(ValidationError):
        RunConfig.parse("bbk.convention = sideways\n").validate()


def test_builders_follow_the_configuration():
    config = RunConfig.parse(OU_CONFIG)
    built = build_model(config)
    assert built.ou is not None and built.state_dim == 2
    assert build_cg_map(config, built.model).m == 1
    settings = run_settings(config, built)
    assert settings.scheme is Scheme.EULER_MARUYAMA
    assert settings.replicas == 8 and settings.seed == 11

    chain = build_model(RunConfig.parse(CHAIN_CONFIG))
    assert run_settings(RunConfig.parse(CHAIN_CONFIG), chain).scheme is Scheme.BBK
    literal = RunConfig.parse(CHAIN_CONFIG + "bbk.convention = paper_literal\n").validate()
    assert run_settings(literal, chain).convention is BBKConvention.PAPER_LITERAL
    assert run_settings(RunConfig.parse(CHAIN_CONFIG), chain).convention is BBKConvention.STANDARD
    with pytest.raises(ConfigError):
        build_cg_map(RunConfig.parse("cg.kind = projection\n"), chain.model)
    with pytest.raises(ConfigError):
        build_model(RunConfig.parse("model.name = driven_langevin\ninit.x0 = stationary\n"))
    with pytest.raises(ConfigError):
        build_model(RunConfig.parse("model.name = ou\ninit.x0 = 1,2\n"))


def test_expression_fields():
    field = expression_field('-q1 + q2; q1**2', 2)
    assert_allclose(field(np.array([[1.0, 2.0], [3.0, 0.0]])), [[1.0, 1.0], [-3.0, 9.0]])
    assert_allclose(expression_field('-2', 1)(np.zeros((4, 1))), -2 * np.ones((4, 1)))
    with pytest.raises(ConfigError):
        expression_field('-q1 + z', 1)
    with pytest.raises(ConfigError):
        expression_field('-q1', 2)


def test_report_text():
    report = Report(command='fit', config_hash='abc', seed=3)
    report.add('x', 1.5, 0.25)
    report.add('y', 2.0)
    report.add_check('ok', True)
    report.add_check('bad', False, 'off by one')
    text = report.to_text(include_runtime=False)
    assert 'x = 1.5\nx.se = 0.25\ny = 2.0\ny.se = exact\n' in text
    assert 'check.bad = FAIL  # off by one' in text
    assert text.endswith('check.all = FAIL\n')
    assert not report.passed


# --- Commands ---

def test_simulate_is_reproducible(cli, runner, tmp_path):
    config = write_config(tmp_path, OU_CONFIG, steps=10, replicas=4)
    first = runner.invoke(cli, ['simulate', config, '-o', str(tmp_path / 'a')])
    second = runner.invoke(cli, ['simulate', config, '-o', str(tmp_path / 'b')])
    assert first.exit_code == 0, first.output
    assert second.exit_code == 0, second.output
    a = (tmp_path / 'a' / 'trajectories.csv').read_bytes()
    assert a == (tmp_path / 'b' / 'trajectories.csv').read_bytes()
    ensemble = read_ensemble_csv(str(tmp_path / 'a' / 'trajectories.csv'))
    assert ensemble.states.shape == (4, 11, 2)
    assert ensemble.seed == 11
    frame = pd.read_csv(tmp_path / 'a' / 'trajectories.csv', skiprows=1)
    assert sorted(frame['replica'].unique()) == [0, 1, 2, 3]


def test_invalid_configuration_exits_with_code_2(cli, runner, tmp_path):
    result = runner.invoke(cli, ['simulate', write_config(tmp_path, OU_CONFIG, h=-1)])
    assert result.exit_code == 2
    result = runner.invoke(cli, ['simulate', str(tmp_path / 'missing.cfg')])
    assert result.exit_code == 2


def test_fit_modes_write_reports(cli, runner, tmp_path):
    config = write_config(tmp_path, OU_CONFIG)
    out = str(tmp_path / 'out')
    assert runner.invoke(cli, ['simulate', config, '-o', out]).exit_code == 0

    thetas = {}
    for mode in ('fm', 'rer', 'mle', 're_finite'):
        result = runner.invoke(cli, ['fit', config, '--mode', mode, '-o', out])
        assert result.exit_code == 0, result.output
        report = (tmp_path / 'out' / 'report.txt').read_text()
        assert f"command = fit --mode {mode}" in report
        assert 'check.finite_theta = PASS' in report
        assert 'provenance.config_hash = ' in report
        thetas[mode] = read_theta_csv(str(tmp_path / 'out' / 'theta.csv'))
        if mode in ('fm', 'rer'):
            assert 'oracle.theta.x0->e0 = ' in report
    assert_allclose(thetas['rer'], thetas['fm'], atol=1e-4)
    assert 'fit.method = re_finite' in report


def test_eval_rer_reads_the_fitted_theta(cli, runner, tmp_path):
    config = write_config(tmp_path, OU_CONFIG)
    out = str(tmp_path / 'out')
    assert runner.invoke(cli, ['simulate', config, '-o', out]).exit_code == 0
    assert runner.invoke(cli, ['fit', config, '--mode', 'rer', '-o', out]).exit_code == 0
    result = runner.invoke(cli, ['eval-rer', config, '-o', out])
    assert result.exit_code == 0, result.output
    text = (tmp_path / 'out' / 'rer.txt').read_text()
    assert 'rer.se = ' in text
    assert 'check.nonnegative_within_3se = PASS' in text


def test_project_writes_map_and_projection(cli, runner, tmp_path):
    config = write_config(tmp_path, OU_CONFIG, steps=5)
    out = str(tmp_path / 'out')
    assert runner.invoke(cli, ['simulate', config, '-o', out]).exit_code == 0
    result = runner.invoke(cli, ['project', config, '-o', out])
    assert result.exit_code == 0, result.output
    assert read_ensemble_csv(str(tmp_path / 'out' / 'projected.csv')).dim == 1
    assert (tmp_path / 'out' / 'cg_map.csv').exists()


def test_chain_center_of_mass_fit(cli, runner, tmp_path):
    config = write_config(tmp_path, CHAIN_CONFIG)
    out = str(tmp_path / 'out')
    assert runner.invoke(cli, ['simulate', config, '-o', out]).exit_code == 0
    result = runner.invoke(cli, ['fit', config, '--mode', 'rer', '-o', out])
    assert result.exit_code == 0, result.output
    assert_allclose(read_theta_csv(str(tmp_path / 'out' / 'theta.csv')), [-3.0], atol=1e-8)


def test_structural_criterion_and_fault_injection(cli, runner, tmp_path):
    result = runner.invoke(cli, ['validate', '--only', '8', '-o', str(tmp_path / 'ok')])
    assert result.exit_code == 0, result.output
    assert 'check.08_structural_exactness = PASS' in (tmp_path / 'ok' / 'report.txt').read_text()
    result = runner.invoke(cli, ['validate', '--only', '8', '--inject-fault', 'right-inverse',
                                 '-o', str(tmp_path / 'fault')])
    assert result.exit_code == 1
    assert 'right_inverse' in (tmp_path / 'fault' / 'report.txt').read_text()


def test_non_equilibrium_pipeline_never_touches_a_gibbs_density():
    with mock.patch.object(GibbsSpec, 'log_weight', side_effect=AssertionError('Gibbs density used')):
        passed, detail = non_equilibrium_pipeline(current_config(), RngSpec(3), None)
    assert passed, detail
    assert 'mle=' in detail


def test_version_and_fallback_configuration(runner, monkeypatch):
    monkeypatch.setenv('PATHCG_CONFIG', 'test')
    cli = create_cli('no-such-config')
    assert current_config().DEBUG
    result = runner.invoke(cli, ['--version'])
    assert result.exit_code == 0
    assert '0.1.0' in result.output


def test_literal_convention_changes_the_simulated_paths(cli, runner, tmp_path):
    standard = write_config(tmp_path, CHAIN_CONFIG, steps=20, replicas=2)
    literal = write_config(tmp_path, CHAIN_CONFIG, name='literal.cfg', steps=20, replicas=2,
                           bbk__convention='paper_literal')
    assert runner.invoke(cli, ['simulate', standard, '-o', str(tmp_path / 'a')]).exit_code == 0
    assert runner.invoke(cli, ['simulate', literal, '-o', str(tmp_path / 'b')]).exit_code == 0
    a = read_ensemble_csv(str(tmp_path / 'a' / 'trajectories.csv')).states
    b = read_ensemble_csv(str(tmp_path / 'b' / 'trajectories.csv')).states
    assert a.shape == b.shape
    assert not np.allclose(a, b)


# --- Validation criteria ---

def test_equilibrium_reduction_runs_on_a_langevin_chain():
    passed, detail = equilibrium_reduction(current_config(), RngSpec(9), None)
    assert passed, detail
    assert 'sigma^2=2' in detail


def test_gibbs_density_use_fails_the_non_equilibrium_pipeline():
    def touches_the_density(*args, **kwargs):
        return GibbsSpec(potential=lambda q: 0.5 * np.sum(q ** 2)).log_weight(np.zeros(1))

    with mock.patch('pathcg.cli.validate.fit_force_matching_langevin', side_effect=touches_the_density):
        with pytest.raises(HypothesisError):
            non_equilibrium_pipeline(current_config(), RngSpec(3), None)


def test_time_step_gaps_shrink_with_h():
    passed, detail = time_step_independence(current_config(), RngSpec(13), None)
    assert passed, detail
    assert 'gaps=' in detail


def test_ckp_bound_holds_on_every_seed():
    config = current_config()
    passed, detail = ckp_transferability(config, RngSpec(17), None)
    assert passed, detail
    total = 2 * config.VALIDATION_SEEDS
    assert f"{total}/{total}" in detail
