# File: tests/test_integrators.py
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pathcg.errors import BlowUpError, ConfigError, HypothesisError
from pathcg.integrators import (
    Ensemble, RngSpec, bbk_step, euler_maruyama_step, read_ensemble_csv, simulate_ensemble, simulate_trajectory,
    write_ensemble_csv,
)
from pathcg.models import BBKConvention, SDEModel, Scheme


def test_euler_step_is_explicit(ou1):
    assert_allclose(euler_maruyama_step(ou1.to_sde(), [[1.0]], 0.1, [[0.0]]), [[0.9]])


def test_bbk_step_without_noise(harmonic):
    q, p = bbk_step(harmonic, [[1.0]], [[0.0]], 0.1, [[0.0]], [[0.0]])
    assert_allclose(q, [[0.995]])
    assert_allclose(p, [[-0.095]])


def test_literal_convention_reverses_the_bbk_force(harmonic):
    q, p = bbk_step(harmonic, [[1.0]], [[0.0]], 0.1, [[0.0]], [[0.0]], convention='paper_literal')
    assert_allclose(q, [[1.005]])
    assert_allclose(p, [[0.10025 / 1.05]])
    assert BBKConvention('paper_literal') is BBKConvention.PAPER_LITERAL


def test_seed_must_fit_in_64_bits():
    with pytest.raises(ConfigError):
        RngSpec(-1)


def test_ensemble_is_reproducible(ou2, rng):
    a = simulate_ensemble(ou2.to_sde(), Scheme.EULER_MARUYAMA, ou2.stationary_sampler(), 0.01, 50, 5, rng)
    b = simulate_ensemble(ou2.to_sde(), Scheme.EULER_MARUYAMA, ou2.stationary_sampler(), 0.01, 50, 5, rng)
    assert_array_equal(a.states, b.states)
    assert a.states.shape == (5, 51, 2)


def test_results_do_not_depend_on_worker_count(ou1, rng):
    args = (ou1.to_sde(), Scheme.EULER_MARUYAMA, ou1.stationary_sampler(), 0.01, 20, 300, rng)
    serial = simulate_ensemble(*args, n_jobs=1)
    threaded = simulate_ensemble(*args, n_jobs=2)
    assert_array_equal(serial.states, threaded.states)


def test_trajectory_matches_ensemble_replica(ou2, rng):
    x0 = np.array([0.3, -0.2])
    traj = simulate_trajectory(ou2.to_sde(), Scheme.EULER_MARUYAMA, x0, 0.01, 30, rng, burn_in=0, replica=0)
    ens = simulate_ensemble(ou2.to_sde(), Scheme.EULER_MARUYAMA, x0, 0.01, 30, 3, rng, burn_in=0)
    assert_allclose(traj.states, ens.states[0], rtol=1e-12, atol=1e-14)
    assert_array_equal(traj.states[0], x0)


def test_burn_in_is_not_recorded(ou1, rng):
    ens = simulate_ensemble(ou1.to_sde(), Scheme.EULER_MARUYAMA, [0.0], 0.01, 10, 2, rng, burn_in=5)
    assert ens.length == 11
    assert ens.horizon == pytest.approx(0.1)


def test_bbk_simulation_needs_a_langevin_model(ou1, rng):
    with pytest.raises(HypothesisError):
        simulate_ensemble(ou1.to_sde(), Scheme.BBK, [0.0], 0.01, 10, 1, rng)


def test_blow_up_is_reported(rng):
    model = SDEModel(dim=1, drift=lambda x: 10 * x ** 3, diffusion=[[1.0]], name='explosive')
    with np.errstate(over='ignore', invalid='ignore'):
        with pytest.raises(BlowUpError) as info:
            simulate_ensemble(model, Scheme.EULER_MARUYAMA, [10.0], 0.1, 50, 1, rng, burn_in=0)
    assert info.value.replica == 0
    assert info.value.step >= 1


def test_langevin_models_run_under_both_schemes(harmonic, rng):
    for scheme in (Scheme.BBK, Scheme.EULER_MARUYAMA):
        ens = simulate_ensemble(harmonic, scheme, np.zeros(2), 0.01, 20, 2, rng)
        assert ens.dim == 2
        assert ens.scheme == scheme.value


def test_csv_round_trip_keeps_full_precision(ou2, rng, tmp_path):
    ens = simulate_ensemble(ou2.to_sde(), Scheme.EULER_MARUYAMA, ou2.stationary_sampler(), 0.01, 5, 3, rng)
    path = write_ensemble_csv(ens, tmp_path / 'trajectories.csv')
    with open(path) as handle:
        assert handle.readline().startswith('# dim=2 step=0.01')
    back = read_ensemble_csv(path)
    assert isinstance(back, Ensemble)
    assert_array_equal(back.states, ens.states)
    assert back.seed == ens.seed
    assert_array_equal(back.replicas, [0, 1, 2])


def test_missing_trajectory_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        read_ensemble_csv(tmp_path / 'nope.csv')
