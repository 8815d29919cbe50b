# File: tests/test_metrics.py
import numpy as np
import pytest
from numpy.testing import assert_allclose

from pathcg.bases import affine_basis, isotropic_basis, linear_basis
from pathcg.cg_maps import make_particle_projection_map, project_ensemble
from pathcg.errors import HypothesisError, SingularDiffusionError
from pathcg.inference import fit_mle_discrete
from pathcg.integrators import simulate_ensemble
from pathcg.metrics import (
    BBKKernel, EulerKernel, WeightedNorm, batch_means, ckp_bound, discrete_rer_bbk, discrete_rer_overdamped, iid_mean,
    observable_discrepancy, path_log_likelihood, re_finite_time, replica_batch_means, rer_stationary, xi_matrix,
)
from pathcg.models import LangevinModel, RERMode, Scheme
from pathcg.oracle import discrete_ou_mle


# --- Statistics ---

def test_standard_errors():
    mean, se = batch_means(np.full(100, 3.0))
    assert mean == 3.0 and se == 0.0
    mean, se = iid_mean([0.0, 0.0, 2.0, 2.0])
    assert mean == 1.0
    assert se == pytest.approx(np.sqrt(4 / 3) / 2)
    mean, se = replica_batch_means([0.0, 0.0, 2.0, 2.0], 2)
    assert mean == 1.0 and se == pytest.approx(1.0)


def test_batch_means_handles_vector_values(generator):
    values = generator.standard_normal((1000, 3))
    mean, se = batch_means(values, n_batches=10)
    assert mean.shape == se.shape == (3,)
    assert np.all(se > 0)


# --- Norms ---

def test_xi_is_a_left_inverse(generator):
    sigma = generator.standard_normal((3, 2))
    assert_allclose(xi_matrix(sigma) @ sigma, np.eye(2), atol=1e-12)
    with pytest.raises(SingularDiffusionError):
        xi_matrix(np.zeros((2, 2)))


def test_cg_norm_weight(keep_first):
    norm = WeightedNorm.for_cg(2.0 * np.eye(2), keep_first)
    assert_allclose(norm.weight(), [[0.25]])
    assert norm.squared(np.array([4.0])) == pytest.approx(4.0)


# --- Relative entropies ---

def test_rer_vanishes_for_the_exact_drift(ou1, generator):
    samples = ou1.stationary_samples(1000, generator)
    report = rer_stationary(samples, ou1.drift, ou1.drift, ou1.sigma)
    assert report.value == 0.0 and report.std_error == 0.0
    assert report.mode is RERMode.STATIONARY and report.consistent


def test_rer_of_a_halved_drift(ou1, generator):
    samples = ou1.stationary_samples(200_000, generator)
    report = rer_stationary(samples, ou1.drift, lambda x: -0.5 * x, ou1.sigma)
    # 1/2 * (0.5 x)^2 / 2 averaged under N(0, 1)
    assert abs(report.value - 0.0625) <= 4 * report.std_error


def test_finite_time_re_adds_the_initial_divergence(ou1, rng):
    paths = simulate_ensemble(ou1.to_sde(), Scheme.EULER_MARUYAMA, ou1.stationary_sampler(), 0.01, 20, 8, rng)
    report = re_finite_time(paths, ou1.drift, ou1.drift, ou1.sigma, initial_term=0.3)
    assert report.value == pytest.approx(0.3)
    assert report.n_samples == 8
    assert report.mode is RERMode.FINITE_TIME
    shifted = re_finite_time(paths.trajectories, ou1.drift, lambda x: -0.5 * x, ou1.sigma)
    assert shifted.value > 0


def test_discrete_rer_pieces(ou2, keep_first, generator):
    samples = ou2.stationary_samples(5000, generator)
    family = linear_basis(1)
    pieces = discrete_rer_overdamped(samples, ou2.to_sde(), keep_first, family, [-0.5], 0.01)
    # matching CG covariance: A is m/2 exactly
    assert pieces.a == pytest.approx(0.5)
    assert pieces.a_se <= 1e-12
    assert pieces.limit_objective == pieces.b
    assert pieces.objective == pytest.approx(pieces.a / 0.01 + pieces.b)

    step = 1e-3
    up = discrete_rer_overdamped(samples, ou2.to_sde(), keep_first, family, [-0.5 + step], 0.01).b
    down = discrete_rer_overdamped(samples, ou2.to_sde(), keep_first, family, [-0.5 - step], 0.01).b
    assert_allclose(pieces.b_gradient, [(up - down) / (2 * step)], rtol=1e-6)


def test_discrete_rer_with_mismatched_covariance(ou2, keep_first, generator):
    samples = ou2.stationary_samples(100, generator)
    pieces = discrete_rer_overdamped(samples, ou2.to_sde(), keep_first, linear_basis(1), [-1.0], 0.01,
                                     cg_covariance=[[2.0]])
    # 1/2 (-log 1/2 + 1/2)
    assert pieces.a == pytest.approx(0.5 * (np.log(2.0) + 0.5))


def test_bbk_objective_needs_equal_masses(generator):
    model = LangevinModel.thermostatted([1.0, 2.0], lambda q: -q, 1.0, spatial_dim=1)
    pm = make_particle_projection_map([1.0, 2.0], [0], 1)
    samples = generator.standard_normal((10, 4))
    with pytest.raises(HypothesisError):
        discrete_rer_bbk(samples, model, pm, isotropic_basis(1), [-1.0], 1e-3)


def test_bbk_objective_smoothing_limit(harmonic, generator, rng):
    samples = generator.standard_normal((50_000, 2))
    pm = make_particle_projection_map([1.0], [0], 1)
    objective = discrete_rer_bbk(samples, harmonic, pm, isotropic_basis(1), [-0.5], 1e-3, rng)
    assert objective.smoothing_ratio == pytest.approx(1.0, abs=0.05)
    assert objective.gradient_ratio()[0] == pytest.approx(1.0, abs=0.05)
    again = discrete_rer_bbk(samples, harmonic, pm, isotropic_basis(1), [-0.5], 1e-3, rng)
    assert again.d == objective.d


# --- Likelihoods ---

def test_likelihood_gradient_matches_finite_differences(ou1, rng):
    series = simulate_ensemble(ou1.to_sde(), Scheme.EULER_MARUYAMA, [0.0], 0.01, 300, 3, rng, burn_in=0)
    likelihood = path_log_likelihood(series, EulerKernel(affine_basis(1), [[2.0]], 0.01))
    theta, step = np.array([-0.7, 0.2]), 1e-3
    _, grad = likelihood(theta)
    numeric = [(likelihood(theta + step * e)[0] - likelihood(theta - step * e)[0]) / (2 * step)
               for e in np.eye(2)]
    assert_allclose(grad, numeric, rtol=1e-6, atol=1e-5)
    assert likelihood.is_concave()


def test_euler_mle_equals_closed_form(ou1, rng):
    series = simulate_ensemble(ou1.to_sde(), Scheme.EULER_MARUYAMA, [1.0], 0.01, 2000, 1, rng).trajectory(0)
    fit = fit_mle_discrete(series, EulerKernel(linear_basis(1), [[2.0]], 0.01))
    exact = discrete_ou_mle(series, 0.01, sigma=np.sqrt(2.0))
    assert fit.theta[0] == pytest.approx(exact.theta, rel=1e-10)
    assert fit.std_errors[0] == pytest.approx(exact.std_error, rel=1e-10)
    assert fit.objective_se is None


def test_bbk_kernel_mle_recovers_the_force(harmonic, rng):
    h = 0.05
    ensemble = simulate_ensemble(harmonic, Scheme.BBK, np.zeros(2), h, 2000, 16, rng, burn_in=200)
    pm = make_particle_projection_map([1.0], [0], 1)
    series = project_ensemble(ensemble, pm)
    kernel = BBKKernel(isotropic_basis(1), [1.0], [[1.0]], [[2.0]], h)
    fit = fit_mle_discrete(series, kernel)
    assert abs(fit.theta[0] + 1.0) <= 4 * fit.std_errors[0]


# --- Observables ---

def test_ckp_bound_on_identical_samples(generator):
    samples = generator.standard_normal((1000, 1))
    result = ckp_bound(lambda x: np.tanh(x[..., 0]), samples, samples, 0.0, sup_norm=1.0, paired=True)
    assert result.lhs == 0.0 and result.rhs == 0.0
    assert result.holds and not result.sup_estimated
    estimated = ckp_bound(np.cos, samples, samples, 0.5)
    assert estimated.sup_estimated and estimated.sup_norm <= 1.0


def test_discrepancy_on_identical_samples(generator):
    samples = generator.standard_normal(500)
    report = observable_discrepancy([lambda x: x[..., 0], lambda x: x[..., 0] ** 2], samples, samples)
    assert report.value == 0.0
    assert report.indistinguishable
