# File: tests/test_oracle.py
import numpy as np
import pytest
from numpy.testing import assert_allclose

from pathcg.bases import affine_basis, linear_basis
from pathcg.errors import DegenerateDataError, DimensionError, QuadratureError, UnstableModelError
from pathcg.inference import force_matching_ls
from pathcg.oracle import (
    GridSpec, OUModel, discrete_ou_mle, gaussian_density, gaussian_relative_entropy, lyapunov_solve,
    ou_finite_time_theta, ou_optimal_objective, ou_optimal_theta, ou_transient_moments, quadrature_expectation,
)


def test_lyapunov_covariance(ou2):
    c = ou2.covariance
    assert_allclose(c, [[25 / 48, -1 / 24], [-1 / 24, 0.25]], rtol=1e-12)
    assert_allclose(ou2.A @ c + c @ ou2.A.T, np.eye(2), atol=1e-12)


def test_unstable_drift_is_refused():
    with pytest.raises(UnstableModelError):
        OUModel(A=[[-1.0]], sigma=[[1.0]])
    with pytest.raises(UnstableModelError):
        lyapunov_solve([[0.0, 1.0], [-1.0, 0.0]], np.eye(2))


def test_optimal_theta_of_the_projected_ou(ou2, keep_first):
    assert_allclose(ou_optimal_theta(ou2, keep_first, linear_basis(1)), [-0.96], rtol=1e-12)
    # the constant direction is irrelevant at zero mean
    assert_allclose(ou_optimal_theta(ou2, keep_first, affine_basis(1)), [-0.96, 0.0], atol=1e-12)


def test_optimal_objective_matches_a_sampled_fit(ou2, keep_first, generator):
    samples = ou2.stationary_samples(100_000, generator)
    fit = force_matching_ls(samples, ou2.drift, linear_basis(1), keep_first)
    exact = ou_optimal_objective(ou2, keep_first, linear_basis(1))
    assert abs(fit.objective - exact) <= 4 * fit.objective_se


def test_transient_moments_relax_to_the_stationary_law(ou2):
    means, covs = ou_transient_moments(ou2, [1.0, -1.0], None, [0.0, 50.0])
    assert_allclose(means[0], [1.0, -1.0])
    assert_allclose(covs[0], np.zeros((2, 2)), atol=1e-14)
    assert_allclose(means[1], 0.0, atol=1e-12)
    assert_allclose(covs[1], ou2.covariance, atol=1e-12)


def test_finite_time_theta_from_stationary_start(ou2, keep_first):
    theta = ou_finite_time_theta(ou2, keep_first, linear_basis(1), np.zeros(2), ou2.covariance, 1.0, 0.01)
    assert_allclose(theta, [-0.96], rtol=1e-8)


def test_closed_form_mle(ou1, generator):
    x = np.empty(5001)
    x[0] = 0.0
    noise = generator.standard_normal(5000) * np.sqrt(2 * 0.01)
    for i in range(5000):
        x[i + 1] = x[i] - x[i] * 0.01 + noise[i]
    result = discrete_ou_mle(x, 0.01)
    assert result.n_transitions == 5000
    assert abs(result.theta + 1.0) <= 4 * result.std_error
    with pytest.raises(DegenerateDataError):
        discrete_ou_mle(np.ones(10), 0.01)
    with pytest.raises(DimensionError):
        discrete_ou_mle(np.zeros((10, 2)), 0.01)


def test_gaussian_relative_entropy():
    assert gaussian_relative_entropy([0.0], [[1.0]], [0.0], [[1.0]]) == 0.0
    assert gaussian_relative_entropy([0.0], [[1.0]], [0.0], [[2.0]]) == pytest.approx(0.5 * (np.log(2.0) - 0.5))
    assert gaussian_relative_entropy([0.0], [[1.0]], [1.0], [[1.0]]) == pytest.approx(0.5)


def test_quadrature_second_moment():
    result = quadrature_expectation(gaussian_density([0.0], [[2.0]]), lambda x: x[..., 0] ** 2,
                                    GridSpec.gaussian([0.0], [[2.0]]))
    assert result.value == pytest.approx(2.0, rel=1e-8)
    assert result.tail_mass < 1e-10


def test_two_dimensional_quadrature():
    cov = np.array([[1.0, 0.3], [0.3, 4.0]])
    grid = GridSpec.gaussian([0.5, 0.0], cov, points=401)
    result = quadrature_expectation(gaussian_density([0.5, 0.0], cov), lambda x: x[..., 0] * x[..., 1], grid)
    assert result.value == pytest.approx(0.3, rel=1e-6)


def test_grid_validation():
    with pytest.raises(QuadratureError):
        GridSpec(center=[0.0], scale=[1.0], points=100)
    with pytest.raises(QuadratureError):
        GridSpec(center=[0.0, 0.0, 0.0], scale=[1.0, 1.0, 1.0])
    with pytest.raises(QuadratureError):
        quadrature_expectation(gaussian_density([0.0], [[1.0]]), lambda x: x[..., 0],
                               GridSpec(center=[0.0], scale=[0.1], half_width=5.0, points=101))
