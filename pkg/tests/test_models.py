# File: tests/test_models.py
import numpy as np
import pytest
from numpy.testing import assert_allclose

from pathcg.bases import get_basis, isotropic_basis, linear_basis, pairwise_distance_basis
from pathcg.errors import (
    ConfigError, DimensionError, FluctuationDissipationError, HypothesisError, SingularDiffusionError,
)
from pathcg.models import (
    GibbsSpec, LangevinModel, SDEModel, as_square_matrix, check_conservative_force, check_fluctuation_dissipation,
    eval_parametric_drift, forbid_gibbs_density, make_langevin_sde, make_overdamped_sde,
)


def test_as_square_matrix_expands_scalars_and_diagonals():
    assert_allclose(as_square_matrix(2.0, 3), 2 * np.eye(3))
    assert_allclose(as_square_matrix([1.0, 2.0], 2), np.diag([1.0, 2.0]))
    with pytest.raises(DimensionError):
        as_square_matrix(np.ones((2, 3)), 2)


def test_sde_rejects_rank_deficient_diffusion():
    with pytest.raises(SingularDiffusionError):
        SDEModel(dim=2, drift=lambda x: -x, diffusion=[[1.0, 0.0], [0.0, 0.0]])


def test_sde_callable_diffusion_needs_noise_dim():
    with pytest.raises(DimensionError):
        SDEModel(dim=1, drift=lambda x: -x, diffusion=lambda x: np.ones(x.shape + (1,)))


def test_sde_drift_shape_is_checked():
    model = SDEModel(dim=2, drift=lambda x: x[..., :1], diffusion=np.eye(2))
    with pytest.raises(DimensionError):
        model.drift_at(np.zeros((4, 2)))


def test_equilibrium_model_enforces_fluctuation_dissipation():
    with pytest.raises(FluctuationDissipationError):
        LangevinModel(masses=[1.0], force=lambda q: -q, friction=1.0, noise=1.0, spatial_dim=1, equilibrium=True)


def test_thermostatted_model_satisfies_fluctuation_dissipation():
    model = LangevinModel.thermostatted([1.0, 2.0], lambda q: -q, [1.0, 0.5, 2.0, 1.0], beta=2.0, spatial_dim=2)
    assert model.dof == 4
    assert check_fluctuation_dissipation(model)


def test_langevin_sde_drift_and_diffusion():
    model = LangevinModel.thermostatted([2.0], lambda q: -q, 1.0, spatial_dim=1)
    sde = make_langevin_sde(model)
    assert_allclose(sde.drift_at(np.array([1.0, 2.0])), [1.0, -2.0])
    assert sde.diffusion.shape == (2, 1)
    assert_allclose(sde.diffusion[0], [0.0])


def test_overdamped_sde_has_gradient_drift():
    sde = make_overdamped_sde(lambda x: x, np.sqrt(2.0), dim=1)
    assert_allclose(sde.drift_at(np.array([[0.5], [-2.0]])), [[-0.5], [2.0]])


def test_conservative_force_check():
    gibbs = GibbsSpec(potential=lambda q: 0.5 * np.sum(np.asarray(q) ** 2))
    points = np.random.default_rng(0).standard_normal((5, 3))
    assert check_conservative_force(lambda q: -q, gibbs, points)
    assert not check_conservative_force(lambda q: q, gibbs, points)
    hot = GibbsSpec(potential=gibbs.potential, beta=2.5)
    assert check_conservative_force(lambda q: -q, hot, points)


def test_gibbs_density_can_be_forbidden():
    gibbs = GibbsSpec(potential=lambda q: 0.5 * np.sum(np.asarray(q) ** 2), beta=2.0)
    assert gibbs.log_weight(np.ones(2)) == pytest.approx(-2.0)
    with forbid_gibbs_density('a driven run'):
        with pytest.raises(HypothesisError, match='a driven run'):
            gibbs.log_weight(np.ones(2))
        with pytest.raises(HypothesisError):
            check_conservative_force(lambda q: -q, gibbs, np.ones((1, 2)))
    assert gibbs.log_weight(np.zeros(2)) == 0.0


def test_family_design_and_evaluation():
    family = linear_basis(2)
    x = np.arange(10.0).reshape(5, 2)
    assert family.design(x).shape == (5, 2, 4)
    assert_allclose(eval_parametric_drift(isotropic_basis(2), x, [3.0]), 3 * x)
    theta = np.array([1.0, -1.0, 0.5, 2.0])
    assert_allclose(family.scaled(2.0)(x, theta), 2 * family(x, theta))
    with pytest.raises(DimensionError):
        family.design(np.zeros((3, 3)))


def test_pairwise_distance_basis_pushes_bonded_particles_together():
    family = pairwise_distance_basis(2, 1)
    assert family.names == ('pair0-1^1', 'pair0-1^3')
    design = family.design(np.array([0.0, 1.5]))
    assert_allclose(design[:, 0], [1.5, -1.5])
    assert_allclose(design[:, 1], [1.5 ** 3, -1.5 ** 3])


def test_pairwise_forces_depend_on_distance():
    family = pairwise_distance_basis(3, 2, powers=(2,))
    assert family.size == 3
    x = np.array([[0.0, 0.0, 3.0, 4.0, 0.0, 1.0]])
    design = family.design(x)
    # pair (0, 1): r = (3, 4), |r| = 5
    assert_allclose(design[0, :, 0], [75.0, 100.0, -75.0, -100.0, 0.0, 0.0])
    # pair (0, 2): r = (0, 1), |r| = 1
    assert_allclose(design[0, :, 1], [0.0, 1.0, 0.0, 0.0, 0.0, -1.0])
    assert_allclose(family.design(2 * x)[..., 0], 8 * design[..., 0])
    with pytest.raises(ConfigError):
        pairwise_distance_basis(2, 1, powers=(-1,))
    with pytest.raises(DimensionError):
        pairwise_distance_basis(1, 3)


def test_unknown_basis_is_a_config_error():
    with pytest.raises(ConfigError):
        get_basis('splines', 1)
