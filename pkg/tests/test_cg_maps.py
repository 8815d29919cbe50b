# File: tests/test_cg_maps.py
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pathcg.bases import linear_basis
from pathcg.cg_maps import (
    CGMap, ReconstructionSpec, cg_diffusion, cg_friction, make_center_of_mass_map, make_particle_projection_map,
    make_projection_map, project_ensemble, read_cg_map_csv, reconstruct_drift, reconstructed_sde, right_inverse,
    verify_reconstruction, write_cg_map_csv,
)
from pathcg.errors import CGDiffusionError, ConfigError, DimensionError, FrictionConsistencyError, RankDeficientError
from pathcg.integrators import Ensemble
from pathcg.models import CGMapKind, LangevinModel, SDEModel


# --- Maps ---

def test_right_inverse_is_exact():
    matrix = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    pinv = right_inverse(matrix)
    assert_allclose(matrix @ pinv, np.eye(2), atol=1e-14)


def test_rank_deficient_map_is_refused():
    with pytest.raises(RankDeficientError) as info:
        CGMap.from_matrix([[1.0, 1.0], [2.0, 2.0]])
    assert info.value.singular_values is not None
    with pytest.raises(RankDeficientError):
        right_inverse(np.eye(3)[:, :2])


def test_center_of_mass_map_is_mass_consistent():
    pm = make_center_of_mass_map([1.0, 2.0, 3.0], [[0, 1], [2]], 2)
    assert pm.m == 4 and pm.n == 6
    assert_allclose(pm.cg_masses, [3.0, 3.0])
    assert pm.pos_map.right_inverse_residual() <= 1e-12
    assert max(pm.mass_consistency_residual()) <= 1e-12
    # the first CG coordinate is (1 q_0x + 2 q_1x) / 3
    assert_allclose(pm.pos_map.matrix[0], [1 / 3, 0, 2 / 3, 0, 0, 0])
    assert_allclose(pm.mom_map.matrix[0], [1, 0, 1, 0, 0, 0])


@pytest.mark.parametrize('groups', [[[0, 1], [1, 2]], [[0, 1]], [[0, 1, 2], []], [[0, 1, 5]]])
def test_bad_groups_are_config_errors(groups):
    with pytest.raises(ConfigError):
        make_center_of_mass_map([1.0, 1.0, 1.0], groups, 1)


def test_projection_maps():
    cg_map = make_projection_map(3, [2, 0])
    assert cg_map.kind is CGMapKind.PROJECTION
    assert_array_equal(cg_map.right_inverse, cg_map.matrix.T)
    assert_allclose(cg_map.apply([1.0, 2.0, 3.0]), [3.0, 1.0])
    with pytest.raises(ConfigError):
        make_projection_map(3, [1, 1])
    with pytest.raises(DimensionError):
        make_projection_map(3, [3])

    pm = make_particle_projection_map([1.0, 4.0], [1], 2)
    assert_array_equal(pm.mom_map.matrix, pm.pos_map.matrix)
    assert_allclose(pm.cg_masses, [4.0])
    assert max(pm.mass_consistency_residual()) == 0.0


def test_complement_is_killed_by_the_map(generator):
    cg_map = make_center_of_mass_map([1.0, 2.0], [[0, 1]], 1).pos_map
    x = generator.standard_normal((10, 2))
    assert_allclose(cg_map.apply(cg_map.complement(x)), 0.0, atol=1e-14)


def test_project_ensemble_keeps_metadata(keep_first):
    ens = Ensemble(states=np.arange(12.0).reshape(2, 3, 2), step=0.5, seed=9, scheme='euler_maruyama')
    projected = project_ensemble(ens, keep_first)
    assert projected.dim == 1
    assert projected.seed == 9 and projected.step == 0.5
    assert_array_equal(projected.states[..., 0], ens.states[..., 0])
    with pytest.raises(DimensionError):
        project_ensemble(projected, keep_first)


def test_cg_map_csv_round_trip(chain_com, keep_first, tmp_path):
    back = read_cg_map_csv(write_cg_map_csv(chain_com, tmp_path / 'com.csv'))
    assert back.kind is CGMapKind.CENTER_OF_MASS
    assert_allclose(back.pos_map.matrix, chain_com.pos_map.matrix)
    assert_allclose(back.cg_masses, chain_com.cg_masses)
    plain = read_cg_map_csv(write_cg_map_csv(keep_first, tmp_path / 'keep.csv'))
    assert_array_equal(plain.matrix, keep_first.matrix)
    with pytest.raises(ConfigError):
        read_cg_map_csv(tmp_path / 'missing.csv')


# --- Coefficients ---

def test_cg_friction_options_agree_on_uniform_chain(chain, chain_com):
    model, _ = chain
    assert_allclose(cg_friction(model, chain_com, 'a'), [[3.0]])
    assert_allclose(cg_friction(model, chain_com, 'b'), [[3.0]])


def test_inconsistent_friction_needs_option_b(chain_com):
    model = LangevinModel.thermostatted(np.ones(3), lambda q: -q, [1.0, 2.0, 3.0], spatial_dim=1)
    with pytest.raises(FrictionConsistencyError) as info:
        cg_friction(model, chain_com, 'a')
    assert info.value.residual > 0
    assert_allclose(cg_friction(model, chain_com, 'b'), [[6.0]])


def test_cg_diffusion(chain, chain_com, keep_first):
    model, _ = chain
    result = cg_diffusion(model.noise, chain_com)
    assert_allclose(result.covariance, [[6.0]])
    assert_allclose(result.factor @ result.factor, result.covariance)
    with pytest.raises(CGDiffusionError):
        cg_diffusion([[0.0, 0.0], [0.0, 1.0]], keep_first)


def test_state_dependent_cg_diffusion_must_be_constant(keep_first):
    def sigma(x):
        return (1.0 + x[:, 0] ** 2)[:, None, None] * np.eye(2)

    def sigma_second(x):
        return np.stack([np.eye(2) * [1.0, 1.0 + abs(v)] for v in x[:, 1]])

    with pytest.raises(CGDiffusionError):
        cg_diffusion(sigma, keep_first, [[0.0, 0.0], [1.0, 0.0]])
    result = cg_diffusion(sigma_second, keep_first, [[0.0, 0.0], [0.0, 3.0]])
    assert_allclose(result.covariance, [[1.0]])


# --- Reconstruction ---

def test_reconstructed_drift_splits_into_cg_and_orthogonal_parts(ou2, keep_first):
    drift = reconstruct_drift(ou2.drift, linear_basis(1), ReconstructionSpec(keep_first), [-0.7])
    assert_allclose(drift(np.array([[1.0, 2.0]])), [[-0.7, -4.0]])
    with pytest.raises(DimensionError):
        reconstruct_drift(ou2.drift, linear_basis(2), ReconstructionSpec(keep_first))


def test_orthogonal_part_never_leaks_into_the_cg_space(ou2, keep_first, generator):
    x = generator.standard_normal((50, 2))
    assert ReconstructionSpec(keep_first).check(x, drift=ou2.drift) <= 1e-14
    with pytest.raises(DimensionError):
        ReconstructionSpec(keep_first).check(x)


def test_projected_reconstruction_matches_cg_process(ou2, keep_first, rng):
    cg = SDEModel(dim=1, drift=lambda x: -0.7 * x, diffusion=[[1.0]], name='ou-cg')
    report = verify_reconstruction(ou2.to_sde(), cg, keep_first, ou2.stationary_sampler(), 2000, [0.1, 0.5],
                                   0.05, rng)
    assert_allclose(report.times, [0.1, 0.5])
    assert report.worst_ratio < 5
    with pytest.raises(DimensionError):
        verify_reconstruction(ou2.to_sde(), cg, keep_first, ou2.stationary_sampler(), 10, [0.12], 0.05, rng)


def test_shifted_cg_drift_fails_the_reconstruction_check(ou2, keep_first, rng):
    def cg_drift(xbar):
        return -0.7 * xbar

    reconstructed = reconstructed_sde(ou2.to_sde(), cg_drift, keep_first)
    shifted = SDEModel(dim=1, drift=lambda x: cg_drift(x) + 1.0, diffusion=[[1.0]], name='ou-cg-shifted')
    report = verify_reconstruction(ou2.to_sde(), shifted, keep_first, ou2.stationary_sampler(), 2000, [0.5, 1.0],
                                   0.05, rng, reconstructed=reconstructed)
    assert not report.passed
    assert report.worst_ratio > 3
    # the mean gap grows like (1 - exp(-0.7 t)) / 0.7
    assert_allclose(report.mean_diff[:, 0], -(1 - np.exp(-0.7 * report.times)) / 0.7, atol=0.1)
    assert abs(report.mean_diff[1, 0]) > abs(report.mean_diff[0, 0])
