from .maps import (
    CGMap, PhaseCGMap, make_center_of_mass_map, make_particle_projection_map, make_projection_map,
    project_ensemble, project_trajectory, read_cg_map_csv, right_inverse, write_cg_map_csv,
)
from .coefficients import CGDiffusion, cg_diffusion, cg_friction
from .reconstruction import (
    ReconstructionReport, ReconstructionSpec, reconstruct_drift, reconstructed_sde, verify_reconstruction,
)

__all__ = [
    'CGMap', 'PhaseCGMap', 'make_center_of_mass_map', 'make_particle_projection_map', 'make_projection_map',
    'project_ensemble', 'project_trajectory', 'read_cg_map_csv', 'right_inverse', 'write_cg_map_csv',
    'CGDiffusion', 'cg_diffusion', 'cg_friction',
    'ReconstructionReport', 'ReconstructionSpec', 'reconstruct_drift', 'reconstructed_sde',
    'verify_reconstruction',
]
