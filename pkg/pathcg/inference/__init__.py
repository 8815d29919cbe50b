from .normal_equations import FitResult, NormalSystem, assemble, force_matching_ls, solve_normal_system
from .langevin import (
    evaluate_rer, fit_force_matching_langevin, fit_re_finite_time, fit_rer_stationary_langevin, langevin_targets,
    make_cg_langevin_model, make_cg_sde,
)
from .descent import DescentSchedule, StationaryRERObjective, fit_descent
from .mle import fit_mle_discrete
from .compare import MapCandidate, RankedMap, compare_cg_maps

__all__ = [
    'FitResult', 'NormalSystem', 'assemble', 'force_matching_ls', 'solve_normal_system',
    'evaluate_rer', 'fit_force_matching_langevin', 'fit_re_finite_time', 'fit_rer_stationary_langevin',
    'langevin_targets', 'make_cg_langevin_model',
    'make_cg_sde',
    'DescentSchedule', 'StationaryRERObjective', 'fit_descent',
    'fit_mle_discrete',
    'MapCandidate', 'RankedMap', 'compare_cg_maps',
]
