from .schemes import BBKStepper, EulerStepper, bbk_step, euler_maruyama_step
from .simulate import (
    Ensemble, RngSpec, Trajectory, initial_states, pooled_states, simulate_ensemble, simulate_trajectory,
)
from .io import read_ensemble_csv, write_ensemble_csv

__all__ = [
    'BBKStepper', 'EulerStepper', 'bbk_step', 'euler_maruyama_step',
    'Ensemble', 'RngSpec', 'Trajectory', 'initial_states', 'pooled_states', 'simulate_ensemble',
    'simulate_trajectory',
    'read_ensemble_csv', 'write_ensemble_csv',
]
