"""SLE growth, the lifted Virasoro flow, and level-2 null vectors."""

from .virasoro import (
    ModuleParams,
    VermaVector,
    c_kappa,
    commutator_coeff,
    gram_matrix,
    h_kappa,
    hamiltonian_state,
    kac_params,
    lower,
    raise_,
    shapovalov,
    singular_defect,
)
from .group_flow import EnvelopingElement, evolve, exp_increment, generator_step_defect, multiply
from .loewner import SWALLOWED, DrivingPath, LoewnerMapState, forward_map, laurent_flow, sample_driving, trace
from .martingale import boundary_martingale_test, drift_test, expected_initial_drift, pairing_series

__version__ = "0.1.0"
