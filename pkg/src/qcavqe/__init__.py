"""Variational ground-state simulation of quantum-dot cellular automata circuits."""

from .ansatz import AnsatzSpec, bind, inverter_ansatz, majority2_ansatz, majority6_ansatz, wire_ansatz
from .electrostatics import driver_delta, interaction_table, kink_energies, oracle_kink_energies
from .exact import GroundStateResult, ground_state, ground_state_dense, ground_state_lanczos
from .foundation import (
    Cell,
    CircuitLayout,
    DomainError,
    GridPosition,
    LayoutError,
    ModelConfig,
    NeighborClass,
    PhysicalConstants,
    QcaError,
    Role,
    builtin_layout,
    classify_pair,
    inverter,
    load_layout,
    majority2,
    majority6,
    save_layout,
    wire,
)
from .hamiltonian import PauliSum, PauliTerm, build_hamiltonian, group_by_basis
from .statevector import MeasurementBasis, NoiseModel, ShotCounts, SizeError, StateVector, sample
from .vqe import EstimatorConfig, EstimatorMode, OptimizerConfig, VqeResult, run_vqe

__version__ = "0.1.0"
