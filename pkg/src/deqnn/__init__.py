"""Disentangling quantum neural estimation of entropies and distances on compressed states."""
from .bounds import BoundReport, continuity_bound, disentanglement_bound, lemma1_bound
from .circuit import Ansatz, build_ansatz, circuit_unitary, conjugate, default_layers, initialize_parameters
from .cost import CostSpec, Sampled, cost, disentanglement_error, purity_witness, sampled_swap_test, swap_expectation
from .harness import ExperimentConfig, ExperimentReport, certify, emit_plot, run_experiment
from .linalg import DensityMatrix, QubitPartition, partial_trace
from .optimizer import (
    TrainingConfig,
    TrainingTrace,
    finite_difference_gradient,
    parameter_shift_gradient,
    train,
)
from .quantities import (
    QuantityKind,
    bures_angle,
    bures_distance,
    fidelity,
    hilbert_schmidt,
    renyi,
    trace_distance,
    tsallis,
    von_neumann,
)
from .stategen import haar_random_unitary, perfect_disentangler, random_mixed_state, required_preserved_qubits

__version__ = "0.1.0"
