"""LMSZ sweeps of two coupled qubits or qutrits: closed forms and numerical propagation."""

from ._jit import USE_NUMBA
from .operators import (
    CouplingParams,
    OperatorMatrix,
    QuantumState,
    build_qubit_hamiltonian,
    build_qutrit_hamiltonian,
    commutator_norm,
    k_operator,
    pauli_operators,
    spin1_operators,
    tensor_product,
)
from .propagator import (
    AsymptoticEstimate,
    PropagationConfig,
    PropagationError,
    TimeSeriesResult,
    asymptotic_estimate,
    magnetization_series,
    propagate,
    propagate_blockwise,
    run_sweep,
)
from .qubits import (
    ScenarioKind,
    asymptotic_concurrence,
    asymptotic_pair,
    classify_interactions,
    decompose_qubit_blocks,
    half_crossing_probability,
    lmsz_probability,
    max_entanglement_slope,
    scenario_pair,
    scenario_params,
)
from .qutrits import (
    asymptotic_x,
    decompose_qutrit_blocks,
    fictitious_probabilities,
    four_dim_transition_probs,
    negativity_general,
    negativity_pure_4d,
    qutrit_scenario_pair,
    three_level_probs,
    three_level_reduction,
)
from .sweep import SweepProtocol, lmsz_parameter

__version__ = "0.1.0"
