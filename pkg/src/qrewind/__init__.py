"""Simulation toolkit for rewinding unknown qubit evolutions with a quantum SWITCH."""
from .gateset import ExperimentPair, input_state, input_states, make_pair, select_pairs
from .protocol import error_corrected_commutator, full_rewind_with_correction, single_shot_rewind, switch_apply
from .qalg import DomainError, commutativity_nc, commutator, anticommutator
from .tomography import NoiseModel, mle_reconstruct, monte_carlo_fidelity

__version__ = "0.1.0"
