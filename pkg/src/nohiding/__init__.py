"""Qubit state randomization, hidden-information recovery, and its NMR realization."""
from .circuit import (HidingIsometry, ProtocolRecord, ancilla_state, conditional_unitary,
                      expected_output, grid_scan, kraus_randomize, prepare_psi,
                      randomization_unitary, recovery_unitary, run_protocol,
                      verify_no_hiding_structure)
from .pulsec import (NoiseModel, PulseSequence, SpinSystem, compile_cnot23, compile_full,
                     compile_randomization, expand_macros, sequence_unitary, simulate_physical,
                     verify_equivalence)
from .qstate import coherence_order, equal_up_to_global_phase, fidelity_pure, kron, partial_trace
from .tomo import deviation_report, pauli_expectations, reconstruct

__version__ = "0.1.0"
