"""eigenphase: state-vector simulation of eigenvalue measurement.

Reversible compilation of classical circuits, controlled-unitary
constructions, multiscale phase estimation with exact rational recovery,
the abelian stabilizer solver (order finding, factoring, discrete logs),
and the measurement-based Fourier transform on arbitrary finite abelian
groups.
"""

from .asp import (ASPSolution, Character, GroupAction, LatticeBasis,
                  SolveFailure, characters_to_lattice, discrete_log, factor,
                  find_order, hermite_normal_form, modular_action,
                  orbit_generator_gate, sample_character, solve_asp)
from .circuits import (BooleanCircuit, CircuitGate, DomainViolationError,
                       Gate, Operation, OperationSequence, PermutationTable,
                       Register, StateVector, apply_operation,
                       circuit_from_function, compile_circuit,
                       evaluate_circuit, format_circuit, measure_register,
                       observable_probabilities, parse_circuit,
                       perturb_sequence, run_sequence)
from .phase_est import (MeasurementOperator, PhaseEstimate,
                        conditional_probabilities,
                        continued_fraction_recover, estimate_cos_sin,
                        measure_eigenvalue_exact, multiscale_estimate,
                        reversible_measurement, xi_operator)
from .qft import (CyclicGroupSpec, QftProgram, QubitBudgetError,
                  prepare_psi_q0, q_q, qft, qft_abelian, t_q, u_q_phase)
from .qlinalg import (DensityMatrix, ObservableFamily, Subspace,
                      operator_norm, partial_trace, quantum_probability,
                      tensor, trace_norm)
from .reversible import (IntegerControlledGate, ReversibleProgram,
                         bit_permutation, control_reparam,
                         controlled_fixing_zero, controlled_single_qubit,
                         integer_controlled_power, make_bijection, make_f_tau,
                         rotation_gate)
from .rng import rng_for

__version__ = "0.1.0"
