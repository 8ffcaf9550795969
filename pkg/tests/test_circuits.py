import numpy as np
import pytest

from eigenphase import circuits, qlinalg
from eigenphase.circuits import (BooleanCircuit, CircuitGate, Gate, Operation,
                                 OperationSequence, PermutationTable, Register,
                                 StateVector, apply_operation, compile_circuit,
                                 evaluate_circuit, format_circuit,
                                 measure_register, parse_circuit,
                                 perturb_sequence, register_probabilities,
                                 run_sequence)

from conftest import random_boolean_circuit, random_unitary


def classical_run(seq, num_qubits, value):
    state = run_sequence(StateVector.classical(num_qubits, value), seq)
    idx = int(np.argmax(np.abs(state.amplitudes)))
    assert abs(abs(state.amplitudes[idx]) - 1.0) < 1e-9
    return idx


class TestRegisters:
    def test_distinctness(self):
        with pytest.raises(circuits.RegisterError):
            Register([0, 0])

    def test_arity_check(self):
        with pytest.raises(circuits.RegisterError):
            Operation(Gate.tau(), Register([0]))


class TestApplyOperation:
    def test_tau_copies_into_empty(self):
        # (u, v) -> (u, v xor u) on |1,0>
        state = StateVector.from_bits([1, 0])
        out = apply_operation(state, Operation(Gate.tau(), Register([0, 1])))
        assert np.allclose(out.amplitudes, StateVector.from_bits([1, 1]).amplitudes)

    def test_hadamard_makes_plus(self):
        state = StateVector.classical(1, 0)
        out = apply_operation(state, Operation(Gate.unitary1(qlinalg.hadamard()),
                                               Register([0])))
        assert np.allclose(out.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_control_zero_is_identity(self, rng):
        u = Gate.unitary1(random_unitary(2, rng))
        state = StateVector(2, np.array([0.6, 0.8, 0, 0]))  # control bit 0
        out = apply_operation(state, Operation(Gate.control(u), Register([0, 1])))
        assert np.allclose(out.amplitudes, state.amplitudes)

    def test_control_one_applies_payload(self, rng):
        m = random_unitary(2, rng)
        state = StateVector(2, np.array([0, 0, 0.6, 0.8]))  # control bit 1
        out = apply_operation(state, Operation(Gate.control(Gate.unitary1(m)),
                                               Register([0, 1])))
        assert np.allclose(out.amplitudes[2:], m @ np.array([0.6, 0.8]))

    def test_qubit0_is_most_significant(self):
        # X on qubit 0 of a 2-qubit memory flips the high bit of the index
        state = StateVector.classical(2, 0)
        out = apply_operation(state, Operation(Gate.x(), Register([0])))
        assert np.allclose(out.amplitudes, qlinalg.basis_state(4, 0b10))

    def test_gate_on_middle_qubit_matches_kron(self, rng):
        m = random_unitary(2, rng)
        state_vec = np.zeros(8, dtype=complex)
        state_vec[:4] = (rng.normal(size=4) + 1j * rng.normal(size=4))
        state_vec /= np.linalg.norm(state_vec)
        out = apply_operation(StateVector(3, state_vec),
                              Operation(Gate.unitary1(m), Register([1])))
        full = np.kron(np.kron(np.eye(2), m), np.eye(2))
        assert np.allclose(out.amplitudes, full @ state_vec)

    def test_partial_permutation_domain_violation(self):
        table = PermutationTable(2, {0: 1, 1: 2, 2: 0}, domain=[0, 1, 2])
        state = StateVector.classical(2, 3)  # outside the domain
        with pytest.raises(circuits.DomainViolationError):
            apply_operation(state, Operation(Gate.permutation(table), Register([0, 1])))

    def test_permutation_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            PermutationTable(1, {0: 1, 1: 1})

    def test_norm_preserved(self, rng):
        state_vec = rng.normal(size=16) + 1j * rng.normal(size=16)
        state_vec /= np.linalg.norm(state_vec)
        state = StateVector(4, state_vec)
        for _ in range(20):
            q = sorted(rng.choice(4, size=2, replace=False))
            state = apply_operation(state, Operation(
                Gate.unitary(random_unitary(4, rng)), Register(q)))
        assert state.norm() == pytest.approx(1.0, abs=1e-9)


class TestDenseConsistency:
    def test_every_gate_kind_matches_its_dense_form(self, rng):
        # applying any gate through the register machinery agrees with the
        # kron-embedded dense matrix on a random 3-qubit state
        table = PermutationTable(2, [2, 0, 3, 1])
        candidates = [
            (Gate.x(), 1), (Gate.tau(), 2), (Gate.and_tau(), 3),
            (Gate.phase(0.7), 1),
            (Gate.unitary1(random_unitary(2, rng)), 1),
            (Gate.unitary(random_unitary(4, rng)), 2),
            (Gate.permutation(table), 2),
            (Gate.control(Gate.unitary1(random_unitary(2, rng))), 2),
            (Gate.controlled(2, {v: Gate.phase(0.3 * v) for v in range(1, 4)}, 1), 3),
        ]
        for gate, width in candidates:
            vec = rng.normal(size=8) + 1j * rng.normal(size=8)
            vec /= np.linalg.norm(vec)
            qubits = [int(x) for x in rng.choice(3, size=width, replace=False)]
            got = apply_operation(StateVector(3, vec),
                                  Operation(gate, Register(qubits))).amplitudes
            # build the dense embedding by permuting qubits to the front
            perm = qubits + [q for q in range(3) if q not in qubits]
            inv = np.argsort(perm)
            shuffled = vec.reshape((2,) * 3).transpose(perm).reshape(-1)
            full = np.kron(gate.dense(), np.eye(1 << (3 - width)))
            expect = (full @ shuffled).reshape((2,) * 3).transpose(inv).reshape(-1)
            assert np.allclose(got, expect, atol=1e-12), gate.label


class TestRunSequence:
    def test_empty_sequence_is_identity(self, rng):
        v = rng.normal(size=4)
        v /= np.linalg.norm(v)
        state = StateVector(2, v)
        assert np.allclose(run_sequence(state, OperationSequence(2)).amplitudes, v)

    def test_double_not_is_identity(self):
        seq = OperationSequence(1)
        seq.append(Gate.x(), [0]).append(Gate.x(), [0])
        out = run_sequence(StateVector.classical(1, 0), seq)
        assert np.allclose(out.amplitudes, [1, 0])

    def test_locality(self, rng):
        # a gate on qubit 0 leaves the marginal of qubit 1 alone (product state)
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        b = rng.normal(size=2) + 1j * rng.normal(size=2)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        state = StateVector(2, np.kron(a, b))
        before = register_probabilities(state, Register([1]))
        out = apply_operation(state, Operation(
            Gate.unitary1(random_unitary(2, rng)), Register([0])))
        after = register_probabilities(out, Register([1]))
        assert np.allclose(before, after, atol=1e-12)

    def test_classical_gate_closure(self, rng):
        # sequences of {not, tau, and_tau} map classical states to classical states
        seq = OperationSequence(4)
        for _ in range(30):
            pick = rng.integers(3)
            if pick == 0:
                seq.append(Gate.x(), [int(rng.integers(4))])
            elif pick == 1:
                q = rng.choice(4, size=2, replace=False)
                seq.append(Gate.tau(), [int(q[0]), int(q[1])])
            else:
                q = rng.choice(4, size=3, replace=False)
                seq.append(Gate.and_tau(), [int(q[0]), int(q[1]), int(q[2])])
        for value in range(16):
            out = run_sequence(StateVector.classical(4, value), seq)
            assert np.count_nonzero(np.abs(out.amplitudes) > 1e-12) == 1

    def test_inverse_round_trip(self, rng):
        seq = OperationSequence(3)
        for _ in range(10):
            q = sorted(int(x) for x in rng.choice(3, size=2, replace=False))
            seq.append(Gate.unitary(random_unitary(4, rng)), q)
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        v /= np.linalg.norm(v)
        state = StateVector(3, v)
        out = run_sequence(run_sequence(state, seq), seq.inverse())
        assert np.allclose(out.amplitudes, v, atol=1e-10)

    def test_embedded(self, rng):
        seq = OperationSequence(2)
        seq.append(Gate.tau(), [0, 1])
        big = seq.embedded([2, 0], 3)
        # tau now acts on qubits (2, 0): |q0 q1 q2> = |0 0 1> -> q0 ^= q2
        out = classical_run(big, 3, 0b001)
        assert out == 0b101


class TestMeasurement:
    def test_bell_pair_marginal(self):
        bell = StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))
        counts = [0, 0]
        for i in range(200):
            outcome, collapsed = measure_register(bell, Register([0]),
                                                  np.random.default_rng(i))
            counts[outcome] += 1
            # collapsed state is classical |00> or |11>
            expect = 0b00 if outcome == 0 else 0b11
            assert abs(collapsed.amplitudes[expect]) == pytest.approx(1.0)
        assert 60 < counts[0] < 140

    def test_classical_state_measures_its_bits(self, rng):
        state = StateVector.from_bits([1, 0, 1])
        outcome, collapsed = measure_register(state, Register([2, 0]), rng)
        assert outcome == 0b11
        assert np.allclose(collapsed.amplitudes, state.amplitudes)

    def test_seed_determinism(self):
        state = StateVector(2, np.full(4, 0.5))
        a = measure_register(state, Register([0, 1]), np.random.default_rng(7))[0]
        b = measure_register(state, Register([0, 1]), np.random.default_rng(7))[0]
        assert a == b

    def test_empirical_frequencies_match_marginals(self):
        rng = np.random.default_rng(5)
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        v /= np.linalg.norm(v)
        state = StateVector(3, v)
        reg = Register([0, 2])
        exact = register_probabilities(state, reg)
        shots = 10_000
        counts = np.zeros(4)
        sample_rng = np.random.default_rng(99)
        for _ in range(shots):
            outcome, _ = measure_register(state, reg, sample_rng)
            counts[outcome] += 1
        freq = counts / shots
        sigma = np.sqrt(exact * (1 - exact) / shots)
        assert np.all(np.abs(freq - exact) <= 3 * sigma + 1e-9)


class TestBooleanCircuits:
    def test_single_and(self):
        c = BooleanCircuit(2, [CircuitGate("AND", (0, 1))], (2,))
        assert evaluate_circuit(c, (1, 1)) == (1,)
        assert evaluate_circuit(c, (1, 0)) == (0,)

    def test_forward_reference_rejected(self):
        with pytest.raises(ValueError):
            BooleanCircuit(1, [CircuitGate("AND", (0, 1))], (1,))

    def test_compiled_matches_direct_evaluation(self, rng):
        for _ in range(8):
            n = int(rng.integers(2, 6))
            c = random_boolean_circuit(n, int(rng.integers(1, 21)), rng)
            seq = compile_circuit(c)
            for x in range(1 << n):
                bits = circuits.int_to_bits(x, n)
                out_value = classical_run(seq, c.num_wires, x << len(c.gates))
                got = tuple((out_value >> (c.num_wires - 1 - w)) & 1
                            for w in c.outputs)
                assert got == evaluate_circuit(c, bits)

    def test_compile_emits_one_op_per_gate(self, rng):
        c = random_boolean_circuit(3, 12, rng)
        assert len(compile_circuit(c)) == c.size

    def test_twenty_gate_circuit_n8_classical_propagation(self, rng):
        # 28 wires exceeds the state-vector cap; integer propagation covers it
        c = random_boolean_circuit(8, 20, rng, num_outputs=3)
        seq = compile_circuit(c)
        for x in range(1 << 8):
            value = circuits.run_classical(seq, x << len(c.gates))
            got = tuple((value >> (c.num_wires - 1 - w)) & 1 for w in c.outputs)
            assert got == evaluate_circuit(c, circuits.int_to_bits(x, 8))

    def test_text_round_trip(self, rng):
        c = random_boolean_circuit(3, 10, rng)
        assert parse_circuit(format_circuit(c)) == c

    def test_parse_example(self):
        c = parse_circuit("inputs 2\nAND 0 1 -> 2\nNOT 2\noutputs 3\n")
        assert evaluate_circuit(c, (1, 1)) == (0,)
        assert evaluate_circuit(c, (0, 1)) == (1,)

    def test_parse_rejects_wrong_fresh_wire(self):
        with pytest.raises(ValueError):
            parse_circuit("inputs 2\nAND 0 1 -> 5\noutputs 2\n")


class TestPerturbation:
    def test_zero_delta_keeps_sequence(self, rng):
        seq = OperationSequence(2)
        seq.append(Gate.unitary1(random_unitary(2, rng)), [0])
        out = perturb_sequence(seq, 0.0, rng)
        assert out.ops == seq.ops

    def test_each_gate_within_delta(self, rng):
        delta = 1e-3
        seq = OperationSequence(2)
        for _ in range(10):
            seq.append(Gate.unitary1(random_unitary(2, rng)), [int(rng.integers(2))])
        out = perturb_sequence(seq, delta, rng)
        for before, after in zip(seq.ops, out.ops):
            diff = qlinalg.operator_norm(after.gate.dense() - before.gate.dense())
            assert diff <= delta + 1e-12

    def test_composed_deviation_bounded(self, rng):
        # || U~_L ... U~_1 - U_L ... U_1 || <= L delta
        delta = 1e-3
        for _ in range(5):
            length = int(rng.integers(5, 20))
            seq = OperationSequence(4)
            for _ in range(length):
                q = sorted(int(x) for x in rng.choice(4, size=2, replace=False))
                seq.append(Gate.unitary(random_unitary(4, rng)), q)
            out = perturb_sequence(seq, delta, rng)
            diff = qlinalg.operator_norm(out.dense() - seq.dense())
            assert diff <= length * delta + 1e-10


class TestPrecisionLaw:
    def test_compiled_circuit_error_probability(self, rng):
        # a compiled circuit computes F with error 0; after gate perturbation
        # delta the probability of reading wrong taps is at most 2 L delta
        from conftest import random_boolean_circuit
        for _ in range(5):
            c = random_boolean_circuit(3, 6, rng, num_outputs=2)
            seq = circuits.compile_circuit(c)
            delta = 5e-4
            noisy = perturb_sequence(seq, delta, rng)
            x = int(rng.integers(8))
            expect = circuits.evaluate_circuit(c, circuits.int_to_bits(x, 3))
            start = StateVector.classical(c.num_wires, x << len(c.gates))
            out = run_sequence(start, noisy)
            block, _ = circuits._gather_block(out.amplitudes, c.num_wires,
                                              Register(c.outputs))
            good = float(np.sum(np.abs(
                block[circuits.bits_to_int(expect)]) ** 2))
            assert 1 - good <= 2 * len(seq) * delta + 1e-12


class TestMajorityRepetition:
    def test_bound_formula(self):
        assert circuits.majority_error_bound(0.25, 1) == pytest.approx(
            2 * np.sqrt(0.25 * 0.75))
        assert circuits.majority_error_bound(1 / 3, 12) < 0.5

    def test_majority_vote_suppresses_errors(self, rng):
        def run_once(r):
            return 7 if r.random() > 0.3 else int(r.integers(7))

        wrong = sum(circuits.repeat_with_majority(run_once, 15, rng) != 7
                    for _ in range(200))
        assert wrong / 200 <= circuits.majority_error_bound(0.3, 15) + 0.05


class TestObservableProbabilities:
    def test_eigenbasis_family(self, rng):
        u = random_unitary(4, rng)
        fam = qlinalg.ObservableFamily([
            (k, qlinalg.Subspace(u[:, k])) for k in range(4)])
        state = StateVector(2, u[:, 2])
        dist = circuits.observable_probabilities(state, fam)
        assert dist[2] == pytest.approx(1.0, abs=1e-10)

    def test_half_family_has_residual(self):
        fam = qlinalg.ObservableFamily([("lo", qlinalg.Subspace.classical(4, [0, 1]))])
        state = StateVector(2, np.full(4, 0.5))
        dist = circuits.observable_probabilities(state, fam)
        assert dist[qlinalg.ObservableFamily.RESIDUAL] == pytest.approx(0.5)

    def test_fourier_family_on_classical_state(self):
        # uniform overlap of |a> with every cyclic-group character vector
        q = 5
        vecs = np.zeros((8, q), dtype=complex)
        for h in range(q):
            for g in range(q):
                vecs[g, h] = np.exp(2j * np.pi * h * g / q) / np.sqrt(q)
        fam = qlinalg.ObservableFamily([
            (h, qlinalg.Subspace(vecs[:, h])) for h in range(q)])
        amps = np.zeros(8, dtype=complex)
        amps[2] = 1.0
        dist = circuits.observable_probabilities(StateVector(3, amps), fam)
        for h in range(q):
            assert dist[h] == pytest.approx(1 / q, abs=1e-12)
