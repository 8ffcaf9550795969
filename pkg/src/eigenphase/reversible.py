"""Garbage-free compilation of classical functions and controlled gates.

Every construction here returns an operation sequence together with an exact,
asserted length:

* ``make_f_tau``            -- (u, v) -> (u, v xor F(u))        length 2L + m
* ``make_bijection``        -- |x, 0> -> |G(x), 0>              length 2L + 2L' + 4n
* ``controlled_fixing_zero``-- controlled-U for U|0> = |0>      length 4n + 1
* ``control_reparam``       -- rewire a controlled gate family  length 2L + 1
* ``bit_permutation``       -- permute n wire positions         length 4n

plus integer-exponent controlled powers (|a, xi> -> |a> (x) U^a |xi>) and the
binary-angle rotation family.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qlinalg
from .circuits import (BooleanCircuit, Gate, NOT_TAU_TABLE, Operation,
                       OperationSequence, PermutationTable, Register,
                       StateVector, run_sequence)


class InconsistentInverseError(ValueError):
    """Forward and inverse circuits do not describe the same bijection."""


@dataclass
class ReversibleProgram:
    """An operation sequence that maps |x, 0> to |G(x), 0> on its domain.

    ``io_register`` holds the input/output bits; ``aux_register`` bits start
    and end at zero.  ``declared_length`` is the exact operation count the
    construction promises.
    """

    seq: OperationSequence
    io_register: Register
    aux_register: Register
    declared_length: int

    def __post_init__(self):
        if self.declared_length != len(self.seq):
            raise AssertionError(
                f"declared length {self.declared_length} != actual {len(self.seq)}")

    def run_classical(self, x: int) -> int:
        """Apply to |x, 0> by integer propagation and return G(x).

        Raises if any auxiliary bit is nonzero afterwards.
        """
        from .circuits import run_classical as run_value
        width = self.seq.memory_size
        value = 0
        for pos, q in enumerate(self.io_register):
            value |= ((x >> (len(self.io_register) - 1 - pos)) & 1) << (width - 1 - q)
        idx = run_value(self.seq, value)
        for q in self.aux_register:
            if (idx >> (width - 1 - q)) & 1:
                raise RuntimeError("auxiliary register not restored to zero")
        result = 0
        for q in self.io_register:
            result = (result << 1) | ((idx >> (width - 1 - q)) & 1)
        return result


# ---------------------------------------------------------------------------
# F_tau: (u, v) -> (u, v xor F(u))


def _compiled_gate_ops(circuit: BooleanCircuit, wire_map: list[int]) -> list[Operation]:
    """One (f_i)_tau-style operation per circuit gate, through a wire map."""
    ops = []
    fresh = circuit.num_inputs
    for g in circuit.gates:
        if g.kind == "NOT":
            ops.append(Operation(Gate.permutation(NOT_TAU_TABLE),
                                 Register([wire_map[g.inputs[0]], wire_map[fresh]])))
        elif g.inputs[0] == g.inputs[1]:
            ops.append(Operation(Gate.tau(),  # a AND a = a
                                 Register([wire_map[g.inputs[0]], wire_map[fresh]])))
        else:
            ops.append(Operation(Gate.and_tau(),
                                 Register([wire_map[g.inputs[0]],
                                           wire_map[g.inputs[1]], wire_map[fresh]])))
        fresh += 1
    return ops


def make_f_tau(circuit: BooleanCircuit) -> ReversibleProgram:
    """Reversible XOR-computation of a circuit: length exactly 2L + m.

    Structure: run the compiled gates G, copy the taps into the v-part with m
    tau operations, then undo G.  Memory layout is [u (n), v (m), gate wires].
    """
    n, m, length = circuit.num_inputs, circuit.num_outputs, circuit.size
    total = n + m + length
    # circuit wire w -> memory qubit: inputs stay at 0..n-1, gate wires shift past v
    wire_map = list(range(n)) + [n + m + i for i in range(length)]
    v_qubits = list(range(n, n + m))

    seq = OperationSequence(total,
                            input_register=Register(range(n + m)),
                            output_register=Register(range(n + m)))
    forward = _compiled_gate_ops(circuit, wire_map)
    seq.extend(forward)
    for j, tap in enumerate(circuit.outputs):
        seq.append(Gate.tau(), [wire_map[tap], v_qubits[j]])
    seq.extend(op.inverse() for op in reversed(forward))

    return ReversibleProgram(
        seq,
        io_register=Register(range(n + m)),
        aux_register=Register(range(n + m, total)),
        declared_length=2 * length + m)


def apply_f_tau_classically(circuit: BooleanCircuit, u: int, v: int) -> tuple[int, int]:
    """Oracle for make_f_tau on classical inputs."""
    from .circuits import bits_to_int, evaluate_circuit, int_to_bits
    f = bits_to_int(evaluate_circuit(circuit, int_to_bits(u, circuit.num_inputs)))
    return u, v ^ f


# ---------------------------------------------------------------------------
# bijections: |x, 0> -> |G(x), 0>


def make_bijection(c_fwd: BooleanCircuit, c_inv: BooleanCircuit,
                   domain=None, probes: int = 1000,
                   rng: np.random.Generator | None = None) -> ReversibleProgram:
    """Garbage-free bijection program of length exactly 2L + 2L' + 4n.

    ``c_fwd`` computes the bijection G on its domain, ``c_inv`` computes the
    inverse.  Consistency is checked exhaustively for n <= 10, by random
    probes above that.  Chain on (x, y):

        (x,0) -> (x, G(x)) -> (0, G(x)) -> (G(x), G(x)) -> (G(x), 0)
    """
    n = c_fwd.num_inputs
    if c_inv.num_inputs != n or c_fwd.num_outputs != n or c_inv.num_outputs != n:
        raise ValueError("both circuits must map n bits to n bits")
    _check_inverse_pair(c_fwd, c_inv, n, domain, probes, rng)

    fl, il = c_fwd.size, c_inv.size
    # memory: X (n) | Y (n) | fwd gate wires (fl) | inv gate wires (il)
    total = 2 * n + fl + il
    x_qubits = list(range(n))
    y_qubits = list(range(n, 2 * n))
    fwd_map = x_qubits + [2 * n + i for i in range(fl)]
    inv_map = y_qubits + [2 * n + fl + i for i in range(il)]

    seq = OperationSequence(total, input_register=Register(x_qubits),
                            output_register=Register(x_qubits))

    # G_tau[X, Y]: 2L + n operations
    fwd_ops = _compiled_gate_ops(c_fwd, fwd_map)
    seq.extend(fwd_ops)
    for j, tap in enumerate(c_fwd.outputs):
        seq.append(Gate.tau(), [fwd_map[tap], y_qubits[j]])
    seq.extend(op.inverse() for op in reversed(fwd_ops))

    # (G^-1)_tau[Y, X]: 2L' + n operations
    inv_ops = _compiled_gate_ops(c_inv, inv_map)
    seq.extend(inv_ops)
    for j, tap in enumerate(c_inv.outputs):
        seq.append(Gate.tau(), [inv_map[tap], x_qubits[j]])
    seq.extend(op.inverse() for op in reversed(inv_ops))

    # tau_n[Y, X] then tau_n[X, Y]: n + n operations
    for j in range(n):
        seq.append(Gate.tau(), [y_qubits[j], x_qubits[j]])
    for j in range(n):
        seq.append(Gate.tau(), [x_qubits[j], y_qubits[j]])

    return ReversibleProgram(
        seq, io_register=Register(x_qubits),
        aux_register=Register(range(n, total)),
        declared_length=2 * fl + 2 * il + 4 * n)


def _check_inverse_pair(c_fwd, c_inv, n, domain, probes, rng):
    from .circuits import bits_to_int, evaluate_circuit, int_to_bits
    if domain is None:
        domain = range(1 << n) if n <= 10 else None
    if domain is not None and n <= 10:
        points = list(domain)
    else:
        rng = rng or np.random.default_rng(0)
        points = [int(rng.integers(1 << n)) for _ in range(probes)]
    seen = set()
    for x in points:
        gx = bits_to_int(evaluate_circuit(c_fwd, int_to_bits(x, n)))
        back = bits_to_int(evaluate_circuit(c_inv, int_to_bits(gx, n)))
        if back != x:
            raise InconsistentInverseError(
                f"inverse check failed at x={x}: G(x)={gx}, G^-1(G(x))={back}")
        if gx in seen:
            raise InconsistentInverseError(f"image {gx} repeats; not a bijection")
        seen.add(gx)


# ---------------------------------------------------------------------------
# bit permutations


def bit_permutation(perm: list[int], n: int) -> ReversibleProgram:
    """Permute n wire positions with exactly 4n tau operations.

    ``perm[i]`` is the source position of output bit i, i.e. the program maps
    bit values (x_0 .. x_{n-1}) to (x_{perm[0]} .. x_{perm[n-1]}).
    """
    if sorted(perm) != list(range(n)):
        raise ValueError("perm must be a permutation of range(n)")
    x_qubits = list(range(n))
    y_qubits = list(range(n, 2 * n))
    seq = OperationSequence(2 * n, input_register=Register(x_qubits),
                            output_register=Register(x_qubits))
    # G_tau[X, Y] with a zero-gate circuit: copy taps
    for j in range(n):
        seq.append(Gate.tau(), [x_qubits[perm[j]], y_qubits[j]])
    # (G^-1)_tau[Y, X]: the inverse permutation's taps
    inv = [perm.index(i) for i in range(n)]
    for j in range(n):
        seq.append(Gate.tau(), [y_qubits[inv[j]], x_qubits[j]])
    for j in range(n):
        seq.append(Gate.tau(), [y_qubits[j], x_qubits[j]])
    for j in range(n):
        seq.append(Gate.tau(), [x_qubits[j], y_qubits[j]])
    return ReversibleProgram(seq, io_register=Register(x_qubits),
                             aux_register=Register(y_qubits),
                             declared_length=4 * n)


# ---------------------------------------------------------------------------
# controlled gates


def controlled_fixing_zero(u: Gate) -> OperationSequence:
    """Controlled-U for a gate with U|0> = |0>, length exactly 4n + 1.

    Memory: control bit 0, target register A (n), ancilla register B (n).
    Sequence: ctrl-copy A->B, ctrl-copy B->A, U on B, ctrl-copy B->A,
    ctrl-copy A->B; the single use of U lands on B which holds the target
    value iff the control is 1 and stays |0> otherwise.
    """
    n = u.arity
    _require_fixes_zero(u)
    a = list(range(1, 1 + n))
    b = list(range(1 + n, 1 + 2 * n))
    seq = OperationSequence(1 + 2 * n,
                            input_register=Register([0] + a),
                            output_register=Register([0] + a))
    for i in range(n):
        seq.append(Gate.and_tau(), [0, a[i], b[i]])
    for i in range(n):
        seq.append(Gate.and_tau(), [0, b[i], a[i]])
    seq.append(u, b)
    for i in range(n):
        seq.append(Gate.and_tau(), [0, b[i], a[i]])
    for i in range(n):
        seq.append(Gate.and_tau(), [0, a[i], b[i]])
    assert len(seq) == 4 * n + 1
    return seq


def _require_fixes_zero(u: Gate):
    if u.kind == "perm":
        if u.perm.partial and not u.perm.domain_mask[0]:
            raise ValueError("partial permutation must include 0 in its domain")
        if u.perm.table[0] != 0:
            raise ValueError("gate does not fix |0>")
        return
    from .circuits import _apply_to_block
    zero = np.zeros(1 << u.arity, dtype=complex)
    zero[0] = 1.0
    out = _apply_to_block(u, zero[:, None]).reshape(-1)
    if np.linalg.norm(out - zero) > 1e-10:
        raise ValueError("gate does not fix |0>")


def controlled_single_qubit(u: np.ndarray) -> OperationSequence:
    """Controlled version of any 2x2 unitary via u = V^-1 W V e^{i phi}.

    W is diagonal in the eigenbasis with eigenvalue 1 on |0>; the global
    phase becomes a phase gate on the control bit.  Four operations on
    (control, target).  Eigenvalues are ordered by argument so the output is
    deterministic.
    """
    u = qlinalg.require_unitary(u)
    if u.shape != (2, 2):
        raise ValueError("expects a 2x2 unitary")
    w, vecs = np.linalg.eig(u)
    # re-orthonormalize (eig does not promise orthogonal columns numerically)
    vecs, _ = np.linalg.qr(vecs)
    d = vecs.conj().T @ u @ vecs
    w = np.diag(d)
    order = np.argsort(np.mod(np.angle(w), 2 * np.pi))
    w, vecs = w[order], vecs[:, order]
    # fix each eigenvector's phase: largest component real positive
    for k in range(2):
        idx = int(np.argmax(np.abs(vecs[:, k])))
        vecs[:, k] *= np.exp(-1j * np.angle(vecs[idx, k]))
    phi = float(np.angle(w[0]))
    w = w / np.abs(w)
    v = vecs.conj().T                      # V diagonalizes: V u V^-1 = diag(w)
    w_gate = np.diag([1.0, w[1] / w[0]]).astype(complex)

    seq = OperationSequence(2, input_register=Register([0, 1]),
                            output_register=Register([0, 1]))
    seq.append(Gate.phase(phi), [0])
    seq.append(Gate.unitary1(v, label="V"), [1])
    seq.append(Gate.control(Gate.unitary1(w_gate, label="W")), [0, 1])
    seq.append(Gate.unitary1(v.conj().T, label="V^-1"), [1])
    return seq


def controlled_dense(u: np.ndarray) -> np.ndarray:
    """Oracle: the exact matrix of controlled-U."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    out = np.eye(2 * dim, dtype=complex)
    out[dim:, dim:] = u
    return out


def control_reparam(circuit: BooleanCircuit, t: Gate) -> OperationSequence:
    """Rewire a controlled gate family through a circuit: length 2L + 1.

    ``t`` must be a controlled gate with control width equal to the circuit's
    output count; the result acts as |a, xi> -> |a> (x) U(F(a)) |xi> where F
    is the circuit's function.  The compiled circuit writes F(a) onto fresh
    wires, ``t`` fires once from those wires, and the circuit is undone.
    """
    if t.kind != "controlled":
        raise ValueError("t must be a controlled gate")
    k, l = circuit.num_inputs, circuit.num_outputs
    if t.control_width != l:
        raise ValueError("control width does not match the circuit outputs")
    payload_arity = t.arity - t.control_width
    length = circuit.size
    # memory: a (k) | xi (payload) | circuit gate wires (length) | F wires via taps
    total = k + payload_arity + length
    wire_map = list(range(k)) + [k + payload_arity + i for i in range(length)]
    xi = list(range(k, k + payload_arity))

    seq = OperationSequence(total,
                            input_register=Register(list(range(k)) + xi),
                            output_register=Register(list(range(k)) + xi))
    forward = _compiled_gate_ops(circuit, wire_map)
    seq.extend(forward)
    seq.append(t, [wire_map[tap] for tap in circuit.outputs] + xi)
    seq.extend(op.inverse() for op in reversed(forward))
    assert len(seq) == 2 * length + 1
    return seq


# ---------------------------------------------------------------------------
# integer-controlled powers


def _matrix_power_cache(matrix: np.ndarray, max_bit: int) -> list[np.ndarray]:
    powers = [matrix]
    for _ in range(max_bit - 1):
        powers.append(powers[-1] @ powers[-1])
    return powers


@dataclass
class IntegerControlledGate:
    """|a, xi> -> |a> (x) U^a |xi> for 0 <= a <= 2**control_width - 1.

    Powers come from repeated squaring of the payload (control_width - 1
    squarings, precomputed lazily).  Subclasses may override ``power`` to
    compute U^e directly, e.g. from a group-action blackbox.
    """

    payload: Gate
    control_width: int

    def __post_init__(self):
        if self.payload.kind not in ("perm", "unitary", "not", "tau", "and_tau", "phase"):
            raise ValueError("payload must be a permutation or a dense unitary")
        self._square_cache: list = []

    @property
    def range_max(self) -> int:
        return (1 << self.control_width) - 1

    def _squares(self) -> list:
        if not self._square_cache:
            if self.payload.kind == "perm":
                cur = self.payload.perm
                cache = [cur]
                for _ in range(self.control_width - 1):
                    cur = cur.compose(cur)
                    cache.append(cur)
                self._square_cache = cache
            else:
                self._square_cache = _matrix_power_cache(self.payload.dense(),
                                                         self.control_width)
        return self._square_cache

    def power(self, exponent: int) -> Gate:
        """The gate U^exponent."""
        if exponent == 0:
            return Gate.permutation(
                PermutationTable(self.payload.arity, list(range(1 << self.payload.arity)),
                                 name="id"))
        if exponent == 1:
            return self.payload
        squares = self._squares()
        acc = None
        bit = 0
        e = exponent
        while e:
            if e & 1:
                piece = squares[bit]
                if acc is None:
                    acc = piece
                elif self.payload.kind == "perm":
                    acc = piece.compose(acc)
                else:
                    acc = piece @ acc
            e >>= 1
            bit += 1
        if self.payload.kind == "perm":
            return Gate.permutation(acc, label=f"{self.payload.label}^{exponent}")
        return Gate("unitary", self.payload.arity, matrix=acc,
                    label=f"{self.payload.label}^{exponent}")

    def controlled_power(self, bit_exponent: int) -> Gate:
        """The one-control-bit gate for U^(2**bit_exponent)."""
        return Gate.control(self.power(1 << bit_exponent))

    def as_gate(self) -> Gate:
        """Full semantic gate on (control register, target register)."""
        branches = {a: self.power(a) for a in range(1, self.range_max + 1)}
        return Gate.controlled(self.control_width, branches, self.payload.arity,
                               label=f"{self.payload.label}^[0,{self.range_max}]")


def integer_controlled_power(payload: Gate, control_width: int) -> IntegerControlledGate:
    return IntegerControlledGate(payload, control_width)


# ---------------------------------------------------------------------------
# rotations with a binary-encoded angle


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True)
class RotationFamily:
    """R: |theta, xi> -> |theta> (x) R_theta |xi> with a binary angle code.

    An integer code t over ``theta_bits`` bits encodes the angle
    2*pi*t/2**theta_bits exactly; the rotation is the composition of the
    per-bit factors R(2*pi*2**-s).
    """

    theta_bits: int

    def __post_init__(self):
        if self.theta_bits < 1:
            raise ValueError("need at least one angle bit")

    def angle(self, code: int) -> float:
        return 2.0 * np.pi * code / (1 << self.theta_bits)

    def quantize(self, theta: float) -> int:
        return int(round((theta % (2 * np.pi)) / (2 * np.pi) * (1 << self.theta_bits))) \
            % (1 << self.theta_bits)

    def rotation_gate(self, code: int) -> Gate:
        # compose the controlled factors R(2 pi 2^-s) selected by the code bits
        acc = np.eye(2, dtype=complex)
        for s in range(1, self.theta_bits + 1):
            if (code >> (self.theta_bits - s)) & 1:
                acc = rotation_matrix(2 * np.pi * 2.0 ** (-s)) @ acc
        return Gate.unitary1(acc, label=f"R[{code}/2^{self.theta_bits}]")

    def as_gate(self) -> Gate:
        branches = {c: self.rotation_gate(c)
                    for c in range(1, 1 << self.theta_bits)}
        return Gate.controlled(self.theta_bits, branches, 1, label="R")


def rotation_gate(theta_bits: int) -> RotationFamily:
    return RotationFamily(theta_bits)
