"""Memory, registers, gates, operation sequences, and state-vector simulation.

The machine model: a memory of K qubits, classical states indexed by integers
in [0, 2**K) with qubit 0 as the most significant bit.  An operation is a gate
together with an ordered register of distinct qubits; a sequence of operations
is applied left to right.

Gate basis: all 2x2 unitaries, ``tau`` ((u,v) -> (u, v xor u)), ``and_tau``
(the doubly controlled flip), plus semantic gates used by the compiler layers:
arbitrary small dense unitaries, permutations given by value tables (possibly
partial, i.e. defined on a declared domain), value-controlled gate families,
and one-qubit phase gates diag(1, e^{i phi}).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import qlinalg

MAX_QUBITS = 26
ZERO_AMPLITUDE = 1e-15  # amplitudes below this count as exact zeros
NORM_ATOL = 1e-9


class DomainViolationError(RuntimeError):
    """A partial gate met amplitude outside its declared domain."""


class RegisterError(ValueError):
    """Register indices are out of range or not distinct."""


# ---------------------------------------------------------------------------
# registers


@dataclass(frozen=True)
class Register:
    """Ordered collection of distinct qubit indices."""

    qubits: tuple[int, ...]

    def __init__(self, qubits: Iterable[int]):
        q = tuple(int(i) for i in qubits)
        if len(set(q)) != len(q):
            raise RegisterError("register qubits must be distinct")
        if any(i < 0 for i in q):
            raise RegisterError("register qubits must be non-negative")
        object.__setattr__(self, "qubits", q)

    def __len__(self) -> int:
        return len(self.qubits)

    def __iter__(self):
        return iter(self.qubits)

    def __add__(self, other: "Register") -> "Register":
        return Register(self.qubits + tuple(other))


def reg(*qubits: int) -> Register:
    return Register(qubits)


# ---------------------------------------------------------------------------
# permutation tables


class PermutationTable:
    """A verified bijection on a subset of B^n, stored as an index table.

    ``table[i]`` is the image of basis state i.  Outside the declared domain
    the table acts as the identity, but any amplitude above ZERO_AMPLITUDE on
    a non-domain state triggers DomainViolationError when the gate is applied.
    """

    def __init__(self, num_bits: int, mapping, domain=None, name: str = "perm"):
        self.num_bits = int(num_bits)
        self.name = name
        size = 1 << self.num_bits
        if domain is None:
            domain = range(size)
        domain = sorted(int(x) for x in domain)
        if domain and (domain[0] < 0 or domain[-1] >= size):
            raise ValueError("domain exceeds the Boolean cube")
        images = [int(mapping[x]) if not callable(mapping) else int(mapping(x)) for x in domain]
        if sorted(images) != domain:
            raise ValueError(f"{name}: mapping is not a bijection on its domain")
        table = np.arange(size, dtype=np.int64)
        table[np.asarray(domain, dtype=np.int64)] = np.asarray(images, dtype=np.int64)
        self.table = table
        self.domain_mask = np.zeros(size, dtype=bool)
        self.domain_mask[np.asarray(domain, dtype=np.int64)] = True
        self.partial = len(domain) != size

    def inverse(self) -> "PermutationTable":
        inv = PermutationTable.__new__(PermutationTable)
        inv.num_bits = self.num_bits
        inv.name = self.name + "^-1"
        inv.table = np.argsort(self.table).astype(np.int64)
        inv.domain_mask = self.domain_mask
        inv.partial = self.partial
        return inv

    def compose(self, other: "PermutationTable", name: str | None = None) -> "PermutationTable":
        """self after other (apply other first)."""
        out = PermutationTable.__new__(PermutationTable)
        out.num_bits = self.num_bits
        out.name = name or f"{self.name}*{other.name}"
        out.table = self.table[other.table]
        out.domain_mask = self.domain_mask & other.domain_mask
        out.partial = self.partial or other.partial
        return out

    def __call__(self, x: int) -> int:
        return int(self.table[x])


# ---------------------------------------------------------------------------
# gates


@dataclass(frozen=True)
class Gate:
    """A gate of one of the supported kinds.

    kind        payload
    ----        -------
    not         (none); the 1-qubit flip
    tau         (none); 2-qubit (u,v) -> (u, v xor u)
    and_tau     (none); 3-qubit (u1,u2,v) -> (u1,u2, v xor (u1 and u2))
    phase       angle; 1-qubit diag(1, e^{i angle})
    unitary     matrix; dense unitary on arity qubits
    perm        perm (PermutationTable)
    controlled  control_width + branches {value: Gate}; first control_width
                qubits of the target register select the branch, absent
                values act as identity
    custom      apply_fn acting on the reshaped amplitude block; used for
                semantic partial operators built by higher layers
    """

    kind: str
    arity: int
    matrix: np.ndarray | None = None
    perm: PermutationTable | None = None
    angle: float = 0.0
    control_width: int = 0
    branches: dict | None = None
    apply_fn: Callable | None = None
    label: str = ""

    # -- constructors -------------------------------------------------------

    @staticmethod
    def x() -> "Gate":
        return Gate("not", 1, label="not")

    @staticmethod
    def tau() -> "Gate":
        return Gate("tau", 2, label="tau")

    @staticmethod
    def and_tau() -> "Gate":
        return Gate("and_tau", 3, label="and_tau")

    @staticmethod
    def phase(angle: float) -> "Gate":
        return Gate("phase", 1, angle=float(angle), label="phase")

    @staticmethod
    def unitary1(matrix, label: str = "u1") -> "Gate":
        m = qlinalg.require_unitary(matrix)
        if m.shape != (2, 2):
            raise ValueError("unitary1 expects a 2x2 matrix")
        return Gate("unitary", 1, matrix=m, label=label)

    @staticmethod
    def unitary(matrix, label: str = "u") -> "Gate":
        m = qlinalg.require_unitary(matrix)
        n = int(np.log2(m.shape[0]))
        if 2**n != m.shape[0]:
            raise ValueError("unitary dimension must be a power of two")
        return Gate("unitary", n, matrix=m, label=label)

    @staticmethod
    def permutation(table: PermutationTable, label: str = "") -> "Gate":
        return Gate("perm", table.num_bits, perm=table, label=label or table.name)

    @staticmethod
    def controlled(control_width: int, branches: dict, target_arity: int,
                   label: str = "ctrl") -> "Gate":
        for v, g in branches.items():
            if not 0 <= v < (1 << control_width):
                raise ValueError("branch value outside the control range")
            if g is not None and g.arity != target_arity:
                raise ValueError("branch arity does not match the target register")
        return Gate("controlled", control_width + target_arity,
                    control_width=control_width, branches=dict(branches), label=label)

    @staticmethod
    def control(payload: "Gate", label: str = "") -> "Gate":
        """The one-control-bit gate: apply payload iff the control bit is 1."""
        return Gate.controlled(1, {1: payload}, payload.arity,
                               label=label or f"c-{payload.label}")

    @staticmethod
    def custom(arity: int, apply_fn: Callable, label: str = "custom") -> "Gate":
        return Gate("custom", arity, apply_fn=apply_fn, label=label)

    # -- derived forms ------------------------------------------------------

    def dense(self) -> np.ndarray:
        """Dense matrix of the gate (partial kinds: identity off-domain)."""
        dim = 1 << self.arity
        if self.kind == "unitary":
            return self.matrix
        if self.kind == "not":
            return np.array([[0, 1], [1, 0]], dtype=np.complex128)
        if self.kind == "phase":
            return np.diag([1.0, np.exp(1j * self.angle)]).astype(np.complex128)
        if self.kind == "tau":
            return Gate.permutation(PermutationTable(2, [0, 1, 3, 2])).dense()
        if self.kind == "and_tau":
            return Gate.permutation(PermutationTable(3, [0, 1, 2, 3, 4, 5, 7, 6])).dense()
        if self.kind == "perm":
            m = np.zeros((dim, dim), dtype=np.complex128)
            m[self.perm.table, np.arange(dim)] = 1.0
            return m
        if self.kind == "controlled":
            m = np.eye(dim, dtype=np.complex128)
            block = 1 << (self.arity - self.control_width)
            for v, g in self.branches.items():
                if g is None:
                    continue
                lo = v * block
                m[lo:lo + block, lo:lo + block] = g.dense()
            return m
        raise ValueError(f"gate kind {self.kind!r} has no dense form")

    def inverse(self) -> "Gate":
        if self.kind in ("not", "tau", "and_tau"):
            return self
        if self.kind == "phase":
            return Gate.phase(-self.angle)
        if self.kind == "unitary":
            return Gate("unitary", self.arity, matrix=self.matrix.conj().T,
                        label=self.label + "^-1")
        if self.kind == "perm":
            return Gate.permutation(self.perm.inverse())
        if self.kind == "controlled":
            inv = {v: (g.inverse() if g is not None else None)
                   for v, g in self.branches.items()}
            return Gate("controlled", self.arity, control_width=self.control_width,
                        branches=inv, label=self.label + "^-1")
        raise ValueError(f"gate kind {self.kind!r} is not invertible here")


@dataclass(frozen=True)
class Operation:
    gate: Gate
    target: Register

    def __post_init__(self):
        if len(self.target) != self.gate.arity:
            raise RegisterError(
                f"gate {self.gate.label!r} arity {self.gate.arity} does not match "
                f"register width {len(self.target)}")

    def inverse(self) -> "Operation":
        return Operation(self.gate.inverse(), self.target)


@dataclass
class OperationSequence:
    """An ordered list of operations on a fixed-size memory."""

    memory_size: int
    ops: list[Operation] = field(default_factory=list)
    input_register: Register | None = None
    output_register: Register | None = None

    def __post_init__(self):
        # the qubit cap binds state vectors, not programs: a long classical
        # program over many wires is fine as long as it is run classically
        for op in self.ops:
            self._check(op)

    def _check(self, op: Operation):
        if max(op.target, default=-1) >= self.memory_size:
            raise RegisterError("operation target exceeds the memory")

    def append(self, gate: Gate, target) -> "OperationSequence":
        if not isinstance(target, Register):
            target = Register(target)
        op = Operation(gate, target)
        self._check(op)
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable[Operation]) -> "OperationSequence":
        for op in ops:
            self._check(op)
            self.ops.append(op)
        return self

    def __len__(self) -> int:
        return len(self.ops)

    def inverse(self) -> "OperationSequence":
        return OperationSequence(self.memory_size,
                                 [op.inverse() for op in reversed(self.ops)],
                                 self.input_register, self.output_register)

    def embedded(self, qubit_map: Sequence[int], memory_size: int) -> "OperationSequence":
        """Remap qubit i -> qubit_map[i] inside a larger memory."""
        mapping = tuple(int(q) for q in qubit_map)
        if len(set(mapping)) != len(mapping):
            raise RegisterError("qubit map must be injective")
        if len(mapping) < self.memory_size:
            raise RegisterError("qubit map does not cover the sequence memory")

        def remap(r: Register | None):
            return Register(mapping[q] for q in r) if r is not None else None

        return OperationSequence(
            memory_size,
            [Operation(op.gate, remap(op.target)) for op in self.ops],
            remap(self.input_register), remap(self.output_register))

    def dense(self) -> np.ndarray:
        """Dense matrix of the whole sequence (small memories only)."""
        dim = 1 << self.memory_size
        if self.memory_size > 12:
            raise ValueError("dense() supports at most 12 qubits")
        m = np.eye(dim, dtype=np.complex128)
        for k in range(dim):
            sv = StateVector(self.memory_size, m[:, k].copy(), _normalized=False)
            m[:, k] = run_sequence(sv, self, check_norm=False).amplitudes
        return m


# ---------------------------------------------------------------------------
# state vectors


@dataclass(frozen=True)
class StateVector:
    """Amplitudes over the classical states of a qubit memory."""

    num_qubits: int
    amplitudes: np.ndarray

    def __init__(self, num_qubits: int, amplitudes, _normalized: bool = True):
        if num_qubits > MAX_QUBITS:
            raise ValueError(f"{num_qubits} qubits exceed the {MAX_QUBITS}-qubit cap")
        amps = qlinalg.require_finite(amplitudes).reshape(-1)
        if amps.shape[0] != (1 << num_qubits):
            raise ValueError("amplitude count must be 2**num_qubits")
        if _normalized and abs(np.linalg.norm(amps) - 1.0) > NORM_ATOL:
            raise ValueError("state vector is not normalized")
        object.__setattr__(self, "num_qubits", int(num_qubits))
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def classical(cls, num_qubits: int, value: int) -> "StateVector":
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[value] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "StateVector":
        value = 0
        for b in bits:
            value = (value << 1) | (b & 1)
        return cls.classical(len(bits), value)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def bit_value(self, value: int, qubit: int) -> int:
        return (value >> (self.num_qubits - 1 - qubit)) & 1

    def register_value(self, value: int, register: Register) -> int:
        out = 0
        for q in register:
            out = (out << 1) | self.bit_value(value, q)
        return out


def bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | (b & 1)
    return value


def int_to_bits(value: int, width: int) -> tuple[int, ...]:
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


# ---------------------------------------------------------------------------
# applying operations


def _gather_block(amps: np.ndarray, num_qubits: int, target: Register):
    """View the amplitudes as (2**m, rest) with the target qubits leading."""
    t = list(target)
    rest = [q for q in range(num_qubits) if q not in set(t)]
    perm = t + rest
    arr = amps.reshape((2,) * num_qubits).transpose(perm).reshape(1 << len(t), -1)
    return arr, perm


def _scatter_block(arr: np.ndarray, num_qubits: int, perm: list[int]) -> np.ndarray:
    inv = np.argsort(perm)
    return arr.reshape((2,) * num_qubits).transpose(inv).reshape(-1)


def _apply_to_block(gate: Gate, block: np.ndarray) -> np.ndarray:
    """Apply a gate to a (2**arity, rest) amplitude block."""
    if gate.kind == "unitary":
        return gate.matrix @ block
    if gate.kind == "phase":
        out = block.copy()
        out[1] *= np.exp(1j * gate.angle)
        return out
    if gate.kind == "not":
        return block[::-1].copy()
    if gate.kind == "tau":
        return block[[0, 1, 3, 2]].copy()
    if gate.kind == "and_tau":
        return block[[0, 1, 2, 3, 4, 5, 7, 6]].copy()
    if gate.kind == "perm":
        table = gate.perm
        if table.partial:
            outside = ~table.domain_mask
            if np.any(np.abs(block[outside]) > ZERO_AMPLITUDE):
                raise DomainViolationError(
                    f"{table.name}: amplitude outside the declared domain")
        # the table is a full-cube bijection (identity off-domain)
        out = np.empty_like(block)
        out[table.table] = block
        return out
    if gate.kind == "controlled":
        width = gate.control_width
        sub = block.reshape(1 << width, 1 << (gate.arity - width), -1)
        out = sub.copy()
        for v, payload in gate.branches.items():
            if payload is None:
                continue
            out[v] = _apply_to_block(payload, sub[v].reshape(sub.shape[1], -1)).reshape(sub[v].shape)
        return out.reshape(block.shape)
    if gate.kind == "custom":
        return gate.apply_fn(block)
    raise ValueError(f"cannot apply gate kind {gate.kind!r}")


def apply_operation(state: StateVector, op: Operation, check_norm: bool = True) -> StateVector:
    """Apply gate[target] tensored with identity on the rest of the memory."""
    if max(op.target, default=-1) >= state.num_qubits:
        raise RegisterError("operation target exceeds the state memory")
    block, perm = _gather_block(state.amplitudes, state.num_qubits, op.target)
    new_block = _apply_to_block(op.gate, block)
    amps = _scatter_block(new_block, state.num_qubits, perm)
    out = StateVector(state.num_qubits, amps, _normalized=False)
    if check_norm and abs(out.norm() - state.norm()) > 1e-12:
        raise RuntimeError(f"gate {op.gate.label!r} drifted the norm")
    return out


def run_sequence(state: StateVector, seq: OperationSequence,
                 check_norm: bool = True) -> StateVector:
    """Fold apply_operation over the operations, left to right."""
    if seq.memory_size != state.num_qubits:
        raise RegisterError("sequence memory does not match the state")
    start_norm = state.norm()
    for op in seq.ops:
        state = apply_operation(state, op, check_norm=False)
    if check_norm and abs(state.norm() - start_norm) > NORM_ATOL:
        raise RuntimeError("sequence drifted the norm beyond tolerance")
    return state


# ---------------------------------------------------------------------------
# classical propagation (works on any memory size; classical gates only)


def _classical_gate_value(gate: Gate, value: int) -> int:
    """Image of a basis-state value (over the gate's own register) under a
    classical gate."""
    if gate.kind == "not":
        return value ^ 1
    if gate.kind == "tau":
        u, v = value >> 1, value & 1
        return (u << 1) | (v ^ u)
    if gate.kind == "and_tau":
        u1, u2, v = (value >> 2) & 1, (value >> 1) & 1, value & 1
        return (u1 << 2) | (u2 << 1) | (v ^ (u1 & u2))
    if gate.kind == "perm":
        if gate.perm.partial and not gate.perm.domain_mask[value]:
            raise DomainViolationError(
                f"{gate.perm.name}: classical value outside the declared domain")
        return int(gate.perm.table[value])
    if gate.kind == "controlled":
        ctrl = value >> (gate.arity - gate.control_width)
        rest = value & ((1 << (gate.arity - gate.control_width)) - 1)
        payload = gate.branches.get(ctrl)
        if payload is None:
            return value
        return (ctrl << (gate.arity - gate.control_width)) | \
            _classical_gate_value(payload, rest)
    raise ValueError(f"gate kind {gate.kind!r} is not classical")


def classical_apply(op: Operation, memory_size: int, value: int) -> int:
    """Propagate a classical memory value through one operation."""
    local = 0
    for q in op.target:
        local = (local << 1) | ((value >> (memory_size - 1 - q)) & 1)
    image = _classical_gate_value(op.gate, local)
    out = value
    for pos, q in enumerate(reversed(op.target.qubits)):
        bit = (image >> pos) & 1
        shift = memory_size - 1 - q
        out = (out & ~(1 << shift)) | (bit << shift)
    return out


def run_classical(seq: OperationSequence, value: int) -> int:
    """Propagate a classical value through a sequence of classical gates."""
    for op in seq.ops:
        value = classical_apply(op, seq.memory_size, value)
    return value


# ---------------------------------------------------------------------------
# measurement


def register_probabilities(state: StateVector, register: Register) -> np.ndarray:
    """Marginal outcome probabilities for a register, indexed by its value."""
    block, _ = _gather_block(state.amplitudes, state.num_qubits, register)
    return np.sum(np.abs(block) ** 2, axis=1)


def measure_register(state: StateVector, register: Register,
                     rng: np.random.Generator) -> tuple[int, StateVector]:
    """Sample an outcome and collapse.  Same rng state => same outcome."""
    probs = register_probabilities(state, register)
    total = probs.sum()
    if total <= 0:
        raise RuntimeError("state has no support to measure")
    outcome = int(rng.choice(len(probs), p=probs / total))
    if probs[outcome] < ZERO_AMPLITUDE:
        raise RuntimeError("projection probability below the resample guard")
    block, perm = _gather_block(state.amplitudes, state.num_qubits, register)
    collapsed = np.zeros_like(block)
    collapsed[outcome] = block[outcome] / np.sqrt(probs[outcome])
    amps = _scatter_block(collapsed, state.num_qubits, perm)
    return outcome, StateVector(state.num_qubits, amps)


def observable_probabilities(state: StateVector, fam: qlinalg.ObservableFamily) -> dict:
    """P(state, V) per labeled part plus the residual outcome."""
    if fam.ambient_dim != (1 << state.num_qubits):
        raise qlinalg.DimensionMismatchError("family does not match the state space")
    return qlinalg.observable_distribution(state.amplitudes, fam)


# ---------------------------------------------------------------------------
# Boolean circuits


@dataclass(frozen=True)
class CircuitGate:
    kind: str        # "NOT" or "AND"
    inputs: tuple[int, ...]


@dataclass(frozen=True)
class BooleanCircuit:
    """A circuit over the basis {NOT, AND}; every gate appends one fresh wire.

    Wires 0..num_inputs-1 hold the input; gate i writes wire num_inputs+i.
    ``outputs`` lists the tapped wires.
    """

    num_inputs: int
    gates: tuple[CircuitGate, ...]
    outputs: tuple[int, ...]

    def __init__(self, num_inputs: int, gates, outputs):
        gates = tuple(gates)
        wire_count = num_inputs
        for g in gates:
            arity = 1 if g.kind == "NOT" else 2
            if g.kind not in ("NOT", "AND") or len(g.inputs) != arity:
                raise ValueError(f"bad gate {g}")
            if any(w < 0 or w >= wire_count for w in g.inputs):
                raise ValueError("gate reads a wire that does not exist yet")
            wire_count += 1
        outputs = tuple(int(w) for w in outputs)
        if any(w < 0 or w >= wire_count for w in outputs):
            raise ValueError("output tap out of range")
        object.__setattr__(self, "num_inputs", int(num_inputs))
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "outputs", outputs)

    @property
    def size(self) -> int:
        return len(self.gates)

    @property
    def num_wires(self) -> int:
        return self.num_inputs + len(self.gates)

    @property
    def num_outputs(self) -> int:
        return len(self.outputs)


def evaluate_circuit(circuit: BooleanCircuit, x: Sequence[int]) -> tuple[int, ...]:
    if len(x) != circuit.num_inputs:
        raise ValueError("input width mismatch")
    wires = [b & 1 for b in x]
    for g in circuit.gates:
        if g.kind == "NOT":
            wires.append(1 - wires[g.inputs[0]])
        else:
            wires.append(wires[g.inputs[0]] & wires[g.inputs[1]])
    return tuple(wires[w] for w in circuit.outputs)


NOT_TAU_TABLE = PermutationTable(2, [1, 0, 2, 3], name="not_tau")  # (u,v)->(u, v^~u)


def compile_circuit(circuit: BooleanCircuit) -> OperationSequence:
    """One reversible op per circuit gate, each writing a fresh ancilla wire.

    Memory = all wires; run on |x, 0...0> and read the tap register to get
    evaluate_circuit(circuit, x).
    """
    seq = OperationSequence(circuit.num_wires,
                            input_register=Register(range(circuit.num_inputs)),
                            output_register=Register(circuit.outputs))
    fresh = circuit.num_inputs
    for g in circuit.gates:
        if g.kind == "NOT":
            seq.append(Gate.permutation(NOT_TAU_TABLE), (g.inputs[0], fresh))
        elif g.inputs[0] == g.inputs[1]:
            seq.append(Gate.tau(), (g.inputs[0], fresh))  # a AND a = a
        else:
            seq.append(Gate.and_tau(), (g.inputs[0], g.inputs[1], fresh))
        fresh += 1
    return seq


def circuit_from_function(num_inputs: int, num_outputs: int, fn) -> BooleanCircuit:
    """Synthesize a circuit for an arbitrary total function by sum of minterms.

    ``fn`` maps an input value to an output value (both big-endian packed
    bits).  The construction is wasteful but dependable; use it for oracles
    and small compiled blackboxes, not for size-sensitive constructions.
    """
    gates = []
    wires = num_inputs

    def emit(kind, ins):
        nonlocal wires
        gates.append(CircuitGate(kind, ins))
        wires += 1
        return wires - 1

    neg = [emit("NOT", (i,)) for i in range(num_inputs)]

    def and_chain(ws):
        acc = ws[0]
        for w in ws[1:]:
            acc = emit("AND", (acc, w))
        return acc

    def or_pair(a, b):
        return emit("NOT", (emit("AND", (emit("NOT", (a,)), emit("NOT", (b,)))),))

    table = [fn(x) for x in range(1 << num_inputs)]
    outputs = []
    zero_wire = None
    for bit in range(num_outputs):
        minterms = []
        for x in range(1 << num_inputs):
            if (table[x] >> (num_outputs - 1 - bit)) & 1:
                ws = [i if (x >> (num_inputs - 1 - i)) & 1 else neg[i]
                      for i in range(num_inputs)]
                minterms.append(and_chain(ws))
        if not minterms:
            if zero_wire is None:
                zero_wire = emit("AND", (0, neg[0]))
            outputs.append(zero_wire)
            continue
        acc = minterms[0]
        for term in minterms[1:]:
            acc = or_pair(acc, term)
        outputs.append(acc)
    return BooleanCircuit(num_inputs, gates, tuple(outputs))


# ---------------------------------------------------------------------------
# text circuit format


def parse_circuit(text: str) -> BooleanCircuit:
    """Parse the one-gate-per-line format.

    Example::

        inputs 2
        AND 0 1 -> 2
        NOT 2
        outputs 3

    The optional ``-> k`` names the fresh wire a gate writes and must equal
    the next free index.
    """
    num_inputs = None
    gates: list[CircuitGate] = []
    outputs = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0].lower()
        if head == "inputs":
            num_inputs = int(parts[1])
            continue
        if head == "outputs":
            outputs = tuple(int(p) for p in parts[1:])
            continue
        if num_inputs is None:
            raise ValueError(f"line {lineno}: gate before the inputs header")
        declared = None
        if "->" in parts:
            arrow = parts.index("->")
            declared = int(parts[arrow + 1])
            parts = parts[:arrow]
        kind = parts[0].upper()
        ins = tuple(int(p) for p in parts[1:])
        fresh = num_inputs + len(gates)
        if declared is not None and declared != fresh:
            raise ValueError(f"line {lineno}: gate output {declared} is not the "
                             f"next fresh wire {fresh}")
        gates.append(CircuitGate(kind, ins))
    if num_inputs is None or outputs is None:
        raise ValueError("circuit text needs inputs and outputs lines")
    return BooleanCircuit(num_inputs, gates, outputs)


def format_circuit(circuit: BooleanCircuit) -> str:
    lines = [f"inputs {circuit.num_inputs}"]
    fresh = circuit.num_inputs
    for g in circuit.gates:
        if g.kind == "NOT":
            lines.append(f"NOT {g.inputs[0]} -> {fresh}")
        else:
            lines.append(f"AND {g.inputs[0]} {g.inputs[1]} -> {fresh}")
        fresh += 1
    lines.append("outputs " + " ".join(str(w) for w in circuit.outputs))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# repetition with majority vote


def majority_error_bound(eps: float, repetitions: int) -> float:
    """Residual error probability of a majority vote over k repetitions.

    A computation failing with probability eps, repeated k times on
    independent memories, errs as a majority no more often than lambda**k
    with lambda = 2 sqrt(eps (1 - eps)).  The repetition count is a caller
    choice; this returns the bound for it.
    """
    lam = 2.0 * math.sqrt(eps * (1.0 - eps))
    return lam ** repetitions


def repeat_with_majority(run_once: Callable[[np.random.Generator], int],
                         repetitions: int, rng: np.random.Generator) -> int:
    """Run a randomized computation k times and return the majority outcome.

    Ties and three-way splits fall back to the most frequent value with the
    smallest encoding, which at worst wastes the run (the bound above counts
    any non-majority event as an error).
    """
    counts: dict[int, int] = {}
    for _ in range(repetitions):
        y = run_once(rng)
        counts[y] = counts.get(y, 0) + 1
    return min((k for k, v in counts.items()
                if v == max(counts.values())))


# ---------------------------------------------------------------------------
# perturbation harness


def _random_unitary_near_identity(dim: int, delta: float,
                                  rng: np.random.Generator) -> np.ndarray:
    """A unitary within operator-norm distance delta of the identity."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    norm = qlinalg.operator_norm(h)
    if norm == 0.0:
        return np.eye(dim, dtype=np.complex128)
    h /= norm
    # ||exp(i t H) - I|| = 2 sin(t/2) for ||H|| = 1; invert for distance delta
    t = 2 * np.arcsin(min(delta / 2, 1.0)) if delta < 2 else np.pi
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * t * w)) @ v.conj().T


def perturb_sequence(seq: OperationSequence, delta: float,
                     rng: np.random.Generator) -> OperationSequence:
    """Replace each gate with a unitary within operator-norm distance delta.

    Gates are converted to their dense form before perturbing, so semantic
    gates wider than 10 qubits are rejected.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return OperationSequence(seq.memory_size, list(seq.ops),
                                 seq.input_register, seq.output_register)
    out = OperationSequence(seq.memory_size, input_register=seq.input_register,
                            output_register=seq.output_register)
    for op in seq.ops:
        if op.gate.arity > 10:
            raise ValueError("cannot perturb a gate wider than 10 qubits")
        u = op.gate.dense()
        near = _random_unitary_near_identity(u.shape[0], delta, rng)
        out.append(Gate("unitary", op.gate.arity, matrix=near @ u,
                        label=op.gate.label + "~"), op.target)
    return out
