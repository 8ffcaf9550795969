import numpy as np
import pytest

from eigenphase import circuits


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rng: np.random.Generator):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    m /= np.trace(m).real
    from eigenphase import qlinalg
    return qlinalg.DensityMatrix((m + m.conj().T) / 2)


def circuit_from_table(num_inputs: int, num_outputs: int, fn) -> circuits.BooleanCircuit:
    """Alias kept for test readability."""
    return circuits.circuit_from_function(num_inputs, num_outputs, fn)


def random_boolean_circuit(num_inputs: int, num_gates: int,
                           rng: np.random.Generator,
                           num_outputs: int | None = None,
                           distinct_outputs: bool = False) -> circuits.BooleanCircuit:
    gates = []
    wires = num_inputs
    for _ in range(num_gates):
        if rng.random() < 0.4:
            gates.append(circuits.CircuitGate("NOT", (int(rng.integers(wires)),)))
        else:
            i = int(rng.integers(wires))
            j = int(rng.integers(wires))
            while j == i and wires > 1:
                j = int(rng.integers(wires))
            gates.append(circuits.CircuitGate("AND", (i, j)))
        wires += 1
    if num_outputs is None:
        num_outputs = 1 + int(rng.integers(min(3, wires)))
    if distinct_outputs:
        outputs = tuple(int(w) for w in rng.choice(wires, size=num_outputs,
                                                   replace=False))
    else:
        outputs = tuple(int(rng.integers(wires)) for _ in range(num_outputs))
    return circuits.BooleanCircuit(num_inputs, gates, outputs)
