"""Complex linear algebra for small quantum systems.

Matrices and vectors are plain numpy complex128 arrays.  This module adds the
structured objects the simulator needs on top of them: orthonormal subspaces,
labeled families of orthogonal subspaces (observables), density operators,
quantum probability, partial trace, and the two operator norms.

Conventions
-----------
* A state vector over ``m`` qubits is a 1-D array of length ``2**m`` whose
  squared norm is 1.
* ``tensor(a, b)`` is the Kronecker product with the first factor most
  significant, so qubit 0 of a register is the most significant bit of the
  amplitude index.
* Tolerances: unitarity/Hermiticity checks use ``ATOL = 1e-10``; probabilities
  are clamped to [0, 1] within a window of 1e-12.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOL = 1e-10
PROB_CLAMP = 1e-12


class DimensionMismatchError(ValueError):
    """Operands live in spaces of different dimension."""


def _as_complex(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries are not allowed")
    return arr


def require_finite(a) -> np.ndarray:
    """Coerce to complex128 and reject NaN/Inf."""
    return _as_complex(a)


def is_unitary(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])) <= atol


def require_unitary(m, atol: float = ATOL) -> np.ndarray:
    m = _as_complex(m)
    if not is_unitary(m, atol):
        raise ValueError("matrix is not unitary within tolerance")
    return m


def hadamard() -> np.ndarray:
    """The 2x2 symmetric unitary (1/sqrt2)[[1,1],[1,-1]]."""
    return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; the first factor is the most significant."""
    return np.kron(_as_complex(a), _as_complex(b))


def basis_state(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def operator_norm(m: np.ndarray) -> float:
    """Largest singular value."""
    m = _as_complex(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError("operator_norm expects a square matrix")
    return float(np.linalg.svd(m, compute_uv=False)[0]) if m.size else 0.0


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = _as_complex(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError("trace_norm expects a square matrix")
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


@dataclass(frozen=True)
class Subspace:
    """A linear subspace given by an orthonormal basis.

    ``basis`` has shape (ambient_dim, dim); columns are the basis vectors.
    Pairwise inner products and norm defects are validated to 1e-10.
    """

    ambient_dim: int
    basis: np.ndarray

    def __init__(self, basis, ambient_dim: int | None = None):
        b = _as_complex(basis)
        if b.ndim == 1:
            b = b[:, None]
        if ambient_dim is None:
            ambient_dim = b.shape[0]
        if b.shape[0] != ambient_dim:
            raise DimensionMismatchError("basis rows do not match ambient dimension")
        gram = b.conj().T @ b
        if np.max(np.abs(gram - np.eye(b.shape[1]))) > ATOL:
            raise ValueError("basis is not orthonormal within tolerance")
        object.__setattr__(self, "ambient_dim", int(ambient_dim))
        object.__setattr__(self, "basis", b)

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None) -> "Subspace":
        """Orthonormalize arbitrary spanning vectors (columns) via QR."""
        v = _as_complex(vectors)
        if v.ndim == 1:
            v = v[:, None]
        q, r = np.linalg.qr(v)
        keep = np.abs(np.diag(r)) > 1e-12
        return cls(q[:, keep], ambient_dim if ambient_dim is not None else v.shape[0])

    @classmethod
    def classical(cls, ambient_dim: int, indices) -> "Subspace":
        """Span of standard basis vectors |i> for i in indices."""
        cols = [basis_state(ambient_dim, i) for i in indices]
        return cls(np.stack(cols, axis=1), ambient_dim)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def project(self, vec: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ vec)


@dataclass(frozen=True)
class ObservableFamily:
    """Labeled family of mutually orthogonal subspaces of one ambient space.

    The family need not be complete; the orthogonal complement plays the role
    of the no-value outcome and is reported under the reserved label
    ``RESIDUAL``.
    """

    ambient_dim: int
    parts: tuple  # of (label, Subspace)

    RESIDUAL = "?"

    def __init__(self, parts):
        parts = tuple((label, sub) for label, sub in parts)
        if not parts:
            raise ValueError("family needs at least one part")
        dim = parts[0][1].ambient_dim
        total = 0
        for _, sub in parts:
            if sub.ambient_dim != dim:
                raise DimensionMismatchError("subspaces live in different ambient spaces")
            total += sub.dim
        if total > dim:
            raise ValueError("total dimension exceeds the ambient space")
        stacked = np.concatenate([sub.basis for _, sub in parts], axis=1)
        gram = stacked.conj().T @ stacked
        if np.max(np.abs(gram - np.eye(stacked.shape[1]))) > ATOL:
            raise ValueError("subspaces are not pairwise orthogonal within tolerance")
        object.__setattr__(self, "ambient_dim", int(dim))
        object.__setattr__(self, "parts", parts)

    def labels(self) -> list:
        return [label for label, _ in self.parts]

    def covered_dim(self) -> int:
        return sum(sub.dim for _, sub in self.parts)


@dataclass(frozen=True)
class DensityMatrix:
    """Positive Hermitian operator with unit trace."""

    matrix: np.ndarray

    def __init__(self, matrix):
        m = _as_complex(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > ATOL:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(m) - 1.0) > ATOL:
            raise ValueError("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(m)) < -ATOL:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, vec) -> "DensityMatrix":
        v = _as_complex(vec)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def classical(cls, probs) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=np.complex128)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _clamp_probability(p: float) -> float:
    if p < -PROB_CLAMP or p > 1.0 + PROB_CLAMP:
        raise ValueError(f"probability {p} outside the clamping window")
    return min(max(p, 0.0), 1.0)


def quantum_probability(state, sub: Subspace) -> float:
    """P(state, sub): <xi|Pi|xi> for vectors, Tr(rho Pi) for densities."""
    if isinstance(state, DensityMatrix):
        if state.dim != sub.ambient_dim:
            raise DimensionMismatchError("state and subspace dimensions differ")
        # Tr(rho B B^dag) = sum of <b_i| rho |b_i>
        p = float(np.real(np.einsum("ij,ik,kj->", sub.basis.conj(), state.matrix, sub.basis)))
    else:
        vec = _as_complex(state)
        if vec.shape[0] != sub.ambient_dim:
            raise DimensionMismatchError("state and subspace dimensions differ")
        coeffs = sub.basis.conj().T @ vec
        p = float(np.real(np.vdot(coeffs, coeffs)))
    return _clamp_probability(p)


def observable_distribution(state, fam: ObservableFamily) -> dict:
    """Probability of each labeled part plus the residual outcome."""
    out = {}
    total = 0.0
    for label, sub in fam.parts:
        p = quantum_probability(state, sub)
        out[label] = p
        total += p
    out[ObservableFamily.RESIDUAL] = _clamp_probability(1.0 - total)
    return out


def partial_trace(rho: DensityMatrix, dims: tuple[int, int], keep: str) -> DensityMatrix:
    """Trace out one factor of a bipartite system.

    ``dims = (dim_a, dim_b)`` with dim_a * dim_b equal to the ambient
    dimension; ``keep`` is "A" or "B".
    """
    da, db = dims
    if da * db != rho.dim:
        raise DimensionMismatchError("dimensions do not factor the ambient space")
    m = rho.matrix.reshape(da, db, da, db)
    if keep.upper() == "A":
        reduced = np.einsum("ijkj->ik", m)
    elif keep.upper() == "B":
        reduced = np.einsum("jijk->ik", m)
    else:
        raise ValueError("keep must be 'A' or 'B'")
    return DensityMatrix(reduced)


def partial_trace_vector(vec: np.ndarray, dims: tuple[int, int], keep: str) -> DensityMatrix:
    """Partial trace of the pure state |vec><vec|."""
    return partial_trace(DensityMatrix.pure(vec), dims, keep)
