import numpy as np
import pytest

from eigenphase import qlinalg
from eigenphase.qlinalg import (DensityMatrix, ObservableFamily, Subspace,
                                operator_norm, partial_trace,
                                partial_trace_vector, quantum_probability,
                                tensor, trace_norm)

from conftest import random_density, random_state, random_unitary


class TestQuantumProbability:
    def test_projector_onto_own_state(self):
        v = qlinalg.basis_state(2, 0)
        assert quantum_probability(v, Subspace.classical(2, [0])) == pytest.approx(1.0)

    def test_plus_state_against_zero(self):
        v = np.array([1, 1]) / np.sqrt(2)
        assert quantum_probability(v, Subspace.classical(2, [0])) == pytest.approx(0.5)

    def test_classical_density_reduces_to_measure(self, rng):
        # diagonal density against a classical subspace sums the measure
        mu = rng.random(8)
        mu /= mu.sum()
        rho = DensityMatrix.classical(mu)
        subset = [0, 3, 5]
        sub = Subspace.classical(8, subset)
        assert quantum_probability(rho, sub) == pytest.approx(sum(mu[i] for i in subset))

    def test_additive_over_orthogonal_subspaces(self, rng):
        v = random_state(8, rng)
        s1 = Subspace.classical(8, [0, 1])
        s2 = Subspace.classical(8, [4, 6])
        joined = Subspace(np.concatenate([s1.basis, s2.basis], axis=1))
        assert quantum_probability(v, joined) == pytest.approx(
            quantum_probability(v, s1) + quantum_probability(v, s2), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(qlinalg.DimensionMismatchError):
            quantum_probability(qlinalg.basis_state(4, 0), Subspace.classical(8, [0]))

    def test_independence_of_products(self, rng):
        # P(rhoA x rhoB, MA x MB) = P(rhoA, MA) P(rhoB, MB)
        for _ in range(5):
            ra, rb = random_density(4, rng), random_density(2, rng)
            ma = Subspace.span(rng.normal(size=(4, 2)))
            mb = Subspace.span(rng.normal(size=(2, 1)))
            prod_sub = Subspace(np.kron(ma.basis, mb.basis))
            rho = DensityMatrix(np.kron(ra.matrix, rb.matrix))
            lhs = quantum_probability(rho, prod_sub)
            rhs = quantum_probability(ra, ma) * quantum_probability(rb, mb)
            assert lhs == pytest.approx(rhs, abs=1e-10)


class TestObservableFamily:
    def test_distribution_sums_to_one(self, rng):
        basis = random_unitary(8, rng)
        fam = ObservableFamily([
            ("a", Subspace(basis[:, :3])),
            ("b", Subspace(basis[:, 3:5])),
        ])
        dist = qlinalg.observable_distribution(random_state(8, rng), fam)
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)
        assert dist[ObservableFamily.RESIDUAL] >= 0

    def test_probability_difference_bounded_by_trace_norm(self, rng):
        # sum_V |P(rho,V) - P(gamma,V)| <= ||rho - gamma||_tr
        for dim in (4, 8, 16):
            basis = random_unitary(dim, rng)
            cut = dim // 2
            fam = ObservableFamily([
                ("a", Subspace(basis[:, :cut // 2])),
                ("b", Subspace(basis[:, cut // 2:cut])),
            ])
            rho, gamma = random_density(dim, rng), random_density(dim, rng)
            lhs = sum(abs(quantum_probability(rho, s) - quantum_probability(gamma, s))
                      for _, s in fam.parts)
            assert lhs <= trace_norm(rho.matrix - gamma.matrix) + 1e-9

    def test_rejects_overlapping_parts(self):
        with pytest.raises(ValueError):
            ObservableFamily([
                ("a", Subspace.classical(4, [0, 1])),
                ("b", Subspace.classical(4, [1, 2])),
            ])


class TestNorms:
    def test_identity(self):
        for d in (1, 2, 5):
            assert operator_norm(np.eye(d)) == pytest.approx(1.0)
            assert trace_norm(np.eye(d)) == pytest.approx(float(d))

    def test_diag_plus_minus(self):
        m = np.diag([1.0, -1.0])
        assert trace_norm(m) == pytest.approx(2.0)

    def test_pure_state_difference(self, rng):
        # || |x><x| - |y><y| ||_tr = 2 sqrt(1 - |<x|y>|^2)
        for _ in range(5):
            x, y = random_state(6, rng), random_state(6, rng)
            m = np.outer(x, x.conj()) - np.outer(y, y.conj())
            expected = 2 * np.sqrt(1 - abs(np.vdot(x, y)) ** 2)
            assert trace_norm(m) == pytest.approx(expected, abs=1e-10)

    def test_norm_inequalities(self, rng):
        for _ in range(10):
            a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            b = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            assert operator_norm(a @ b) <= operator_norm(a) * operator_norm(b) + 1e-9
            assert trace_norm(a @ b) <= operator_norm(b) * trace_norm(a) + 1e-9
            assert trace_norm(b @ a) <= operator_norm(b) * trace_norm(a) + 1e-9
            assert abs(np.trace(a)) <= trace_norm(a) + 1e-9

    def test_non_square_rejected(self):
        with pytest.raises(qlinalg.DimensionMismatchError):
            operator_norm(np.zeros((2, 3)))


class TestTensor:
    def test_identity_product(self):
        assert np.allclose(tensor(np.eye(2), np.eye(2)), np.eye(4))

    def test_diag_embedding(self):
        lam = 0.3 + 0.4j
        got = tensor(np.diag([1, lam]), np.eye(2))
        assert np.allclose(np.diag(got), [1, 1, lam, lam])

    def test_hadamard_pair_makes_uniform(self):
        h2 = tensor(qlinalg.hadamard(), qlinalg.hadamard())
        out = h2 @ qlinalg.basis_state(4, 0)
        assert np.allclose(out, np.full(4, 0.5))


class TestPartialTrace:
    def test_bell_state_gives_maximally_mixed(self):
        bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
        reduced = partial_trace_vector(bell, (2, 2), "A")
        assert np.allclose(reduced.matrix, np.eye(2) / 2)

    def test_product_state_recovers_factor(self, rng):
        ra, rb = random_density(2, rng), random_density(4, rng)
        joint = DensityMatrix(np.kron(ra.matrix, rb.matrix))
        assert np.allclose(partial_trace(joint, (2, 4), "A").matrix, ra.matrix, atol=1e-12)
        assert np.allclose(partial_trace(joint, (2, 4), "B").matrix, rb.matrix, atol=1e-12)

    def test_classical_state(self):
        v = qlinalg.basis_state(4, 0b01)  # |0>|1>
        reduced = partial_trace_vector(v, (2, 2), "A")
        assert np.allclose(reduced.matrix, np.diag([1.0, 0.0]))

    def test_trace_preserved(self, rng):
        rho = random_density(8, rng)
        out = partial_trace(rho, (2, 4), "B")
        assert np.trace(out.matrix) == pytest.approx(1.0)

    def test_bad_factorization(self, rng):
        with pytest.raises(qlinalg.DimensionMismatchError):
            partial_trace(random_density(8, rng), (3, 3), "A")


class TestValidation:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            qlinalg.require_finite([np.nan, 1.0])

    def test_density_must_be_hermitian(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_density_must_have_unit_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2))

    def test_subspace_must_be_orthonormal(self):
        with pytest.raises(ValueError):
            Subspace(np.array([[1.0, 1.0], [0.0, 0.0]]))
