import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import expm_taylor, random_density, random_hermitian
from macroreal.errors import DimMismatch, NotHermitian
from macroreal.numerics import anticomm, evolve_unitary, expval, herm_eig, is_unitary
from macroreal.observables import cyclic_hamiltonian_5, cycle_unitary_5, spin1_hamiltonian

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)

dims = st.integers(2, 5)
seeds = st.integers(0, 2**32 - 1)


class TestHermEig:
    def test_identity(self):
        vals, vecs = herm_eig(np.eye(3))
        np.testing.assert_allclose(vals, [1, 1, 1])
        np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(3), atol=1e-12)

    def test_diagonal(self):
        vals, vecs = herm_eig(np.diag([1.0, -1.0, 0.0]))
        np.testing.assert_allclose(vals, [-1, 0, 1])
        np.testing.assert_allclose(np.abs(vecs), np.eye(3)[:, [1, 2, 0]], atol=1e-12)

    def test_three_level_eigenvectors(self):
        # twice the spin-1 model Hamiltonian has eigenvalues -1, 0, 1
        vals, vecs = herm_eig(2 * spin1_hamiltonian())
        np.testing.assert_allclose(vals, [-1, 0, 1], atol=1e-12)
        r2 = np.sqrt(2)
        expected = np.array([[1, -r2, 1], [1, 0, -1], [1, r2, 1]]).T / np.array([2, r2, 2])
        np.testing.assert_allclose(vecs, expected, atol=1e-12)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            herm_eig(np.array([[0, 1], [0, 0]]))

    def test_not_square(self):
        with pytest.raises(DimMismatch):
            herm_eig(np.zeros((2, 3)))

    @given(dims, seeds)
    def test_reconstruction(self, d, seed):
        a = random_hermitian(np.random.default_rng(seed), d)
        vals, vecs = herm_eig(a)
        assert np.all(np.diff(vals) >= 0)
        np.testing.assert_allclose(vecs @ np.diag(vals) @ vecs.conj().T, a, atol=1e-10)
        np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(d), atol=1e-12)

    @given(dims, seeds)
    def test_phase_convention(self, d, seed):
        _, vecs = herm_eig(random_hermitian(np.random.default_rng(seed), d))
        for col in vecs.T:
            first = col[np.abs(col) > 1e-12][0]
            assert abs(first.imag) < 1e-12 and first.real > 0

    def test_deterministic(self, rng):
        a = random_hermitian(rng, 4)
        e1, e2 = herm_eig(a), herm_eig(a.copy())
        assert np.array_equal(e1.values, e2.values) and np.array_equal(e1.vectors, e2.vectors)


class TestEvolveUnitary:
    def test_zero_time(self, rng):
        np.testing.assert_allclose(evolve_unitary(random_hermitian(rng, 3), 0.0), np.eye(3), atol=1e-14)

    def test_spin_half_period(self):
        np.testing.assert_allclose(evolve_unitary(SX / 2, 2 * np.pi), -np.eye(2), atol=1e-12)

    def test_cyclic_shift(self):
        u = evolve_unitary(cyclic_hamiltonian_5(), 1.0)
        np.testing.assert_allclose(u, cycle_unitary_5(), atol=1e-10)

    def test_batched_times(self, rng):
        h = random_hermitian(rng, 3)
        ts = np.array([0.1, 0.7, 2.5])
        batch = evolve_unitary(h, ts)
        assert batch.shape == (3, 3, 3)
        for t, u in zip(ts, batch):
            np.testing.assert_allclose(u, evolve_unitary(h, t), atol=1e-14)

    @given(dims, seeds, st.floats(-7, 7), st.floats(-7, 7))
    def test_group_law(self, d, seed, t1, t2):
        h = random_hermitian(np.random.default_rng(seed), d)
        u = evolve_unitary(h, t1) @ evolve_unitary(h, t2)
        np.testing.assert_allclose(u, evolve_unitary(h, t1 + t2), atol=1e-10)
        assert is_unitary(u)

    @given(dims, seeds, st.floats(-5, 5))
    def test_matches_taylor_oracle(self, d, seed, t):
        h = random_hermitian(np.random.default_rng(seed), d)
        np.testing.assert_allclose(evolve_unitary(h, t), expm_taylor(-1j * h * t), atol=1e-10)


class TestAnticomm:
    def test_pauli(self):
        np.testing.assert_allclose(anticomm(SZ, SZ), 2 * np.eye(2))
        np.testing.assert_allclose(anticomm(SZ, SX), 0)

    def test_elementwise(self, rng):
        a, b = random_hermitian(rng, 4), random_hermitian(rng, 4)
        out = anticomm(a, b)
        for i in range(4):
            for j in range(4):
                ref = sum(a[i, k] * b[k, j] + b[i, k] * a[k, j] for k in range(4))
                assert abs(out[i, j] - ref) < 1e-12
        np.testing.assert_allclose(out, out.conj().T, atol=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            anticomm(np.eye(2), np.eye(3))


class TestExpval:
    def test_mixed_traceless(self):
        assert expval(np.eye(2) / 2, SZ) == 0.0

    def test_up_state(self):
        assert expval(np.diag([1.0, 0.0]), SZ) == 1.0

    def test_bloch_state(self):
        v = np.array([1, 1, 0]) / np.sqrt(2)
        rho = 0.5 * (np.eye(2) + v[0] * SX + v[1] * np.array([[0, -1j], [1j, 0]]))
        assert abs(expval(rho, SZ)) < 1e-15

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            expval(np.eye(3) / 3, SZ)

    @given(dims, seeds, st.floats(-3, 3), st.floats(-3, 3))
    def test_linear_and_normalized(self, d, seed, x, y):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, d)
        a, b = random_hermitian(rng, d), random_hermitian(rng, d)
        assert abs(expval(rho, x * a + y * b) - x * expval(rho, a) - y * expval(rho, b)) < 1e-10
        assert abs(expval(rho, np.eye(d)) - 1) < 1e-12
        assert abs(np.trace(rho @ a).imag) < 1e-10
