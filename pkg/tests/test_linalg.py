import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qme import linalg
from qme.errors import BadSite, DomainError, NotHermitian, SizeLimit

from conftest import random_density_matrix

X, Y, Z, I2 = (linalg.pauli(s) for s in ("x", "y", "z", "identity"))


def test_pauli_conventions():
    assert np.array_equal(Z, np.diag([1, -1]))
    assert np.allclose(X @ X, I2)
    assert np.allclose(Y @ Z, 1j * X)
    with pytest.raises(ValueError):
        linalg.pauli("w")


def test_pauli_returns_copies():
    a = linalg.pauli("x")
    a[0, 0] = 7
    assert linalg.pauli("x")[0, 0] == 0


def test_kron_basics():
    assert np.array_equal(linalg.kron(I2, I2), np.eye(4))
    assert np.array_equal(linalg.kron(Z, Z), np.diag([1, -1, -1, 1]))
    ket00 = np.array([1, 0, 0, 0])
    # site 1 is the most significant bit: |00> -> |10> = index 2
    assert np.array_equal(linalg.kron(X, I2) @ ket00, [0, 0, 1, 0])


def test_embed_site():
    assert np.array_equal(linalg.embed_site(Z, 1, 1), Z)
    assert np.array_equal(linalg.embed_site(Z, 2, 2), np.diag([1, -1, 1, -1]))
    a, b = linalg.embed_site(X, 1, 2), linalg.embed_site(X, 2, 2)
    assert np.allclose(a @ b, b @ a)
    with pytest.raises(BadSite):
        linalg.embed_site(Z, 3, 2)
    with pytest.raises(BadSite):
        linalg.embed_site(Z, 0, 2)


def test_size_limit():
    with pytest.raises(SizeLimit):
        linalg.embed_site(Z, 1, linalg.N_MAX + 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_pauli_expectation_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, n)
    labels = rng.choice(["i", "x", "y", "z"], size=n)
    ops = {j + 1: str(lab) for j, lab in enumerate(labels)}
    dense = np.trace(rho @ linalg.pauli_string(ops, n)).real
    assert linalg.pauli_expectation(rho, ops, n) == pytest.approx(dense, abs=1e-13)


def test_eigh_examples():
    assert np.allclose(linalg.hermitian_eig(Z).eigenvalues, [-1, 1])
    a = 0.5 * linalg.kron(I2, I2) + 0.25 * (linalg.kron(Z, I2) + linalg.kron(I2, Z)) + 0.3 * linalg.kron(Z, Z)
    assert np.allclose(linalg.hermitian_eig(a).eigenvalues, [0.2, 0.2, 0.3, 1.3], atol=1e-12)


def test_eigh_reconstruction(rng):
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    a = g + g.conj().T
    eig = linalg.hermitian_eig(a)
    assert np.max(np.abs(eig.reconstruct() - a)) < 1e-10
    assert np.all(np.diff(eig.eigenvalues) >= 0)
    assert linalg.is_unitary(eig.eigenvectors)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        linalg.hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_matrix_function_examples(rng):
    assert np.allclose(linalg.matrix_function(np.zeros((2, 2)), np.exp), I2)
    assert np.allclose(linalg.matrix_function(Z, lambda w: np.exp(-w)), np.diag([np.exp(-1), np.exp(1)]))
    rho = np.diag([0.5, 0.5]).astype(complex)
    assert np.allclose(linalg.matrix_function(rho, np.log), np.diag([np.log(0.5)] * 2))
    rho = random_density_matrix(rng, 3)
    assert np.max(np.abs(linalg.matrix_function(rho, lambda w: w) - rho)) < 1e-10


def test_matrix_function_domain_error():
    with pytest.raises(DomainError):
        linalg.matrix_function(np.diag([0.0, 1.0]).astype(complex), np.log)


def test_psd_log_zero_eigenvalue_convention():
    out = linalg.psd_log(np.diag([1.0, 0.0]).astype(complex))
    assert np.allclose(out, 0)
    with pytest.raises(DomainError):
        linalg.psd_log(np.diag([1.0, -0.5]).astype(complex))


def test_density_matrix_predicate(rng):
    assert linalg.is_density_matrix(random_density_matrix(rng, 2))
    assert not linalg.is_density_matrix(np.diag([1.5, -0.5]).astype(complex))
