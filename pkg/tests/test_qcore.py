import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qet import qcore
from qet.errors import ValidationError
from qet.minimal_qet import MinimalParams, build_model
from qet.qcore import I2, X, Y, Z, kron


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_kron_identity_and_involution():
    assert np.array_equal(kron(I2, I2), np.eye(4))
    xx = kron(X, X)
    assert np.allclose(xx @ xx, np.eye(4), atol=1e-15)


def test_kron_sign_convention():
    # sigma_z |1> = -|1>
    assert np.allclose(kron(Z, I2) @ qcore.ket("10"), -qcore.ket("10"))


def test_kron_associative():
    # integer entries keep every product exact, so equality is bitwise
    rng = np.random.default_rng(0)
    a, b, c = (rng.integers(-9, 9, (2, 2)) + 1j * rng.integers(-9, 9, (2, 2)) for _ in range(3))
    assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_partial_trace_examples():
    assert np.allclose(qcore.partial_trace(qcore.dm(qcore.ket("00")), [1]), np.diag([1, 0]))
    bell = (qcore.ket("00") + qcore.ket("11")) / np.sqrt(2)
    assert np.allclose(qcore.partial_trace(qcore.dm(bell), [1]), np.eye(2) / 2)


def test_partial_trace_of_minimal_ground():
    m = build_model(MinimalParams(1.0, 1.0))
    rho_b = qcore.partial_trace(qcore.dm(m.ground), [1])
    # the small amplitude sits on |00>, so B's |0> population is C-^2/2
    assert np.allclose(rho_b, np.diag([m.c_minus**2, m.c_plus**2]) / 2, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_partial_trace_product_states(seed):
    rng = np.random.default_rng(seed)
    ra, rb = random_density(rng, 2), random_density(rng, 2)
    assert np.allclose(qcore.partial_trace(np.kron(ra, rb), [0]), ra, atol=1e-12)
    assert np.allclose(qcore.partial_trace(np.kron(ra, rb), [1]), rb, atol=1e-12)


def test_partial_trace_three_qubits():
    rng = np.random.default_rng(1)
    ra, rb, rc = (random_density(rng, 2) for _ in range(3))
    rho = kron(ra, rb, rc)
    assert np.allclose(qcore.partial_trace(rho, [0, 2]), np.kron(ra, rc), atol=1e-12)
    assert np.allclose(qcore.partial_trace(rho, [1]), rb, atol=1e-12)


def test_expect_examples():
    m = build_model(MinimalParams(1.0, 1.0))
    assert abs(qcore.expect(m.h_total, m.ground)) < 1e-12
    assert qcore.expect(np.eye(4), random_density(np.random.default_rng(2), 4)) == pytest.approx(1.0)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert qcore.expect(X, plus) == pytest.approx(1.0)


def test_hermitian_eig_examples():
    w, _ = qcore.hermitian_eig(Z)
    assert np.allclose(w, [-1, 1])
    w, _ = qcore.hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1, 2, 3])
    w, _ = qcore.hermitian_eig(build_model(MinimalParams(1.0, 1.0)).h_total)
    assert abs(w[0]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 8, 16]))
def test_hermitian_eig_matches_lapack(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    a = (a + a.conj().T) / 2
    w, v = qcore.hermitian_eig(a)
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-10)
    assert np.allclose(v.conj().T @ v, np.eye(dim), atol=1e-10)
    assert np.allclose((v * w) @ v.conj().T, a, atol=1e-10)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        qcore.hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_matexp_pauli_pair():
    assert np.allclose(qcore.matexp_pauli_pair(0.0, Y, Y), np.eye(4))
    assert np.allclose(qcore.matexp_pauli_pair(np.pi / 2, Y, Y), 1j * kron(Y, Y))
    u = qcore.matexp_pauli_pair(1.0, X, Z)
    assert np.allclose(u, np.cos(1) * np.eye(4) + 1j * np.sin(1) * kron(X, Z))
    assert np.linalg.norm(u @ u.conj().T - np.eye(4)) < 1e-12


def test_density_checks():
    with pytest.raises(ValidationError):
        qcore.check_density(np.diag([0.7, 0.7]))
    with pytest.raises(ValidationError):
        qcore.check_density(np.diag([1.2, -0.2]))
    rho = qcore.check_density(np.eye(2) / 2)
    assert qcore.purity(rho) == pytest.approx(0.5)


def test_haar_unitary_is_unitary():
    u = qcore.haar_unitary(4, np.random.default_rng(3))
    assert qcore.is_unitary(u)


def test_trace_distance_and_fidelity():
    a, b = qcore.dm(qcore.ket("0")), qcore.dm(qcore.ket("1"))
    assert qcore.trace_distance(a, b) == pytest.approx(1.0)
    assert qcore.fidelity_pure(qcore.ket("0"), qcore.ket("0")) == pytest.approx(1.0)


def test_permute_qubits_swaps_factors():
    a, b = X, Z
    assert np.allclose(qcore.permute_qubits(kron(a, b), [1, 0]), kron(b, a))
