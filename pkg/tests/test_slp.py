import numpy as np
import pytest

from qet import minimal_qet as mq
from qet import qcore, slp
from qet.errors import ValidationError
from qet.minimal_qet import MinimalParams
from qet.qcore import I2, Z, kron
from qet.slp import SlpInstance

H_LOCAL = kron(Z, I2) + kron(I2, Z)
KET00 = np.diag([1.0, 0, 0, 0]).astype(complex)
KET11 = np.diag([0, 0, 0, 1.0]).astype(complex)


def _minimal_instance(h, k):
    m = mq.build_model(MinimalParams(h, k))
    return SlpInstance(qcore.dm(m.ground), m.h_total)


def test_c_operator_of_maximally_mixed_identity():
    c = slp.build_c_operator(SlpInstance(np.eye(4) / 4, np.eye(4)))
    assert np.allclose(c, np.eye(4) / 2)


def test_c_operator_block_support():
    c = slp.build_c_operator(SlpInstance(KET00, kron(Z, I2))).reshape(2, 2, 2, 2)
    # only A indices (0, 0) carry weight
    mask = np.ones((2, 2, 2, 2), bool)
    mask[0, :, 0, :] = False
    assert np.abs(c[mask]).max() == 0
    assert np.abs(c[0, :, 0, :]).max() > 0


def test_c_operator_energy_of_identity_channel():
    inst = slp.random_instance(3)
    e = np.real(np.trace(inst.hamiltonian @ inst.rho))
    assert slp.channel_energy(inst, slp.choi_identity(2)) == pytest.approx(e, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_hermiticity_defect_small_for_energy_diagonal(seed):
    assert slp.slp_check(slp.random_instance(seed)).hermiticity_defect < 1e-10


def test_dimension_mismatch_rejected():
    with pytest.raises(ValidationError):
        SlpInstance(np.eye(4) / 4, np.eye(3))
    with pytest.raises(ValidationError):
        SlpInstance(np.eye(4) / 4, np.eye(4) + 1j * np.triu(np.ones((4, 4)), 1))


def test_local_ground_is_slp():
    assert slp.slp_check(SlpInstance(KET11, H_LOCAL)).is_slp


def test_excited_product_is_not_slp():
    inst = SlpInstance(KET00, H_LOCAL)
    assert not slp.slp_check(inst).is_slp
    assert slp.brute_force_extraction_oracle(inst, 50, seed=0) >= 2 - 1e-6


def test_minimal_ground_is_slp_and_oracle_agrees():
    inst = _minimal_instance(1, 1)
    assert slp.slp_check(inst).is_slp
    assert slp.brute_force_extraction_oracle(inst, 200, seed=1) <= 1e-6


@pytest.mark.parametrize("h", [0.5, 1, 1.5, 2, 2.5])
@pytest.mark.parametrize("k", [0.5, 1, 1.5, 2, 2.5])
def test_minimal_ground_slp_grid(h, k):
    assert slp.slp_check(_minimal_instance(h, k)).is_slp


def test_zero_trials_is_zero():
    assert slp.brute_force_extraction_oracle(SlpInstance(KET00, H_LOCAL), 0, seed=0) == 0.0


def test_oracle_deterministic():
    inst = slp.random_instance(7)
    a = slp.brute_force_extraction_oracle(inst, 40, seed=9)
    assert a == slp.brute_force_extraction_oracle(inst, 40, seed=9)


@pytest.mark.parametrize("seed", range(6))
def test_identity_shift_invariance(seed):
    inst = slp.random_instance(seed)
    base = slp.slp_check(inst)
    for c in (-3.0, 0.7, 12.0):
        shifted = slp.slp_check(SlpInstance(inst.rho, inst.hamiltonian + c * np.eye(4)))
        assert shifted.is_slp == base.is_slp
        assert shifted.condition_min_eigenvalue == pytest.approx(base.condition_min_eigenvalue, abs=1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_verdict_matches_oracle(seed):
    inst = slp.random_instance(seed)
    gain = slp.brute_force_extraction_oracle(inst, 100, seed=seed)
    assert slp.slp_check(inst).is_slp == (gain <= 1e-6)


def test_threshold_minimal_regression():
    m = mq.build_model(MinimalParams(1, 1))
    p = slp.ground_population_threshold(qcore.hermitian_eig(m.h_total), 2)
    assert p == pytest.approx(0.97549, abs=1e-5)
    assert 0 < p < 1


def test_threshold_product_ground_rejected():
    m = mq.build_model(MinimalParams(1, 1e-12))
    with pytest.raises(ValidationError):
        slp.ground_population_threshold(qcore.hermitian_eig(m.h_total), 2)


def test_threshold_symmetric_under_swap():
    m = mq.build_model(MinimalParams(1.3, 0.8))
    swap = qcore.permute_qubits(m.h_total, [1, 0])
    a = slp.ground_population_threshold(qcore.hermitian_eig(m.h_total), 2)
    b = slp.ground_population_threshold(qcore.hermitian_eig(swap), 2)
    assert a == pytest.approx(b, abs=1e-12)


def test_schmidt_coefficients_bell():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(slp.schmidt_coefficients(bell, 2), [1 / np.sqrt(2)] * 2)
