import numpy as np
import pytest

from qet import hardware_sim as hw
from qet import minimal_qet as mq
from qet import qcore
from qet.errors import ValidationError
from qet.minimal_qet import MinimalParams

TABLE = {
    (1.0, 0.2): (0.9806, 0.0521, -0.0701, -0.0180),
    (1.0, 0.5): (0.8944, 0.1873, -0.2598, -0.0726),
    (1.0, 1.0): (0.7071, 0.2598, -0.3746, -0.1147),
    (1.5, 1.0): (1.2481, 0.3480, -0.4905, -0.1425),
}
GRID4 = [(h, k) for h in (0.5, 1.0, 1.7, 2.5) for k in (0.2, 0.6, 1.0, 2.0)]


def _dephase_a(rho):
    out = np.zeros_like(rho)
    for a in range(2):
        p = qcore.kron(np.diag([1.0 - a, float(a)]), np.eye(2))
        out += p @ rho @ p
    return out


def test_ground_angle_examples():
    assert hw.ground_angle(MinimalParams(1, 1)) == pytest.approx(-1.17810, abs=1e-5)
    assert hw.ground_angle(MinimalParams(1, 1e6)) == pytest.approx(-np.pi / 4, abs=1e-5)


@pytest.mark.parametrize("hk", GRID4)
def test_prep_matches_ground(hk):
    p = MinimalParams(*hk)
    psi = hw.simulate(hw.prep_circuit(p))
    g = mq.build_model(p).ground
    assert np.real(g.conj() @ psi @ g) == pytest.approx(1.0, abs=1e-12)


def test_prep_outcomes_only_correlated():
    p = MinimalParams(1, 1)
    c = hw.prep_circuit(p).add("MEASURE_Z", 0).add("MEASURE_Z", 1)
    dist = hw.output_distribution(c)
    assert dist["01"] < 1e-15 and dist["10"] < 1e-15
    m = mq.build_model(p)
    # the excited-branch amplitude C- sits on |00> in the +h sz convention
    assert dist["00"] == pytest.approx(m.c_minus**2 / 2, abs=1e-12)


def test_prep_frequency_within_five_sigma():
    p = MinimalParams(1, 1)
    c = hw.prep_circuit(p).add("MEASURE_Z", 0).add("MEASURE_Z", 1)
    shots = 100_000
    r = hw.run_shots(c, shots, seed=3)
    assert r.counts["01"] == 0 and r.counts["10"] == 0
    q = mq.build_model(p).c_minus**2 / 2
    assert abs(r.counts["00"] / shots - q) < 5 * np.sqrt(q * (1 - q) / shots)


def test_single_shot_and_zero_shots():
    c = hw.prep_circuit(MinimalParams(1, 1)).add("MEASURE_Z", 0).add("MEASURE_Z", 1)
    r = hw.run_shots(c, 1, seed=0)
    assert sum(r.counts.values()) == 1
    with pytest.raises(ValidationError):
        hw.run_shots(c, 0, seed=0)


def test_shots_reproducible_by_seed():
    c = hw.measurement_circuit("V_AB", MinimalParams(1, 0.5))
    assert hw.run_shots(c, 1000, seed=5).counts == hw.run_shots(c, 1000, seed=5).counts


def test_identity_noise_leaves_counts():
    c = hw.measurement_circuit("H_B", MinimalParams(1, 0.5))
    r = hw.run_shots(c, 5000, seed=1)
    noisy = hw.apply_readout_noise(r, hw.ConfusionMatrix(np.eye(4)), seed=1)
    assert noisy.counts == r.counts


def test_mitigation_inverts_confusion_exactly():
    cm = hw.ConfusionMatrix.symmetric_flip(0.05)
    ideal = np.array([0.4, 0.1, 0.2, 0.3])
    noisy = cm.matrix.T @ ideal
    shots = 10**9
    r = hw.ShotResult({k: int(round(n * shots)) for k, n in zip(["00", "01", "10", "11"], noisy)}, shots, 0)
    q = hw.mitigate(r, cm)
    assert np.allclose([q[k] for k in ["00", "01", "10", "11"]], ideal, atol=1e-8)


def test_mitigation_clips_negative_quasi_probabilities():
    cm = hw.ConfusionMatrix.symmetric_flip(0.1)
    r = hw.ShotResult({"00": 100, "01": 0, "10": 0, "11": 0}, 100, 0)
    q = hw.mitigate(r, cm)
    assert min(q.values()) >= 0
    assert sum(q.values()) == pytest.approx(1.0)


def test_singular_confusion_rejected():
    cm = hw.ConfusionMatrix.symmetric_flip(0.5)
    r = hw.ShotResult({"00": 10, "01": 0, "10": 0, "11": 0}, 10, 0)
    with pytest.raises(ValidationError):
        hw.mitigate(r, cm)


@pytest.mark.parametrize("hk", GRID4)
def test_deferred_measurement_equals_feedback_channel(hk):
    p = MinimalParams(*hk)
    theta = mq.optimal_theta(p)
    rho2 = mq.final_state(mq.build_model(p), theta)
    h_a = qcore.kron(np.array([[1, 1], [1, -1]]) / np.sqrt(2), np.eye(2))
    expected = h_a @ rho2 @ h_a
    got = _dephase_a(hw.simulate(hw.protocol_circuit(p, theta)))
    assert np.abs(got - expected).max() < 1e-12


def test_swapping_feedback_branches_changes_state():
    p = MinimalParams(1, 1)
    theta = mq.optimal_theta(p)
    good = hw.prep_circuit(p).add("H", 0).extend(
        hw.defer_measurement(hw.bob_rotation(1, theta), hw.bob_rotation(-1, theta)))
    bad = hw.prep_circuit(p).add("H", 0).extend(
        hw.defer_measurement(hw.bob_rotation(-1, theta), hw.bob_rotation(1, theta)))
    assert np.abs(hw.simulate(good) - hw.simulate(bad)).max() > 1e-3


def test_h_b_estimator_on_product_state():
    p = MinimalParams(1, 0.5)
    vals = hw.estimator_values("H_B", p)
    assert vals["00"] == pytest.approx(p.h + mq.build_model(p).f)


def test_unknown_observable_rejected():
    with pytest.raises(ValidationError):
        hw.measurement_circuit("X_X", MinimalParams(1, 1))


@pytest.mark.parametrize("hk", list(TABLE))
def test_exact_table_reproduction(hk):
    led = hw.table_reproduction(MinimalParams(*hk))
    assert np.allclose(led.as_tuple(), TABLE[hk], atol=1e-4)
    assert abs(led.e_vab) > abs(led.e_hb)


@pytest.mark.parametrize("hk", GRID4)
def test_exact_circuits_match_density_matrix(hk):
    p = MinimalParams(*hk)
    assert np.allclose(hw.table_reproduction(p).as_tuple(), mq.run_protocol(p).as_tuple(), atol=1e-12)


def test_shot_estimates_within_error_bars():
    p = MinimalParams(1, 1)
    for row in hw.estimate_table(p, shots=200_000, seed=11):
        assert abs(row.shot_estimate - row.exact) < 5 * row.std_err + 1e-12


def test_standard_error_scales_as_inverse_sqrt_shots():
    p = MinimalParams(1, 0.5)
    se = {n: {r.quantity: r.std_err for r in hw.estimate_table(p, shots=n, seed=2)} for n in (10_000, 160_000)}
    assert se[10_000]["E_UB"] / se[160_000]["E_UB"] == pytest.approx(4.0, rel=0.05)


def test_linear_mitigation_is_unbiased():
    # the inverse-transpose weights make the expected mitigated value equal the ideal one
    p = MinimalParams(1, 1)
    cm = hw.ConfusionMatrix.symmetric_flip(0.03)
    keys = ["00", "01", "10", "11"]
    for name in ("H_B", "V_AB"):
        vals = hw.estimator_values(name, p)
        ideal = hw.output_distribution(hw.measurement_circuit(name, p))
        noisy = cm.matrix.T @ np.array([ideal[k] for k in keys])
        g = hw._inverse_transpose(cm).T @ np.array([vals[k] for k in keys])
        assert noisy @ g == pytest.approx(sum(ideal[k] * vals[k] for k in keys), abs=1e-12)


def test_mitigated_table_recovers_sign():
    p = MinimalParams(1, 1)
    rows = {r.quantity: r for r in hw.estimate_table(p, shots=200_000, seed=4, noise=0.03, mitigate_readout=True)}
    e = rows["E_UB"]
    assert e.mitigated < 0
    assert abs(e.mitigated - e.exact) < 5 * e.mitigated_err
