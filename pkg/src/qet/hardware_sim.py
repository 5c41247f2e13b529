"""Shot-level simulation of the minimal protocol as a two-qubit gate circuit.

Qubit 0 is Alice (A), qubit 1 is Bob (B); bitstrings are written "ab".
Alice's sx measurement is deferred: a Hadamard rotates her outcome into the
computational basis (bit 0 <-> alpha = +1) and Bob's feedback becomes a pair
of anti-controlled / controlled rotations.

RNG contract: every sampling call derives its generator from
``SeedSequence(seed, spawn_key=(stream,))`` on PCG64, so each circuit
execution in a table run gets its own reproducible stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import qcore
from .errors import ValidationError
from .minimal_qet import EnergyLedger, MinimalParams, build_model, optimal_theta
from .qcore import I2

GATE_KINDS = {"RY", "H", "X", "Z", "CNOT", "CTRL_U", "ACTRL_U", "MEASURE_Z"}
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    angle: float | None = None
    unitary: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if self.angle is not None and not np.isfinite(self.angle):
            raise ValidationError("gate angle must be finite")


@dataclass
class Circuit:
    width: int
    gates: list = field(default_factory=list)

    def add(self, kind: str, *qubits, angle=None, unitary=None) -> "Circuit":
        if any(q < 0 or q >= self.width for q in qubits):
            raise ValidationError(f"operand {qubits} out of range for width {self.width}")
        if kind == "MEASURE_Z" and any(g.kind == "MEASURE_Z" and g.qubits == qubits for g in self._terminal()):
            raise ValidationError(f"qubit {qubits} measured twice at the end")
        self.gates.append(Gate(kind, tuple(qubits), angle, unitary))
        return self

    def extend(self, other: "Circuit") -> "Circuit":
        if other.width != self.width:
            raise ValidationError("circuit widths differ")
        self.gates.extend(other.gates)
        return self

    def _terminal(self):
        out = []
        for g in reversed(self.gates):
            if g.kind != "MEASURE_Z":
                break
            out.append(g)
        return out[::-1]

    def measured_qubits(self) -> list:
        """Qubits read out by the terminal block of measurements, in circuit order."""
        return [g.qubits[0] for g in self._terminal()]


@dataclass(frozen=True)
class ShotResult:
    counts: dict
    shots: int
    seed: int


@dataclass(frozen=True)
class ConfusionMatrix:
    """Row-stochastic P(measured | true) over two-qubit bitstrings 00, 01, 10, 11."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4) or np.any(m < 0) or np.any(m > 1) or np.max(np.abs(m.sum(axis=1) - 1)) > 1e-12:
            raise ValidationError("confusion matrix must be 4x4 row-stochastic")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def symmetric_flip(cls, p: float) -> "ConfusionMatrix":
        if not 0 <= p <= 1:
            raise ValidationError("flip probability must lie in [0, 1]")
        one = np.array([[1 - p, p], [p, 1 - p]])
        return cls(np.kron(one, one))


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def _single(width: int, q: int, op) -> np.ndarray:
    ops = [I2] * width
    ops[q] = op
    return qcore.kron(*ops)


def _gate_matrix(g: Gate, width: int) -> np.ndarray:
    if g.kind == "RY":
        c, s = np.cos(g.angle / 2), np.sin(g.angle / 2)
        return _single(width, g.qubits[0], np.array([[c, -s], [s, c]], dtype=complex))
    if g.kind in ("H", "X", "Z"):
        return _single(width, g.qubits[0], qcore.pauli(g.kind) if g.kind != "H" else qcore.H)
    if g.kind in ("CNOT", "CTRL_U", "ACTRL_U"):
        ctrl, tgt = g.qubits
        u = qcore.X if g.kind == "CNOT" else np.asarray(g.unitary, dtype=complex)
        if u.shape != (2, 2) or not qcore.is_unitary(u, 1e-10):
            raise ValidationError("controlled block must be a 2x2 unitary")
        on, off = (P1, P0) if g.kind != "ACTRL_U" else (P0, P1)
        ops_on = [I2] * width
        ops_on[ctrl], ops_on[tgt] = on, u
        return _single(width, ctrl, off) + qcore.kron(*ops_on)
    raise ValidationError(f"gate {g.kind} has no unitary matrix")


def simulate(c: Circuit, rho0=None) -> np.ndarray:
    """Output density matrix before the terminal measurements.

    Non-terminal MEASURE_Z gates act as unrecorded projective measurements
    (dephasing in the computational basis of that qubit).
    """
    dim = 2**c.width
    if rho0 is None:
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1
    else:
        rho = qcore.as_density(rho0).copy()
    n_body = len(c.gates) - len(c._terminal())
    for g in c.gates[:n_body]:
        if g.kind == "MEASURE_Z":
            p0, p1 = _single(c.width, g.qubits[0], P0), _single(c.width, g.qubits[0], P1)
            rho = p0 @ rho @ p0 + p1 @ rho @ p1
        else:
            u = _gate_matrix(g, c.width)
            rho = u @ rho @ u.conj().T
    return rho


def output_distribution(c: Circuit) -> dict:
    """Exact probabilities of the terminal measurement bitstrings."""
    qs = c.measured_qubits()
    if not qs:
        raise ValidationError("circuit has no terminal measurements")
    probs = np.clip(np.diag(simulate(c)).real, 0, None)
    out = {}
    for idx, p in enumerate(probs):
        bits = format(idx, f"0{c.width}b")
        key = "".join(bits[q] for q in qs)
        out[key] = out.get(key, 0.0) + p
    total = sum(out.values())
    keys = ["".join(b) for b in product("01", repeat=len(qs))]
    return {k: float(out.get(k, 0.0) / total) for k in keys}


def run_shots(c: Circuit, shots: int, seed: int, stream: int = 0) -> ShotResult:
    if shots < 1:
        raise ValidationError("shots must be at least 1")
    dist = output_distribution(c)
    keys = list(dist)
    draws = rng_for(seed, stream).multinomial(shots, [dist[k] for k in keys])
    return ShotResult({k: int(n) for k, n in zip(keys, draws)}, shots, seed)


def apply_readout_noise(r: ShotResult, m: ConfusionMatrix, seed: int, stream: int = 1) -> ShotResult:
    """Resample every shot's bitstring from its confusion-matrix row."""
    keys = ["00", "01", "10", "11"]
    if set(r.counts) - set(keys):
        raise ValidationError("readout noise is defined for two-qubit bitstrings")
    rng = rng_for(seed, stream)
    out = np.zeros(4, dtype=np.int64)
    for i, k in enumerate(keys):
        n = r.counts.get(k, 0)
        if n:
            out += rng.multinomial(n, m.matrix[i])
    return ShotResult({k: int(n) for k, n in zip(keys, out)}, r.shots, r.seed)


def _inverse_transpose(m: ConfusionMatrix) -> np.ndarray:
    if np.linalg.cond(m.matrix) >= 1e6:
        raise ValidationError("confusion matrix is singular or ill-conditioned")
    return np.linalg.inv(m.matrix.T)


def mitigate(r: ShotResult, m: ConfusionMatrix) -> dict:
    """Invert the readout confusion, clip negative quasi-probabilities, renormalise."""
    keys = ["00", "01", "10", "11"]
    freq = np.array([r.counts.get(k, 0) for k in keys], dtype=float) / r.shots
    q = np.clip(_inverse_transpose(m) @ freq, 0, None)
    q /= q.sum()
    return dict(zip(keys, q))


# ---------------------------------------------------------------- protocol circuits


def ground_angle(p: MinimalParams) -> float:
    g = p.h / np.sqrt(p.h**2 + p.k**2)
    return -np.arccos(np.sqrt((1 - g) / 2))


def prep_circuit(p: MinimalParams) -> Circuit:
    return Circuit(2).add("RY", 0, angle=2 * ground_angle(p)).add("CNOT", 0, 1)


def defer_measurement(u_plus, u_minus) -> Circuit:
    """Bob's feedback after Alice's rotated measurement: u_minus on A=1, u_plus on A=0."""
    return Circuit(2).add("CTRL_U", 0, 1, unitary=u_minus).add("ACTRL_U", 0, 1, unitary=u_plus)


def bob_rotation(alpha: int, phi: float) -> np.ndarray:
    """RY(2 alpha phi) = cos(phi) - i alpha sin(phi) sy."""
    c, s = np.cos(alpha * phi), np.sin(alpha * phi)
    return np.array([[c, -s], [s, c]], dtype=complex)


def protocol_circuit(p: MinimalParams, phi: float | None = None) -> Circuit:
    phi = optimal_theta(p) if phi is None else phi
    c = prep_circuit(p).add("H", 0)
    return c.extend(defer_measurement(bob_rotation(1, phi), bob_rotation(-1, phi)))


def measurement_circuit(observable: str, p: MinimalParams, phi: float | None = None) -> Circuit:
    """Circuits ending in Z readout of both qubits.

    Estimator contract (z = +1 for bit 0, -1 for bit 1):
      "V_AB":   2k z_a z_b + 2(k^2/h^2) f   (A is already in Alice's sx frame, B gets H)
      "H_B":    h z_b + f
      "E_PA_Z": h z_a + h z_b + 2f          (after Alice's measurement only)
      "E_PA_X": 2k z_a z_b + 2(k^2/h^2) f   (after Alice's measurement only)
    """
    if observable in ("V_AB", "H_B"):
        c = protocol_circuit(p, phi)
        if observable == "V_AB":
            c.add("H", 1)
    elif observable in ("E_PA_Z", "E_PA_X"):
        c = prep_circuit(p).add("H", 0).add("MEASURE_Z", 0)
        c.add("H", 0) if observable == "E_PA_Z" else c.add("H", 1)
    else:
        raise ValidationError(f"unknown observable {observable!r}")
    return c.add("MEASURE_Z", 0).add("MEASURE_Z", 1)


def estimator_values(observable: str, p: MinimalParams) -> dict:
    """Per-shot estimator value for each bitstring "ab"."""
    m = build_model(p)
    h, k, f = p.h, p.k, m.f
    z = {"0": 1.0, "1": -1.0}
    out = {}
    for bits in ("00", "01", "10", "11"):
        za, zb = z[bits[0]], z[bits[1]]
        if observable in ("V_AB", "E_PA_X"):
            out[bits] = 2 * k * za * zb + 2 * k**2 / h**2 * f
        elif observable == "H_B":
            out[bits] = h * zb + f
        elif observable == "E_PA_Z":
            out[bits] = h * za + h * zb + 2 * f
        else:
            raise ValidationError(f"unknown observable {observable!r}")
    return out


@dataclass(frozen=True)
class Estimate:
    quantity: str
    exact: float
    shot_estimate: float | None = None
    std_err: float | None = None
    mitigated: float | None = None
    mitigated_err: float | None = None


def _estimate(values: dict, counts: dict, shots: int, weights=None):
    keys = ["00", "01", "10", "11"]
    g = np.array([values[k] for k in keys])
    if weights is not None:
        g = weights.T @ g  # effective per-measured-outcome values after inverting the confusion
    freq = np.array([counts.get(k, 0) for k in keys], dtype=float) / shots
    mean = float(freq @ g)
    var = float(freq @ (g - mean) ** 2)
    return mean, np.sqrt(var / shots)


CIRCUITS = ("E_PA_Z", "E_PA_X", "H_B", "V_AB")


def estimate_table(p: MinimalParams, shots: int | None = None, seed: int = 0, noise: float | None = None,
                   mitigate_readout: bool = False) -> list:
    """Exact, shot-sampled and optionally mitigated estimates of the energy ledger.

    Each circuit i uses RNG stream 2i for sampling and 2i+1 for readout noise.
    """
    cm = ConfusionMatrix.symmetric_flip(noise) if noise else None
    exact, shot, mit = {}, {}, {}
    for i, name in enumerate(CIRCUITS):
        c = measurement_circuit(name, p)
        vals = estimator_values(name, p)
        dist = output_distribution(c)
        exact[name] = sum(dist[b] * vals[b] for b in dist)
        if shots:
            r = run_shots(c, shots, seed, stream=2 * i)
            if cm is not None:
                r = apply_readout_noise(r, cm, seed, stream=2 * i + 1)
            shot[name] = _estimate(vals, r.counts, shots)
            if cm is not None and mitigate_readout:
                q = mitigate(r, cm)
                # standard error from the linear (unclipped) inverse; clipping is rare at useful shot counts
                _, se = _estimate(vals, r.counts, shots, weights=_inverse_transpose(cm))
                mit[name] = (float(sum(q[b] * vals[b] for b in q)), se)

    def combine(d, *names):
        if not all(n in d for n in names):
            return None, None
        return float(sum(d[n][0] for n in names)), float(np.sqrt(sum(d[n][1] ** 2 for n in names)))

    rows = []
    for q, names in (("E_PA", ("E_PA_Z", "E_PA_X")), ("H_B", ("H_B",)), ("V_AB", ("V_AB",)), ("E_UB", ("H_B", "V_AB"))):
        # H_B and V_AB vanish after Alice's measurement, so their post-protocol sum is Bob's cost
        ex = float(sum(exact[n] for n in names))
        rows.append(Estimate(q, ex, *combine(shot, *names), *combine(mit, *names)))
    return rows


def table_reproduction(p: MinimalParams, shots: int | None = None, seed: int = 0) -> EnergyLedger:
    """Energy ledger from the circuits: exact when ``shots`` is None, otherwise sampled."""
    rows = {r.quantity: r for r in estimate_table(p, shots, seed)}
    pick = (lambda r: r.exact) if shots is None else (lambda r: r.shot_estimate)
    return EnergyLedger(*(pick(rows[q]) for q in ("E_PA", "H_B", "V_AB", "E_UB")))
