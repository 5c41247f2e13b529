"""Fully unitary energy teleportation (quantum communication through an ancilla).

Model: H_nu = -h_nu sz_nu + h_nu f3 for nu in {A, B},
       V = 2k sx_A sx_B + 4k^2 f3/(h_A + h_B),
       f3 = (4k^2/(h_A + h_B)^2 + 1)^(-1/2),
with ground state (F+|00> - F-|11>)/sqrt(2), F+-^2 = 1 +- f3, and zero ground energy.

Three-qubit operators use the global order A (x) An (x) B.  The ancilla
measurement unitary is written on An (x) A and Bob's NMR unitary on B (x) An;
both are permuted into the global order before use.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qcore
from .errors import ValidationError
from .qcore import I2, X, Z, kron

# positions in the global order
A, AN, B = 0, 1, 2


@dataclass(frozen=True)
class UnitaryParams:
    h_a: float
    h_b: float
    k: float

    def __post_init__(self):
        vals = (self.h_a, self.h_b, self.k)
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise ValidationError(f"h_a, h_b, k must be positive, got {vals}")


@dataclass(frozen=True)
class UnitaryModel:
    params: UnitaryParams
    f3: float
    f_plus: float
    f_minus: float
    h_a: np.ndarray
    h_b: np.ndarray
    v_ab: np.ndarray
    h_total: np.ndarray
    ground: np.ndarray


@dataclass(frozen=True)
class TimescaleBudget:
    j_couplings: dict
    t_an_a: float
    t_an_b: float
    t_pulse: float
    t_total: float
    t_ab: float

    @property
    def valid(self) -> bool:
        return self.t_total < self.t_ab


def build_unitary_model(p: UnitaryParams) -> UnitaryModel:
    ha, hb, k = p.h_a, p.h_b, p.k
    s = ha + hb
    f3 = (4 * k**2 / s**2 + 1) ** -0.5
    f_plus, f_minus = np.sqrt(1 + f3), np.sqrt(1 - f3)
    h_a = -ha * kron(Z, I2) + ha * f3 * np.eye(4)
    h_b = -hb * kron(I2, Z) + hb * f3 * np.eye(4)
    v_ab = 2 * k * kron(X, X) + 4 * k**2 * f3 / s * np.eye(4)
    ground = (f_plus * qcore.ket("00") - f_minus * qcore.ket("11")) / np.sqrt(2)
    return UnitaryModel(p, f3, f_plus, f_minus, h_a, h_b, v_ab, h_a + h_b + v_ab, ground)


def embed_ab(op) -> np.ndarray:
    """Lift an operator on A (x) B to A (x) An (x) B."""
    return qcore.permute_qubits(kron(op, I2), [0, 2, 1])


def embed_an_a(op) -> np.ndarray:
    """Lift an operator written on An (x) A to the global order."""
    return qcore.permute_qubits(kron(op, I2), [1, 0, 2])


def embed_b_an(op) -> np.ndarray:
    """Lift an operator written on B (x) An to the global order."""
    return qcore.permute_qubits(kron(I2, op), [0, 2, 1])


def ancilla_unitary() -> np.ndarray:
    """Alice-ancilla coupling on An (x) A mapping the computational basis to Bell states."""
    return np.array(
        [[1, 0, 0, 1], [0, 1, 1, 0], [0, -1, 1, 0], [-1, 0, 0, 1]], dtype=complex
    ) / np.sqrt(2)


def _cnot_first_controls() -> np.ndarray:
    return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def gate_sequence(include_z: bool = True) -> np.ndarray:
    """(Z (x) 1) CNOT (H (x) 1) CNOT on An (x) A with the ancilla as control."""
    cnot = _cnot_first_controls()
    u = cnot @ kron(qcore.H, I2) @ cnot
    if include_z:
        u = kron(Z, I2) @ u
    return u


def gate_decomposition_check(include_z: bool = True) -> float:
    return qcore.unitary_distance(gate_sequence(include_z), ancilla_unitary())


def ancilla_record(alpha: int) -> np.ndarray:
    """Ancilla state that records Alice's sx outcome alpha after ancilla_unitary.

    With the ancilla starting in |0>, the coupling sends |0>|+> to |->|+> and
    |0>|-> to |+>|->, so the record lives in the ancilla's sx basis.
    """
    if alpha not in (1, -1):
        raise ValidationError(f"alpha must be +1 or -1, got {alpha!r}")
    return np.array([1, -alpha], dtype=complex) / np.sqrt(2)


def conditional_extraction(u_plus, u_minus) -> np.ndarray:
    """Bob's controlled unitary on B (x) An: apply u_plus (u_minus) when the ancilla records +1 (-1).

    Returned in the global order A (x) An (x) B.
    """
    blocks = []
    for u in (u_plus, u_minus):
        u = np.asarray(u, dtype=complex)
        if u.shape != (2, 2) or not qcore.is_unitary(u, 1e-10):
            raise ValidationError("conditional blocks must be 2x2 unitaries")
        blocks.append(u)
    op = sum(kron(u, qcore.dm(ancilla_record(a))) for u, a in zip(blocks, (1, -1)))
    return embed_b_an(op)


def measured_state(m: UnitaryModel) -> np.ndarray:
    """|g> (x) |0_An> after the ancilla measurement unitary (global order)."""
    psi = qcore.permute_qubits(kron(m.ground, qcore.ket("0")), [0, 2, 1])
    return embed_an_a(ancilla_unitary()) @ psi


def loqc_state(m: UnitaryModel, bob_op) -> np.ndarray:
    """Three-qubit state after the full circuit; bob_op already in global order."""
    return bob_op @ measured_state(m)


def loqc_bob_marginal(m: UnitaryModel, u_plus, u_minus) -> np.ndarray:
    return qcore.partial_trace(loqc_state(m, conditional_extraction(u_plus, u_minus)), [B])


def locc_bob_marginal(m: UnitaryModel, u_plus, u_minus) -> np.ndarray:
    """B marginal of the measure-and-feed-forward ensemble on the same ground state."""
    g = qcore.dm(m.ground)
    rho = np.zeros((4, 4), dtype=complex)
    for a, u in ((1, u_plus), (-1, u_minus)):
        k_op = kron(I2, u) @ kron((I2 + a * X) / 2, I2)
        rho += k_op @ g @ k_op.conj().T
    return qcore.partial_trace(rho, [1])


def max_extraction_bound(p: UnitaryParams) -> float:
    ha, hb, k = p.h_a, p.h_b, p.k
    return np.sqrt(hb**2 + 4 * k**2) - (hb * (ha + hb) + 4 * k**2) / np.sqrt((ha + hb) ** 2 + 4 * k**2)


def alice_energy(p: UnitaryParams) -> float:
    return p.h_a / np.sqrt(1 + 4 * p.k**2 / (p.h_a + p.h_b) ** 2)


def nmr_extraction_unitaries(p: UnitaryParams) -> tuple[np.ndarray, np.ndarray]:
    """(U_rot, U_diag) on B (x) An; Bob applies U_rot @ U_diag."""
    m = build_unitary_model(p)
    r = p.h_b / np.sqrt(p.h_b**2 + 4 * p.k**2)
    f2p, f2m = np.sqrt(1 + r), np.sqrt(1 - r)
    fp, fm = m.f_plus, m.f_minus
    u_rot = np.array(
        [[f2p, f2m, 0, 0], [0, 0, -f2p, f2m], [0, 0, f2m, f2p], [-f2m, f2p, 0, 0]], dtype=complex
    ) / np.sqrt(2)
    u_diag = np.array(
        [[0, fp, fm, 0], [fm, 0, 0, -fp], [fp, 0, 0, fm], [0, -fm, fp, 0]], dtype=complex
    ) / np.sqrt(2)
    return u_rot, u_diag


def nmr_blocks(p: UnitaryParams) -> tuple[np.ndarray, np.ndarray]:
    """Conditional blocks (u_plus, u_minus) read off from U_rot @ U_diag.

    In the ancilla sx basis the product is block diagonal up to a flip of the
    ancilla record, which is irrelevant once the ancilla is discarded.
    """
    u_rot, u_diag = nmr_extraction_unitaries(p)
    hx = kron(I2, qcore.H)
    wx = hx @ u_rot @ u_diag @ hx
    blocks = {}
    for n in (0, 1):  # ancilla sx-basis index: 0 -> |+>, 1 -> |->
        u = np.empty((2, 2), dtype=complex)
        for b in (0, 1):
            for bp in (0, 1):
                u[bp, b] = wx[2 * bp + (n ^ 1), 2 * b + n]
        blocks[n] = u
    # |-> records alpha = +1, |+> records alpha = -1
    return blocks[1], blocks[0]


def extracted_energy(m: UnitaryModel, bob_op) -> float:
    """Change in <H_B + V_AB> caused by Bob's operation (negative means extraction)."""
    obs = embed_ab(m.h_b + m.v_ab)
    before = measured_state(m)
    after = bob_op @ before
    return qcore.expect(obs, after) - qcore.expect(obs, before)


def nmr_extraction(p: UnitaryParams) -> float:
    m = build_unitary_model(p)
    u_rot, u_diag = nmr_extraction_unitaries(p)
    return extracted_energy(m, embed_b_an(u_rot @ u_diag))


def ry(theta: float) -> np.ndarray:
    """exp(-i theta sy) = [[cos, -sin], [sin, cos]]."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def prep_angle(p: UnitaryParams) -> float:
    """Rotation angle with cos(theta) = F+/sqrt(2), theta in (0, pi/2)."""
    m = build_unitary_model(p)
    return float(np.arccos(m.f_plus / np.sqrt(2)))


def ground_prep_unitary(p: UnitaryParams) -> np.ndarray:
    """CNOT(A -> B) after a rotation of A, in the global order.

    The rotation is Y(-theta), i.e. cos(theta)|0> - sin(theta)|1>, which gives
    the ground state's relative minus sign; Y(+theta) would prepare the
    orthogonal-phase state (F+|00> + F-|11>)/sqrt(2).
    """
    theta = prep_angle(p)
    rot = kron(ry(-theta), I2, I2)
    cnot = np.eye(8, dtype=complex)
    for a in (1,):
        for n in (0, 1):
            i0 = (a << 2) | (n << 1)
            cnot[[i0, i0 | 1]] = cnot[[i0 | 1, i0]]
    return cnot @ rot


def timescale_budget(j_an_a: float, j_an_b: float, t_pulse: float, j_ab: float) -> TimescaleBudget:
    if min(j_an_a, j_an_b, j_ab) <= 0 or t_pulse < 0:
        raise ValidationError("couplings must be positive and t_pulse non-negative")
    t_an_a = 1 / j_an_a
    t_an_b = 1 / j_an_b
    t_total = t_an_a + t_an_b + t_pulse
    return TimescaleBudget(
        {"An-A": j_an_a, "An-B": j_an_b, "A-B": j_ab}, t_an_a, t_an_b, t_pulse, t_total, 1 / j_ab
    )
