"""Energy-teleportation-based algorithmic cooling of qubit B.

Three flavours are provided:

* the minimal protocol with Alice's projective measurement replaced by a
  generalised sx measurement (POVM) and Bob's optimal rotation;
* the ancilla-mediated protocol with U_A = exp(i sy_A sy_An) and
  U_B = exp(i sx_B sz_An) acting on a thermal input, plus a numerical
  optimisation of general two-qubit probe unitaries;
* the partner pairing algorithm (PPA) as a heat-bath cooling baseline.

Three-qubit states use the order A (x) An (x) B.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import qcore
from .errors import NumericalError, ValidationError
from .minimal_qet import MinimalParams, build_model
from .qcore import I2, X, Y, Z, kron

TOL = 1e-12


@dataclass(frozen=True)
class PovmParams:
    """Outcome-wise coefficients, index 0 for alpha = +1 and index 1 for alpha = -1."""

    m: tuple
    l: tuple
    gamma: tuple = (0.0, 0.0)
    delta: tuple = (0.0, 0.0)

    def __post_init__(self):
        m, l, g = map(np.asarray, (self.m, self.l, self.gamma))
        if abs(np.sum(m**2 + l**2) - 1) > TOL:
            raise ValidationError("POVM coefficients violate sum(m^2 + l^2) = 1")
        if abs(np.sum(m * l * np.cos(g))) > TOL:
            raise ValidationError("POVM coefficients violate sum(m l cos gamma) = 0")

    @classmethod
    def projective(cls) -> "PovmParams":
        return cls((0.5, 0.5), (0.5, -0.5))

    @classmethod
    def symmetric(cls, eta: float) -> "PovmParams":
        """m = cos(eta)/sqrt2, l = +-sin(eta)/sqrt2; eta = pi/4 is projective, eta = 0 is no measurement."""
        m, l = np.cos(eta) / np.sqrt(2), np.sin(eta) / np.sqrt(2)
        return cls((m, m), (l, -l))

    def index(self, alpha: int) -> int:
        if alpha not in (1, -1):
            raise ValidationError(f"alpha must be +1 or -1, got {alpha!r}")
        return 0 if alpha == 1 else 1


@dataclass(frozen=True)
class ProbeHamiltonians:
    j: np.ndarray  # coefficients of s_i^A s_j^An
    k_mat: np.ndarray  # coefficients of s_i^B s_j^An
    h_an: float = 1.0


@dataclass(frozen=True)
class PurityReport:
    p_initial: float
    p_final: float


# ---------------------------------------------------------------- POVM protocol


def povm_operators(p: PovmParams) -> list:
    """[M(+1), M(-1)] on A (x) B."""
    ops = []
    for a in (1, -1):
        i = p.index(a)
        m_a = np.exp(1j * p.delta[i]) * (p.m[i] * I2 + np.exp(1j * p.gamma[i]) * p.l[i] * X)
        ops.append(kron(m_a, I2))
    completeness = sum(o.conj().T @ o for o in ops)
    if np.max(np.abs(completeness - np.eye(4))) > TOL:
        raise ValidationError("POVM operators are not complete")
    return ops


def optimal_omega(p: MinimalParams, povm: PovmParams, alpha: int) -> float:
    i = povm.index(alpha)
    pa = povm.m[i] ** 2 + povm.l[i] ** 2
    if pa <= 0:
        raise ValidationError(f"outcome {alpha} has zero probability")
    qa = 2 * povm.l[i] * povm.m[i] * np.cos(povm.gamma[i])
    return 0.5 * np.arctan2(-p.h * p.k * qa, (p.h**2 + 2 * p.k**2) * pa)


def bob_rotation(omega: float) -> np.ndarray:
    """cos(Omega) + i sin(Omega) sy on B."""
    return kron(I2, np.cos(omega) * I2 + 1j * np.sin(omega) * Y)


def povm_final_state(rho, povm: PovmParams, omegas) -> np.ndarray:
    """sum_alpha U_B(alpha) M(alpha) rho M(alpha)^dag U_B(alpha)^dag; omegas ordered (+1, -1)."""
    rho = qcore.as_density(rho)
    out = np.zeros((4, 4), dtype=complex)
    for mop, om in zip(povm_operators(povm), omegas):
        k_op = bob_rotation(om) @ mop
        out += k_op @ rho @ k_op.conj().T
    return out


def initial_purity(p: MinimalParams) -> float:
    return (2 * p.h**2 + p.k**2) / (2 * (p.h**2 + p.k**2))


def initial_purity_numeric(p: MinimalParams) -> float:
    return qcore.purity(qcore.partial_trace(build_model(p).ground, [1]))


def final_purity_povm(p: MinimalParams, povm: PovmParams) -> float:
    """Closed-form final purity of B for gamma = 0.

    The closed form is written in l_1, m_1 and Omega_0 - Omega_1; matching it
    against simulation fixes (l_1, m_1) <- outcome +1, Omega_1 <- Omega(+1)
    and Omega_0 <- Omega(-1).
    """
    if any(abs(g) > TOL for g in povm.gamma):
        raise ValidationError("closed form requires gamma = 0")
    h, k = p.h, p.k
    l1, m1 = povm.l[0], povm.m[0]
    d = optimal_omega(p, povm, -1) - optimal_omega(p, povm, 1)
    s = l1**2 + m1**2
    return 2 / (h**2 + k**2) * (
        h**2 / 2 + k**2 / 4 - h * k * l1 * m1 * np.sin(2 * d)
        + (4 * k**2 * l1**2 * m1**2 + h**2 * (s - 1) * s) * np.sin(d) ** 2
    )


def simulate_povm_purity(p: MinimalParams, povm: PovmParams, rho=None, omegas=None) -> float:
    """Tr(rho_B^2) after the POVM protocol on rho (default: the ground state)."""
    if rho is None:
        rho = build_model(p).ground
    if omegas is None:
        omegas = (optimal_omega(p, povm, 1), optimal_omega(p, povm, -1))
    return qcore.purity(qcore.partial_trace(povm_final_state(rho, povm, omegas), [1]))


def reoptimized_omegas(p: MinimalParams, povm: PovmParams, rho) -> tuple:
    """Bob's angles minimising <H_B + V_AB> for a general input state.

    Each branch's energy is a + b cos(2 Omega) + c sin(2 Omega), so three
    evaluations fix the sinusoid and the minimiser follows in closed form.
    """
    m = build_model(p)
    obs = m.h_b + m.v_ab
    rho = qcore.as_density(rho)
    out = []
    for mop in povm_operators(povm):
        branch = mop @ rho @ mop.conj().T

        def e(om):
            u = bob_rotation(om)
            return np.real(np.trace(obs @ u @ branch @ u.conj().T))

        e0, e1, e2 = e(0.0), e(np.pi / 4), e(np.pi / 2)
        a = (e0 + e2) / 2
        b, c = e0 - a, e1 - a
        out.append(0.5 * np.arctan2(-c, -b))
    return tuple(out)


def thermal_state(hamiltonian, beta: float) -> np.ndarray:
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    w, v = qcore.hermitian_eig(hamiltonian)
    pops = np.exp(-beta * (w - w[0]))
    pops /= pops.sum()
    return (v * pops) @ v.conj().T


def thermal_povm_report(p: MinimalParams, beta: float, povm: PovmParams, reoptimize: bool = False) -> PurityReport:
    """Run the POVM protocol on the Gibbs state of the minimal model.

    By default Bob uses the ground-state-optimal angles; ``reoptimize`` picks
    the energy-optimal angles for the thermal input instead.
    """
    rho = thermal_state(build_model(p).h_total, beta)
    omegas = reoptimized_omegas(p, povm, rho) if reoptimize else None
    p0 = qcore.purity(qcore.partial_trace(rho, [1]))
    return PurityReport(p0, simulate_povm_purity(p, povm, rho, omegas))


def random_povm(rng: np.random.Generator, with_phases: bool = True) -> PovmParams:
    """Random valid POVM with gamma = 0 (rejection sampling on the two constraints)."""
    while True:
        p_plus = rng.uniform(0.05, 0.95)
        phi = rng.uniform(0, 2 * np.pi)
        m1, l1 = np.sqrt(p_plus) * np.cos(phi), np.sqrt(p_plus) * np.sin(phi)
        r, prod = 1 - p_plus, -m1 * l1
        if r < 2 * abs(prod):
            continue
        s, d = np.sqrt(r + 2 * prod), np.sqrt(r - 2 * prod)  # m + l and m - l
        if rng.random() < 0.5:
            d = -d
        m2, l2 = (s + d) / 2, (s - d) / 2
        delta = tuple(rng.uniform(0, 2 * np.pi, 2)) if with_phases else (0.0, 0.0)
        return PovmParams((m1, m2), (l1, l2), (0.0, 0.0), delta)


# ---------------------------------------------------------------- ancilla protocol


def ab_hamiltonian(h_a: float, h_b: float, k: float) -> np.ndarray:
    """h_A sz_A + h_B sz_B + k sx_A sx_B, the system used by the ancilla protocol."""
    return h_a * kron(Z, I2) + h_b * kron(I2, Z) + k * kron(X, X)


def ancilla_thermal(beta: float, h_an: float) -> np.ndarray:
    return thermal_state(h_an * Z, beta)


def _lift_a_an(u) -> np.ndarray:
    return kron(u, I2)


def _lift_b_an(u) -> np.ndarray:
    """Operator written on B (x) An lifted to A (x) An (x) B."""
    return qcore.permute_qubits(kron(I2, u), [0, 2, 1])


def ancilla_input(h_a, h_b, k, beta, h_an) -> np.ndarray:
    rho_ab = thermal_state(ab_hamiltonian(h_a, h_b, k), beta)
    return qcore.permute_qubits(kron(rho_ab, ancilla_thermal(beta, h_an)), [0, 2, 1])


def run_ancilla_protocol(rho, u_a, u_b) -> np.ndarray:
    """Apply u_a on A (x) An then u_b on B (x) An; returns B's reduced state."""
    u = _lift_b_an(u_b) @ _lift_a_an(u_a)
    return qcore.partial_trace(u @ rho @ u.conj().T, [2])


def simulate_ancilla_purity(h_a, h_b, k, beta, h_an) -> float:
    """Full three-qubit simulation of the fixed ancilla example."""
    rho = ancilla_input(h_a, h_b, k, beta, h_an)
    u_a = qcore.matexp_pauli_pair(1.0, "Y", "Y")
    u_b = qcore.matexp_pauli_pair(1.0, "X", "Z")
    return qcore.purity(run_ancilla_protocol(rho, u_a, u_b))


def _hyperbolics(h_a, h_b, k, beta):
    hp, hm = (h_a + h_b) ** 2 + k**2, (h_a - h_b) ** 2 + k**2
    radicand = 0.5 * (hm**2 + hp**2) - 8 * h_a**2 * h_b**2
    if radicand < 0:
        raise ValidationError("h_r radicand is negative")
    sp_, sm = np.sinh(np.sqrt(hp) * beta), np.sinh(np.sqrt(hm) * beta)
    cp, cm = np.cosh(np.sqrt(hp) * beta), np.cosh(np.sqrt(hm) * beta)
    return hp, hm, np.sqrt(radicand), sp_, sm, cp, cm


def ancilla_protocol_purity(h_a: float, h_b: float, k: float, beta: float, h_an: float) -> PurityReport:
    """Original closed form for the fixed ancilla example, evaluated as written.

    Note: this expression does not agree with direct simulation of the
    protocol it describes; see ``ancilla_purity_exact`` for the expression
    that does.
    """
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    hp, hm, hr, sp_, sm, cp, cm = _hyperbolics(h_a, h_b, k, beta)
    w = k**2 * np.sin(2) ** 4 * np.tanh(beta * h_an) ** 2
    den = 2 * hm * hp * (cm + cp) ** 2
    pf = (
        0.5
        + hm * sp_**2 * ((h_a**2 + h_b**2) + w) / den
        + sm**2 * (hp * ((h_a - h_b) ** 2 + w) + 2 * h_b**2 * hr) / den
        - 2 * hr * sp_ * sm * (h_a**2 + w) / den
    )
    return PurityReport(_ab_initial_purity(h_a, h_b, k, beta), float(pf))


def ancilla_purity_exact(h_a: float, h_b: float, k: float, beta: float, h_an: float) -> PurityReport:
    """Closed form obtained by evolving sigma^B in the Heisenberg picture.

    B's Bloch vector after the two unitaries has components
    r_z = cos(2) D/(C+ + C-) and r_y = sin(4) tanh(beta h_An) D/(2(C+ + C-)),
    with D = S-(h_A - h_B)/sqrt(h-) - S+(h_A + h_B)/sqrt(h+).
    """
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    hp, hm, hr, sp_, sm, cp, cm = _hyperbolics(h_a, h_b, k, beta)
    t = np.tanh(beta * h_an)
    weight = np.cos(2) ** 2 * (1 + np.sin(2) ** 2 * t**2)
    num = sp_**2 * hm * (h_a + h_b) ** 2 + sm**2 * hp * (h_a - h_b) ** 2 - 2 * hr * sp_ * sm * (h_a**2 - h_b**2)
    pf = 0.5 + weight * num / (2 * hp * hm * (cp + cm) ** 2)
    return PurityReport(_ab_initial_purity(h_a, h_b, k, beta), float(pf))


def _ab_initial_purity(h_a, h_b, k, beta) -> float:
    rho = thermal_state(ab_hamiltonian(h_a, h_b, k), beta)
    return qcore.purity(qcore.partial_trace(rho, [1]))


# ---------------------------------------------------------------- probe optimisation

_PAULIS = (X, Y, Z)
_PAIRS = [kron(p, q) for p in _PAULIS for q in _PAULIS]


def probe_unitary(coeffs) -> np.ndarray:
    """exp(i sum_ij c_ij s_i (x) s_j) for a 3x3 real coefficient matrix."""
    h = sum(c * pq for c, pq in zip(np.ravel(coeffs), _PAIRS))
    return expm(1j * h)


def fixed_example_probes(h_an: float = 1.0) -> ProbeHamiltonians:
    j = np.zeros((3, 3))
    j[1, 1] = 1.0  # sy sy
    k_mat = np.zeros((3, 3))
    k_mat[0, 2] = 1.0  # sx_B sz_An
    return ProbeHamiltonians(j, k_mat, h_an)


def probe_purity(probes: ProbeHamiltonians, rho) -> float:
    return qcore.purity(run_ancilla_protocol(rho, probe_unitary(probes.j), probe_unitary(probes.k_mat)))


def optimize_probes(h_a: float, h_b: float, k: float, beta: float, h_an: float = 1.0, restarts: int = 4,
                    seed: int = 0, maxiter: int = 4000) -> tuple:
    """Nelder-Mead maximisation of B's final purity over the 18 probe coefficients.

    Restart 0 starts from the fixed analytic example, later restarts from
    uniform points in [-pi, pi]^18 drawn from seed stream r.  The best result
    wins, ties broken by restart index.
    """
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    rho = ancilla_input(h_a, h_b, k, beta, h_an)
    bounds = [(-np.pi, np.pi)] * 18

    def cost(x):
        return -qcore.purity(run_ancilla_protocol(rho, probe_unitary(x[:9]), probe_unitary(x[9:])))

    fixed = fixed_example_probes(h_an)
    best = (cost(np.concatenate([fixed.j.ravel(), fixed.k_mat.ravel()])),
            -1, np.concatenate([fixed.j.ravel(), fixed.k_mat.ravel()]))
    for r in range(restarts):
        if r == 0:
            x0 = best[2].copy()
        else:
            x0 = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,))).uniform(-np.pi, np.pi, 18)
        res = minimize(cost, x0, method="Nelder-Mead", bounds=bounds,
                       options={"maxiter": maxiter, "maxfev": maxiter, "xatol": 1e-9, "fatol": 1e-13, "adaptive": True})
        if (res.fun, r) < best[:2]:
            best = (float(res.fun), r, res.x)
    x = best[2]
    probes = ProbeHamiltonians(x[:9].reshape(3, 3), x[9:].reshape(3, 3), h_an)
    return probes, PurityReport(_ab_initial_purity(h_a, h_b, k, beta), -best[0])


# ---------------------------------------------------------------- PPA baseline


def _compression_order(n_qubits: int, target: int) -> list:
    """Basis states from most to least favourable for the target qubit.

    With H = h sz the single-qubit ground state is |1>, so states with the
    target bit set come first; within each half states with more set bits
    (lower non-interacting energy) come first.
    """
    def key(idx):
        bits = format(idx, f"0{n_qubits}b")
        return (bits[target] != "1", -bits.count("1"), idx)

    return sorted(range(2**n_qubits), key=key)


def ppa_compress(populations, n_qubits: int, target: int) -> np.ndarray:
    order = _compression_order(n_qubits, target)
    out = np.empty(2**n_qubits)
    out[order] = np.sort(np.asarray(populations, dtype=float))[::-1]
    return out


def bath_state(beta: float, h: float) -> np.ndarray:
    return np.real(np.diag(thermal_state(h * Z, beta)))


def ppa_step(state, n_qubits: int, target_index: int, bath_beta: float, bath_h: float,
             reset_populations=None) -> np.ndarray:
    """One PPA round on the dephased state: optimal population sort, then reset of the other qubits.

    ``reset_populations`` optionally maps a qubit index to the diagonal it is
    reset to; by default every reset qubit goes to the bath's thermal state.
    """
    if n_qubits not in (2, 3):
        raise ValidationError("PPA supports 2 or 3 qubits")
    state = np.asarray(state)
    pops = np.real(np.diag(state)) if state.ndim == 2 else np.asarray(state, dtype=float)
    pops = ppa_compress(pops, n_qubits, target_index)
    t = pops.reshape((2,) * n_qubits)
    target_pops = t.sum(axis=tuple(i for i in range(n_qubits) if i != target_index))
    resets = dict(reset_populations or {})
    factors = [
        target_pops if i == target_index else np.asarray(resets.get(i, bath_state(bath_beta, bath_h)))
        for i in range(n_qubits)
    ]
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return np.diag(out).astype(complex)


def target_purity(state, n_qubits: int, target: int) -> float:
    return qcore.purity(qcore.partial_trace(state, [target], dims=(2,) * n_qubits))


def ppa_fixed_point(state, n_qubits: int, target_index: int, bath_beta: float, bath_h: float,
                    reset_populations=None, max_rounds: int = 100000) -> tuple:
    """Iterate PPA rounds until the target purity changes by less than 1e-12.

    Returns (final state, list of target purities per round).
    """
    state = np.diag(np.real(np.diag(np.asarray(state)))).astype(complex)
    history = [target_purity(state, n_qubits, target_index)]
    for _ in range(max_rounds):
        state = ppa_step(state, n_qubits, target_index, bath_beta, bath_h, reset_populations)
        history.append(target_purity(state, n_qubits, target_index))
        if abs(history[-1] - history[-2]) < 1e-12 and len(history) > 2:
            return state, history
    raise NumericalError("PPA did not reach a fixed point")


def ppa_purity(h_a: float, h_b: float, k: float, beta: float, n_qubits: int = 3, bath_h: float = 1.0) -> PurityReport:
    """PPA fixed point for qubit B of the thermal A-B pair, helped by n_qubits - 1 reset qubits.

    The reset qubits have gap bath_h and are rethermalised at the same beta.
    """
    rho_b = qcore.partial_trace(thermal_state(ab_hamiltonian(h_a, h_b, k), beta), [1])
    bath = np.diag(bath_state(beta, bath_h))
    state = rho_b
    for _ in range(n_qubits - 1):
        state = np.kron(state, bath)
    _, hist = ppa_fixed_point(state, n_qubits, 0, beta, bath_h)
    return PurityReport(hist[0], hist[-1])
