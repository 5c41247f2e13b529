"""Strong local passivity of a bipartite (state, Hamiltonian) pair.

A pair is strongly locally passive (SLP) with respect to A when no channel
acting on A alone can lower the energy.  Writing the output energy of a
channel with Choi operator J as Tr[J C] with

    C_{AA'} = Tr_B[rho^{T_A} H_{A'B}],

the identity channel (J0 = d_A |Phi><Phi|) is optimal iff
K = Tr_{A'}[J0 C] is Hermitian and C - K (x) 1_{A'} is positive semidefinite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import qcore
from .errors import ValidationError

PSD_TOL = 1e-9


@dataclass(frozen=True)
class SlpInstance:
    rho: np.ndarray
    hamiltonian: np.ndarray
    dim_a: int = 2
    dim_b: int = 2

    def __post_init__(self):
        d = self.dim_a * self.dim_b
        rho = np.asarray(self.rho, dtype=complex)
        ham = np.asarray(self.hamiltonian, dtype=complex)
        if rho.shape != (d, d) or ham.shape != (d, d):
            raise ValidationError(f"rho and H must be {d}x{d} for dims ({self.dim_a}, {self.dim_b})")
        if self.dim_a * self.dim_a > 16:
            raise ValidationError("C operator dimension exceeds 16")
        if not qcore.is_hermitian(ham):
            raise ValidationError("Hamiltonian is not Hermitian")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "hamiltonian", ham)


@dataclass(frozen=True)
class SlpVerdict:
    is_slp: bool
    c_operator: np.ndarray
    condition_min_eigenvalue: float
    hermiticity_defect: float


def build_c_operator(inst: SlpInstance) -> np.ndarray:
    da, db = inst.dim_a, inst.dim_b
    r = inst.rho.reshape(da, db, da, db)
    h = inst.hamiltonian.reshape(da, db, da, db)
    # rho^{T_A}[(a,b),(c,e)] = rho[(c,b),(a,e)];  C[(a,x),(c,y)] = sum_{b,e} rho^{T_A}[(a,b),(c,e)] H[(x,e),(y,b)]
    c = np.einsum("cbae,xeyb->axcy", r, h)
    return c.reshape(da * da, da * da)


def choi_identity(d: int) -> np.ndarray:
    """d |Phi><Phi| with |Phi> = sum_i |ii>/sqrt(d)."""
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return d * np.outer(phi, phi.conj())


def channel_energy(inst: SlpInstance, choi) -> float:
    """Tr[J C]: energy after the channel with Choi operator J acts on A."""
    return float(np.real(np.trace(np.asarray(choi) @ build_c_operator(inst))))


def slp_check(inst: SlpInstance) -> SlpVerdict:
    da = inst.dim_a
    c = build_c_operator(inst)
    k = qcore.partial_trace(choi_identity(da) @ c, [0], dims=(da, da))
    defect = float(np.max(np.abs(k - k.conj().T)))
    cond = c - np.kron((k + k.conj().T) / 2, np.eye(da))
    cond = (cond + cond.conj().T) / 2
    lam = float(qcore.hermitian_eig(cond, tol=1e-8)[0][0])
    return SlpVerdict(defect < PSD_TOL and lam >= -PSD_TOL, c, lam, defect)


def schmidt_coefficients(psi, dim_a: int) -> np.ndarray:
    """Schmidt coefficients (descending) of a bipartite pure state."""
    psi = np.asarray(psi, dtype=complex)
    return np.linalg.svd(psi.reshape(dim_a, -1), compute_uv=False)


def ground_population_threshold(h_eigensystem, dim_a: int) -> float:
    """Upper bound p* on the ground population above which the state cannot be SLP.

    ``h_eigensystem`` is ``(energies, eigenvectors)`` with ascending energies.
    Energies are measured from the ground level.  q_{i,min}/q_{i,max} are the
    smallest/largest Schmidt coefficients of the i-th eigenvector; the
    maximum runs over every excited eigenvector, degenerate ones included.
    """
    w, v = h_eigensystem
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=complex)
    if len(w) < 2 or w[1] - w[0] < 1e-10:
        raise ValidationError("ground state must be non-degenerate")
    e = w - w[0]
    q0 = schmidt_coefficients(v[:, 0], dim_a)
    if len(q0) < dim_a or q0[-1] <= 1e-10:
        raise ValidationError("ground state must have full Schmidt rank")
    denom = max(e[i] * schmidt_coefficients(v[:, i], dim_a)[0] ** 2 for i in range(1, len(w)))
    return float(1 / (1 + e[1] * q0[-1] ** 2 / denom))


def _random_channel(d: int, rng: np.random.Generator, n_kraus: int) -> list:
    if n_kraus == 1:
        return [qcore.haar_unitary(d, rng)]
    g = rng.standard_normal((n_kraus * d, d)) + 1j * rng.standard_normal((n_kraus * d, d))
    q, _ = np.linalg.qr(g)  # isometry d -> n_kraus*d
    return [q[i * d:(i + 1) * d] for i in range(n_kraus)]


def _isometry(params: np.ndarray, d: int, n_kraus: int) -> np.ndarray:
    g = params[: n_kraus * d * d] + 1j * params[n_kraus * d * d:]
    g = g.reshape(n_kraus * d, d)
    w, v = np.linalg.eigh(g.conj().T @ g)
    return g @ (v / np.sqrt(np.maximum(w, 1e-300))) @ v.conj().T  # polar factor


def _gain(inst: SlpInstance, kraus, e0: float) -> float:
    eye_b = np.eye(inst.dim_b)
    out = sum(np.kron(kk, eye_b) @ inst.rho @ np.kron(kk, eye_b).conj().T for kk in kraus)
    return e0 - float(np.real(np.trace(inst.hamiltonian @ out)))


def brute_force_extraction_oracle(inst: SlpInstance, trials: int, seed: int, refine: int = 2) -> float:
    """Largest energy drop Tr(H rho) - Tr(H Phi_A(rho)) over local channels on A.

    ``trials`` channels are sampled (even trials: Haar unitaries, odd trials:
    two-Kraus channels from QR-orthonormalised Gaussian matrices), trial i
    drawing from seed stream i.  Gains for energy-diagonal states are second
    order around the identity channel and are easily missed by sampling, so
    the ``refine`` best samples plus near-identity starts are then polished
    by local optimisation over four-Kraus Stinespring isometries.
    """
    if trials <= 0:
        return 0.0
    da = inst.dim_a
    e0 = float(np.real(np.trace(inst.hamiltonian @ inst.rho)))
    samples = []
    for i in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        kraus = _random_channel(da, rng, 1 if i % 2 == 0 else 2)
        samples.append((_gain(inst, kraus, e0), i, kraus))
    best = max(g for g, _, _ in samples)
    if refine <= 0:
        return best

    n_k = da * da
    half = n_k * da * da

    def to_params(kraus):
        g = np.zeros((n_k * da, da), dtype=complex)
        for j, kk in enumerate(kraus):
            g[j * da:(j + 1) * da] = kk
        return np.concatenate([g.real.ravel(), g.imag.ravel()])

    def neg_gain(x):
        v = _isometry(x, da, n_k)
        return -_gain(inst, [v[j * da:(j + 1) * da] for j in range(n_k)], e0)

    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trials,)))
    starts = [to_params(k) for _, _, k in sorted(samples, key=lambda s: (-s[0], s[1]))[:refine]]
    ident = to_params([np.eye(da)])
    starts += [ident + 0.05 * rng.standard_normal(2 * half) for _ in range(refine)]
    for x0 in starts:
        res = minimize(neg_gain, x0, method="BFGS", options={"gtol": 1e-9, "maxiter": 300})
        best = max(best, -float(res.fun))
    return best


def random_instance(seed: int, dim_a: int = 2, dim_b: int = 2) -> SlpInstance:
    """Random Hermitian H with a state diagonal in its eigenbasis and populations sorted descending.

    Sorting puts the largest weight on the ground level, so both passive and
    non-passive-with-feedback cases occur.
    """
    rng = np.random.default_rng(seed)
    d = dim_a * dim_b
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (h + h.conj().T) / 2
    _, v = np.linalg.eigh(h)
    pops = np.sort(rng.dirichlet(np.ones(d)))[::-1]
    return SlpInstance((v * pops) @ v.conj().T, h, dim_a, dim_b)
