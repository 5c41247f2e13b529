"""Dense linear algebra and state utilities for systems of up to three qubits.

Conventions: sigma_z|0> = |0>, sigma_z|1> = -|1>.  Multi-qubit operators are
built with ``kron`` in the global order A (x) An (x) B; two-qubit scenarios
drop An.  States are plain numpy arrays: 1-D for state vectors, 2-D for
density operators.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import NumericalError, ValidationError

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

HERM_TOL = 1e-10


def pauli(p) -> np.ndarray:
    """Return a Pauli matrix given its letter or the matrix itself."""
    if isinstance(p, str):
        try:
            return PAULI[p.upper()]
        except KeyError:
            raise ValidationError(f"unknown Pauli label {p!r}") from None
    return np.asarray(p, dtype=complex)


def kron(*ops) -> np.ndarray:
    """Tensor product of any number of operators or vectors, left to right."""
    if not ops:
        raise ValidationError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def ket(bits: str) -> np.ndarray:
    """Computational basis vector, e.g. ket('01') = |0>|1>."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValidationError("zero vector cannot be normalized")
    return psi / n


def is_hermitian(m, tol: float = HERM_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def is_unitary(u, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol


def check_density(rho, tol: float = 1e-12) -> np.ndarray:
    """Validate a density operator (Hermitian, unit trace, PSD) and return it."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho, tol):
        raise ValidationError("density operator is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValidationError(f"density operator trace {np.trace(rho).real} != 1")
    if hermitian_eig(rho)[0][0] < -1e-10:
        raise ValidationError("density operator has a negative eigenvalue")
    return rho


def as_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return dm(state) if state.ndim == 1 else state


def _qubit_dims(n: int) -> tuple[int, ...]:
    k = int(round(np.log2(n)))
    if 2**k != n:
        raise ValidationError(f"dimension {n} is not a qubit register")
    return (2,) * k


def partial_trace(rho, keep, dims=None) -> np.ndarray:
    """Trace out every subsystem whose index is not in ``keep``.

    ``dims`` lists the subsystem dimensions in kron order; it defaults to
    qubits.  Kept subsystems stay in their original relative order.
    """
    rho = as_density(rho)
    dims = tuple(dims) if dims is not None else _qubit_dims(rho.shape[0])
    if int(np.prod(dims)) != rho.shape[0] or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"operator of shape {rho.shape} does not match dims {dims}")
    keep = sorted(set([keep] if isinstance(keep, int) else keep))
    if any(i < 0 or i >= len(dims) for i in keep):
        raise ValidationError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = rho.reshape(dims + dims)
    # einsum labels: row indices 0..n-1, column indices n..2n-1; traced ones share a label
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = [letters[i] for i in range(n)]
    cols = [letters[i] if i not in keep else letters[n + i] for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.einsum("".join(rows) + "".join(cols) + "->" + out, t).reshape(d, d)


def expect(obs, state) -> float:
    """Tr(rho obs) for a density operator or <psi|obs|psi> for a vector."""
    obs = np.asarray(obs, dtype=complex)
    if not is_hermitian(obs):
        raise ValidationError("observable is not Hermitian")
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        val = np.vdot(state, obs @ state)
    else:
        val = np.trace(state @ obs)
    if abs(val.imag) > 1e-10:
        raise NumericalError(f"expectation has imaginary part {val.imag:g}")
    return float(val.real)


def hermitian_eig(m, tol: float = HERM_TOL, max_sweeps: int = 100):
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(w, v)`` with ascending eigenvalues ``w`` and orthonormal
    eigenvectors in the columns of ``v``.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not is_hermitian(a, tol):
        raise ValidationError("hermitian_eig called on a non-Hermitian matrix")
    n = a.shape[0]
    if n > 16:
        raise ValidationError("hermitian_eig supports dimensions up to 16")
    a = (a + a.conj().T) / 2
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                ab = abs(b)
                if ab <= 1e-300:
                    continue
                phase = b / ab
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2 * ab)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1 + tau * tau))
                c = 1 / np.sqrt(1 + t * t)
                s = t * c
                # rotation = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                r = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ r
                a[idx, :] = r.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0
                v[:, idx] = v[:, idx] @ r
    else:
        raise NumericalError("Jacobi eigensolver did not converge")
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def func_hermitian(m, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    w, v = hermitian_eig(m)
    return (v * fn(w)) @ v.conj().T


def evolution(hamiltonian, t: float) -> np.ndarray:
    """exp(-i H t)."""
    return func_hermitian(hamiltonian, lambda w: np.exp(-1j * w * t))


def matexp_pauli_pair(theta: float, p, q) -> np.ndarray:
    """exp(i theta p (x) q) = cos(theta) I + i sin(theta) p (x) q."""
    pq = kron(pauli(p), pauli(q))
    return np.cos(theta) * np.eye(4) + 1j * np.sin(theta) * pq


def ground_state(hamiltonian) -> tuple[float, np.ndarray]:
    w, v = hermitian_eig(hamiltonian)
    return float(w[0]), v[:, 0]


def phase_align(u) -> np.ndarray:
    """Remove the global phase fixed by the largest-magnitude entry."""
    u = np.asarray(u, dtype=complex)
    flat = u.ravel()
    z = flat[np.argmax(np.abs(flat))]
    return u * (abs(z) / z)


def unitary_distance(u, v) -> float:
    """Max entrywise distance between two operators after aligning global phases."""
    return float(np.max(np.abs(phase_align(u) - phase_align(v))))


def trace_distance(rho, sigma) -> float:
    w, _ = hermitian_eig(as_density(rho) - as_density(sigma))
    return float(0.5 * np.sum(np.abs(w)))


def purity(rho) -> float:
    rho = as_density(rho)
    return float(np.real(np.trace(rho @ rho)))


def fidelity_pure(psi, phi) -> float:
    return float(abs(np.vdot(psi, phi)) ** 2)


def permute_qubits(op, perm) -> np.ndarray:
    """Reorder the qubits of an operator or state: new position i holds old qubit perm[i]."""
    op = np.asarray(op, dtype=complex)
    n = len(perm)
    if op.ndim == 1:
        return op.reshape((2,) * n).transpose(perm).reshape(-1)
    t = op.reshape((2,) * (2 * n))
    return t.transpose(list(perm) + [n + p for p in perm]).reshape(2**n, 2**n)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
