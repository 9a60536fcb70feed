"""Fixed-size (4×4 / 2×2) complex linear algebra used by every measure.

Matrices are plain ``numpy`` arrays indexed over the product basis
|00⟩, |01⟩, |10⟩, |11⟩ (row-major, first qubit most significant).
"""

import logging
from typing import Tuple

import numpy as np
from scipy.linalg import hessenberg
from scipy.special import entr

from .config import get_policy
from .exceptions import BadIndex, NoConvergence, NotHermitian, NotPSD

logger = logging.getLogger(__name__)

LN2 = np.log(2.0)

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (IDENTITY2, SIGMA_X, SIGMA_Y, SIGMA_Z)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


def pauli(n: int) -> np.ndarray:
    """Return σₙ for n ∈ {1, 2, 3} (n = 0 gives the identity)."""
    if n not in (0, 1, 2, 3):
        raise BadIndex(f"Pauli index must be 0..3, got {n}")
    return PAULI[n].copy()


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a⊗b)[2i+k, 2j+l] = a[i, j]·b[k, l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


# Spin-flip operator σ₂⊗σ₂ (antidiagonal −1, 1, 1, −1)
SPIN_FLIP = kron(SIGMA_Y, SIGMA_Y)


def hermiticity_defect(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - dagger(m))))


def hermitian_eig(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Args:
        m: Square complex matrix, Hermitian within the structural tolerance.

    Returns:
        Tuple of (eigenvalues ascending, eigenvectors as columns).

    Raises:
        NotHermitian: If max |m − m†| exceeds the structural tolerance.
    """
    policy = get_policy()
    m = np.asarray(m, dtype=complex)
    defect = hermiticity_defect(m)
    if defect > policy.structural_tol:
        logger.error(f"Matrix is not Hermitian (defect {defect:.3e})")
        raise NotHermitian(f"Matrix is not Hermitian: max |m - m†| = {defect:.3e}")

    symmetric = (m + dagger(m)) / 2
    if policy.eigensolver == "jacobi":
        return jacobi_eigh(symmetric, policy.max_iterations)
    values, vectors = np.linalg.eigh(symmetric)
    return values, vectors


def jacobi_eigh(m: np.ndarray, max_sweeps: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi eigensolver for a small Hermitian matrix.

    Each rotation first removes the phase of the pivot, then applies the real
    symmetric Jacobi rotation that zeroes it.
    """
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(float(np.linalg.norm(a)), 1.0)
    eps = np.finfo(float).eps

    for sweep in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off <= eps * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = abs(a[p, q])
                if b <= eps * eps * scale:
                    continue
                phase = a[p, q] / b
                theta = 0.5 * np.arctan2(2 * b, (a[q, q] - a[p, p]).real)
                c, s = np.cos(theta), np.sin(theta)
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[p, q] = s
                g[q, p] = -s * np.conj(phase)
                g[q, q] = c * np.conj(phase)
                a = dagger(g) @ a @ g
                v = v @ g
    else:
        raise NoConvergence(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    values = np.real(np.diag(a))
    order = np.argsort(values)
    return values[order], v[:, order]


def shifted_qr_eigvals(m: np.ndarray, max_iterations: int = 500) -> np.ndarray:
    """Eigenvalues of a general small matrix by Hessenberg reduction and shifted QR.

    Uses the Wilkinson shift from the trailing 2×2 block, deflating one eigenvalue
    at a time from the bottom; an exceptional shift is taken every tenth step
    without progress.

    Raises:
        NoConvergence: If the iteration cap is reached before full deflation.
    """
    h = hessenberg(np.asarray(m, dtype=complex))
    eps = np.finfo(float).eps
    scale = max(float(np.max(np.abs(h))), np.finfo(float).tiny)
    eigenvalues = []
    iterations = 0
    stalled = 0

    n = h.shape[0]
    while n > 0:
        if n == 1:
            eigenvalues.append(h[0, 0])
            break
        sub = abs(h[n - 1, n - 2])
        if sub <= eps * max(abs(h[n - 1, n - 1]) + abs(h[n - 2, n - 2]), eps * scale):
            eigenvalues.append(h[n - 1, n - 1])
            n -= 1
            h = h[:n, :n]
            stalled = 0
            continue
        if iterations >= max_iterations:
            logger.error(f"Shifted QR stalled after {iterations} iterations")
            raise NoConvergence(f"Shifted QR did not converge in {max_iterations} iterations")

        a, b, c, d = h[n - 2, n - 2], h[n - 2, n - 1], h[n - 1, n - 2], h[n - 1, n - 1]
        half_trace = (a + d) / 2
        disc = np.sqrt(half_trace**2 - (a * d - b * c))
        mu1, mu2 = half_trace + disc, half_trace - disc
        shift = mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2
        if stalled and stalled % 10 == 0:
            shift = shift + sub

        identity = np.eye(n, dtype=complex)
        q, r = np.linalg.qr(h - shift * identity)
        h = r @ q + shift * identity
        iterations += 1
        stalled += 1

    return np.array(eigenvalues[::-1], dtype=complex)


def general_eig4(m: np.ndarray) -> np.ndarray:
    """Eigenvalues (complex) of an arbitrary square matrix.

    Raises:
        NoConvergence: If the iterative solver hits the configured cap.
    """
    policy = get_policy()
    m = np.asarray(m, dtype=complex)
    if policy.eigensolver == "jacobi":
        return shifted_qr_eigvals(m, policy.max_iterations)
    try:
        return np.linalg.eigvals(m)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"LAPACK eigenvalue routine failed: {e}")


def _two_qubit_tensor(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"Expected a 4x4 matrix, got shape {m.shape}")
    return m.reshape(2, 2, 2, 2)


def partial_transpose(m: np.ndarray, subsystem: int = 2) -> np.ndarray:
    """Transpose the indices of qubit 1 or qubit 2.

    Raises:
        BadIndex: If subsystem is not 1 or 2.
    """
    if subsystem == 1:
        axes = (2, 1, 0, 3)
    elif subsystem == 2:
        axes = (0, 3, 2, 1)
    else:
        raise BadIndex(f"Subsystem must be 1 or 2, got {subsystem}")
    return _two_qubit_tensor(m).transpose(axes).reshape(4, 4)


def partial_trace(m: np.ndarray, keep: int = 1) -> np.ndarray:
    """Reduced 2×2 state of qubit ``keep`` (1 or 2)."""
    t = _two_qubit_tensor(m)
    if keep == 1:
        return np.einsum("ikjk->ij", t)
    if keep == 2:
        return np.einsum("kikj->ij", t)
    raise BadIndex(f"Subsystem must be 1 or 2, got {keep}")


def matrix_lg(m: np.ndarray) -> np.ndarray:
    """Base-2 matrix logarithm on the support of a PSD matrix.

    Eigenvalues at or below the support tolerance map to 0.

    Raises:
        NotPSD: If an eigenvalue is below −structural tolerance.
    """
    policy = get_policy()
    values, vectors = hermitian_eig(m)
    if values[0] < -policy.structural_tol:
        raise NotPSD(f"Matrix has negative eigenvalue {values[0]:.3e}")
    logs = np.zeros_like(values)
    support = values > policy.support_tol
    logs[support] = np.log2(values[support])
    return (vectors * logs) @ dagger(vectors)


def entropy_bits(probabilities: np.ndarray) -> float:
    """Shannon entropy in bits with 0·lg 0 = 0."""
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    return float(np.sum(entr(p)) / LN2)


def von_neumann_entropy(m: np.ndarray) -> float:
    """−Tr m lg m in bits."""
    values, _ = hermitian_eig(m)
    return entropy_bits(values)
