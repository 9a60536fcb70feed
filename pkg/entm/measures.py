"""Closed-form two-qubit measures: C, E_F, N, E_PPT and the CHSH measure B."""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .config import get_policy
from .exceptions import MeasureRangeError
from .linalg import (
    PAULI,
    SPIN_FLIP,
    entropy_bits,
    general_eig4,
    hermitian_eig,
    kron,
    partial_transpose,
)
from .states import BellDiagonalSpectrum, StateLike, as_matrix

logger = logging.getLogger(__name__)

MEASURE_NAMES = ("C", "E_F", "N", "E_PPT", "B", "E_R")
REE_METHODS = ("analytic", "numeric", "reduced", "absent")


@dataclass(frozen=True)
class MeasureRecord:
    c: float
    e_f: float
    n: float
    e_ppt: float
    b: float
    e_r: Optional[float] = None
    ree_method: str = "absent"
    ree_converged: Optional[bool] = None

    def value(self, name: str) -> Optional[float]:
        """Look a measure up by its short name (C, E_F, N, E_PPT, B, E_R)."""
        if name not in MEASURE_NAMES:
            raise KeyError(f"Unknown measure {name!r}; choose from {MEASURE_NAMES}")
        return getattr(self, name.lower())

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class CorrelationMatrix:
    t: np.ndarray
    u: np.ndarray


def _clamp(value: float, name: str) -> float:
    """Clip roundoff outside [0, 1]; anything further out is an error."""
    slack = get_policy().measure_clamp
    if value < -slack or value > 1 + slack or not np.isfinite(value):
        logger.error(f"{name} = {value!r} outside [0, 1]")
        raise MeasureRangeError(f"{name} = {value!r} is outside [0, 1]")
    return float(min(max(value, 0.0), 1.0))


def binary_entropy(y: float) -> float:
    """h(y) = −y lg y − (1−y) lg(1−y)."""
    y = _clamp(float(y), "h argument")
    return entropy_bits([y, 1.0 - y])


def wootters_w(x: float) -> float:
    """W(x) = h((1 + √(1 − x²))/2); maps concurrence to entanglement of formation."""
    x = _clamp(float(x), "W argument")
    return binary_entropy((1.0 + np.sqrt(1.0 - x * x)) / 2.0)


def spin_flip_product(rho: StateLike) -> np.ndarray:
    """ρ(σ₂⊗σ₂)ρ*(σ₂⊗σ₂)."""
    m = as_matrix(rho)
    return m @ SPIN_FLIP @ np.conj(m) @ SPIN_FLIP


def spin_flip_spectrum(rho: StateLike) -> np.ndarray:
    """Square roots of the spin-flip product's eigenvalues, descending.

    Raises:
        MeasureRangeError: If an eigenvalue has an imaginary part or negative
            excursion beyond the spectral tolerance.
    """
    policy = get_policy()
    eigenvalues = general_eig4(spin_flip_product(rho))
    if np.max(np.abs(eigenvalues.imag)) > policy.spectral_tol:
        raise MeasureRangeError(f"Spin-flip product has complex eigenvalues {eigenvalues}")
    real = eigenvalues.real
    if real.min() < -policy.spectral_tol:
        raise MeasureRangeError(f"Spin-flip product has negative eigenvalue {real.min():.3e}")
    # roundoff zeros would otherwise surface as λ ≈ 1e-8
    real = np.where(real > policy.support_tol, real, 0.0)
    return np.sort(np.sqrt(real))[::-1]


def _spin_flip_singular_values(m: np.ndarray) -> np.ndarray:
    # τ = Vᵀ(σ₂⊗σ₂)V with ρ = VV†; its singular values are the λᵢ
    values, vectors = hermitian_eig(m)
    values = np.where(values > get_policy().support_tol, values, 0.0)
    v = vectors * np.sqrt(values)
    tau = v.T @ SPIN_FLIP @ v
    return np.linalg.svd(tau, compute_uv=False)


def concurrence(rho: StateLike, method: str = "svd") -> float:
    """Wootters concurrence max(0, λ₁ − λ₂ − λ₃ − λ₄).

    Args:
        rho: Two-qubit state.
        method: "svd" (spin-flip overlap matrix, default) or "product"
            (eigenvalues of the non-Hermitian spin-flip product).

    Returns:
        C in [0, 1].
    """
    m = as_matrix(rho)
    if method == "svd":
        lambdas = _spin_flip_singular_values(m)
    elif method == "product":
        lambdas = spin_flip_spectrum(m)
    else:
        raise ValueError(f"Unknown concurrence method {method!r}")
    lambdas = np.sort(lambdas)[::-1]
    return _clamp(max(0.0, lambdas[0] - lambdas[1:].sum()), "C")


def entanglement_of_formation(rho: StateLike) -> float:
    return wootters_w(concurrence(rho))


def partial_transpose_spectrum(rho: StateLike) -> np.ndarray:
    values, _ = hermitian_eig(partial_transpose(as_matrix(rho), 2))
    return values


def negativity(rho: StateLike) -> float:
    """N = 2 Σ max(0, −μⱼ) over the partial-transpose eigenvalues."""
    mu = partial_transpose_spectrum(rho)
    return _clamp(2.0 * float(np.sum(np.clip(-mu, 0.0, None))), "N")


def ppt_cost(rho: StateLike) -> float:
    return _clamp(float(np.log2(negativity(rho) + 1.0)), "E_PPT")


def correlation_matrix(rho: StateLike) -> CorrelationMatrix:
    m = as_matrix(rho)
    t = np.empty((3, 3))
    for n in range(3):
        for k in range(3):
            t[n, k] = np.real(np.trace(m @ kron(PAULI[n + 1], PAULI[k + 1])))
    u = np.sort(np.clip(np.linalg.eigvalsh(t.T @ t), 0.0, None))[::-1]
    return CorrelationMatrix(t=t, u=u)


def nonlocality(rho: StateLike) -> float:
    """B = √max(0, u₁ + u₂ − 1); B > 0 iff the CHSH inequality is violated."""
    u = correlation_matrix(rho).u
    return _clamp(float(np.sqrt(max(0.0, u[0] + u[1] - 1.0))), "B")


def nonlocality_bell_diagonal(spec: BellDiagonalSpectrum) -> float:
    if not isinstance(spec, BellDiagonalSpectrum):
        spec = BellDiagonalSpectrum(tuple(spec))
    lam = spec.lambdas
    best = max(
        (lam[i] - lam[j]) ** 2 + (lam[k] - lam[3]) ** 2
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1))
    )
    return _clamp(float(np.sqrt(max(0.0, 2.0 * best - 1.0))), "B")


def purity(rho: StateLike) -> float:
    m = as_matrix(rho)
    return float(np.real(np.trace(m @ m)))


def is_pure(rho: StateLike) -> bool:
    return purity(rho) > 1.0 - get_policy().purity_tol


def all_measures(
    rho: StateLike,
    with_ree: bool = False,
    solver=None,
    known_ree: Optional[Tuple[float, str, bool]] = None,
) -> MeasureRecord:
    """Bundle every measure for one state.

    Args:
        rho: Two-qubit state.
        with_ree: Compute E_R for mixed states through the REE solvers.
        solver: Optional ReeSolverConfig for the numeric path.
        known_ree: Precomputed (value, method, converged) that skips the solvers.

    Returns:
        MeasureRecord; E_R uses W(C) for pure states, else ``known_ree``, else
        the solvers when ``with_ree`` is set, else stays absent.
    """
    m = as_matrix(rho)
    c = concurrence(m)
    n = negativity(m)
    e_r, method, converged = None, "absent", None
    if is_pure(m):
        e_r, method, converged = wootters_w(c), "analytic", True
    elif known_ree is not None:
        e_r, method, converged = known_ree
    elif with_ree:
        from .ree import ree_auto

        candidate = ree_auto(m, solver)
        e_r, method, converged = candidate.value, candidate.method, candidate.converged
    if e_r is not None:
        e_r = _clamp(e_r, "E_R")

    return MeasureRecord(
        c=c,
        e_f=wootters_w(c),
        n=n,
        e_ppt=_clamp(float(np.log2(n + 1.0)), "E_PPT"),
        b=nonlocality(m),
        e_r=e_r,
        ree_method=method,
        ree_converged=converged,
    )
