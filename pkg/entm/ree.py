"""Relative entropy of entanglement.

The numeric path searches the separable set through a 16-term product-state
mixture (16×4 Bloch angles + 15 mixing angles = 79 real parameters) with a
restarted Nelder–Mead simplex. States with extra symmetry, pure states and
the analytic families use cheaper exact routes; ``ree_auto`` picks one.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect, minimize
from scipy.special import xlogy

from .config import NumericPolicy, Settings, get_policy, set_policy
from .exceptions import BudgetExhausted, NoRoot, OutOfRange
from .linalg import (
    LN2,
    SPIN_FLIP,
    dagger,
    entropy_bits,
    hermitian_eig,
    partial_transpose,
)
from .measures import binary_entropy, concurrence, is_pure, wootters_w
from .states import (
    BELL_BASIS,
    BellDiagonalSpectrum,
    DensityMatrix,
    PureState,
    StateLike,
    as_matrix,
    horodecki_p_of_negativity,
    hprime_mixing,
)

logger = logging.getLogger(__name__)

TERMS = 16
MIXING_ANGLES = TERMS - 1
PARAMETER_COUNT = TERMS * 4 + MIXING_ANGLES


@dataclass(frozen=True)
class CaratheodoryPoint:
    """Angles of a 16-term separable mixture.

    ``angles[j] = (α₁, η₁, α₂, η₂)`` gives the product ket
    (cos α₁|0⟩ + e^{iη₁} sin α₁|1⟩) ⊗ (cos α₂|0⟩ + e^{iη₂} sin α₂|1⟩);
    ``mixing`` holds φ₁..φ₁₅ (φ₀ = π/2 is implied).
    """

    angles: np.ndarray
    mixing: np.ndarray

    def __post_init__(self):
        angles = np.array(self.angles, dtype=float).reshape(TERMS, 4)
        mixing = np.array(self.mixing, dtype=float).reshape(MIXING_ANGLES)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "mixing", mixing)

    @classmethod
    def from_vector(cls, vector: Sequence[float]) -> "CaratheodoryPoint":
        v = np.asarray(vector, dtype=float)
        if v.shape != (PARAMETER_COUNT,):
            raise OutOfRange(f"Expected {PARAMETER_COUNT} parameters, got {v.shape}")
        return cls(v[: TERMS * 4], v[TERMS * 4 :])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.angles.reshape(-1), self.mixing])

    def amplitudes(self) -> np.ndarray:
        """pⱼ = sin φⱼ₋₁ Πᵢ₌ⱼ¹⁵ cos φᵢ; the mixture weights are pⱼ²."""
        return _amplitudes(self.mixing)

    def weights(self) -> np.ndarray:
        return self.amplitudes() ** 2


@dataclass(frozen=True)
class RestartSummary:
    restart: int
    evaluations: int
    best_value: float
    converged: bool


@dataclass(frozen=True)
class CssCandidate:
    """A separable state with its relative entropy to the target state."""

    state: DensityMatrix
    value: float
    point: Optional[CaratheodoryPoint] = None
    converged: bool = True
    evaluations: int = 0
    method: str = "numeric"
    trace: Tuple[RestartSummary, ...] = ()


@dataclass(frozen=True)
class ReeSolverConfig:
    restarts: int = 8
    max_evaluations: int = 40000
    simplex_tolerance: float = 1e-9
    agreement_tolerance: float = 1e-6
    seed: int = 0
    initial_step: float = 0.35
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise OutOfRange(f"restarts must be >= 1, got {self.restarts}")
        if self.max_evaluations < PARAMETER_COUNT + 1:
            raise OutOfRange(f"max_evaluations must be > {PARAMETER_COUNT}")
        if min(self.simplex_tolerance, self.agreement_tolerance, self.initial_step) <= 0:
            raise OutOfRange("Tolerances and initial_step must be positive")
        if self.workers < 1:
            raise OutOfRange(f"workers must be >= 1, got {self.workers}")

    @classmethod
    def from_settings(cls, **overrides) -> "ReeSolverConfig":
        """Defaults from the persisted Settings, then explicit overrides."""
        stored = Settings().get_state().ree
        keys = ("restarts", "max_evaluations", "simplex_tolerance", "agreement_tolerance")
        values = {k: stored[k] for k in keys if k in stored}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


# Relative entropy


def relative_entropy(rho: StateLike, sigma: StateLike) -> float:
    """S(ρ‖σ) = Tr ρ lg ρ − Tr ρ lg σ in bits.

    Returns +inf when an eigenvector of σ with eigenvalue below the support
    tolerance overlaps the support of ρ by more than the overlap tolerance.
    """
    policy = get_policy()
    r = as_matrix(rho)
    s = as_matrix(sigma)
    r_values, r_vectors = hermitian_eig(r)
    s_values, s_vectors = hermitian_eig(s)

    support = r_vectors[:, r_values > policy.support_tol]
    overlaps = np.sum(np.abs(dagger(s_vectors) @ support) ** 2, axis=1)
    kernel = s_values <= policy.support_tol
    if np.any(overlaps[kernel] > policy.overlap_tol):
        return float("inf")

    populations = np.real(np.einsum("ij,jk,ki->i", dagger(s_vectors), r, s_vectors))
    cross = np.sum(populations[~kernel] * np.log2(s_values[~kernel]))
    value = -entropy_bits(r_values) - cross
    return float(max(value, 0.0))


def _barrier_relative_entropy(
    r: np.ndarray, neg_entropy: float, s: np.ndarray, floor: float
) -> float:
    s_values, s_vectors = np.linalg.eigh(s)
    populations = np.real(np.einsum("ij,jk,ki->i", dagger(s_vectors), r, s_vectors))
    return float(neg_entropy - np.sum(populations * np.log2(np.maximum(s_values, floor))))


# Carathéodory parametrization


def _amplitudes(mixing: np.ndarray) -> np.ndarray:
    cosines = np.cos(mixing)
    suffix = np.append(np.cumprod(cosines[::-1])[::-1], 1.0)
    sines = np.sin(np.concatenate([[np.pi / 2], mixing]))
    return sines * suffix


def _assemble_matrix(vector: np.ndarray) -> np.ndarray:
    angles = vector[: TERMS * 4].reshape(TERMS, 4)
    weights = _amplitudes(vector[TERMS * 4 :]) ** 2
    a1, e1, a2, e2 = angles.T
    ket1 = np.stack([np.cos(a1), np.exp(1j * e1) * np.sin(a1)], axis=1)
    ket2 = np.stack([np.cos(a2), np.exp(1j * e2) * np.sin(a2)], axis=1)
    kets = (ket1[:, :, None] * ket2[:, None, :]).reshape(TERMS, 4)
    return kets.T @ (weights[:, None] * kets.conj())


def caratheodory_assemble(point: CaratheodoryPoint) -> DensityMatrix:
    """Σⱼ pⱼ² |ψⱼ⁽¹⁾ψⱼ⁽²⁾⟩⟨ψⱼ⁽¹⁾ψⱼ⁽²⁾|; separable by construction."""
    return DensityMatrix(_assemble_matrix(point.to_vector()))


def _bloch_angles(ket: np.ndarray) -> Tuple[float, float]:
    a, b = ket
    return float(np.arctan2(abs(b), abs(a))), float(np.angle(b) - np.angle(a))


def caratheodory_from_ensemble(
    ensemble: Sequence[Tuple[float, np.ndarray, np.ndarray]]
) -> CaratheodoryPoint:
    """Encode up to 16 (weight, ket₁, ket₂) product terms as a CaratheodoryPoint.

    Args:
        ensemble: Probability weights (summing to 1) with single-qubit kets.

    Returns:
        A point whose assembled state equals the ensemble's mixture.

    Raises:
        OutOfRange: If there are more than 16 terms or weights do not sum to 1.
    """
    if len(ensemble) > TERMS:
        raise OutOfRange(f"At most {TERMS} product terms, got {len(ensemble)}")
    weights = np.zeros(TERMS)
    angles = np.zeros((TERMS, 4))
    for j, (weight, ket1, ket2) in enumerate(ensemble):
        weights[j] = weight
        angles[j, 0:2] = _bloch_angles(np.asarray(ket1, dtype=complex))
        angles[j, 2:4] = _bloch_angles(np.asarray(ket2, dtype=complex))
    if weights.min() < 0 or abs(weights.sum() - 1) > 1e-9:
        raise OutOfRange(f"Ensemble weights must be a probability vector: {weights}")

    p = np.sqrt(weights / weights.sum())
    radii = np.sqrt(np.cumsum(p**2))
    mixing = np.zeros(MIXING_ANGLES)
    for j in range(TERMS - 1, 0, -1):
        if radii[j] > 0:
            mixing[j - 1] = np.arcsin(min(1.0, p[j] / radii[j]))
    return CaratheodoryPoint(angles, mixing)


def random_point(rng: np.random.Generator) -> CaratheodoryPoint:
    angles = np.column_stack(
        [
            rng.uniform(0, np.pi / 2, TERMS),
            rng.uniform(0, 2 * np.pi, TERMS),
            rng.uniform(0, np.pi / 2, TERMS),
            rng.uniform(0, 2 * np.pi, TERMS),
        ]
    )
    return CaratheodoryPoint(angles, rng.uniform(0, np.pi / 2, MIXING_ANGLES))


# Separable decomposition


def _takagi(tau: np.ndarray, threshold: float) -> Tuple[np.ndarray, np.ndarray]:
    """Return (λ descending, U) with τ = U diag(λ) Uᵀ for complex symmetric τ."""
    real_form = np.block([[tau.real, tau.imag], [tau.imag, -tau.real]])
    values, vectors = np.linalg.eigh(real_form)
    order = np.argsort(values)[::-1]
    n = tau.shape[0]
    columns, lambdas = [], []
    for index in order[:n]:
        if values[index] <= threshold:
            break
        columns.append(vectors[:n, index] + 1j * vectors[n:, index])
        lambdas.append(values[index])

    u = np.array(columns, dtype=complex).T.reshape(n, len(columns))
    if len(columns) < n:
        # Null directions: any orthonormal completion works
        projector = np.eye(n) - u @ dagger(u)
        _, complement = np.linalg.eigh(projector)
        u = np.hstack([u, complement[:, len(columns) - n :]])
        lambdas.extend([0.0] * (n - len(columns)))
    return np.array(lambdas), u


def _closing_phases(lam: np.ndarray) -> np.ndarray:
    """Unit phasors cⱼ with Σ cⱼλⱼ = 0, for λ₁ ≤ λ₂ + λ₃ + λ₄ (λ descending)."""
    l1, l2, l3, l4 = lam
    radius = max(l1 - l2, l3 - l4, 0.0)

    def _angle(a: float, b: float) -> float:
        if a * b <= 1e-300:
            return 0.0
        return float(np.arccos(np.clip((radius**2 - a * a - b * b) / (2 * a * b), -1.0, 1.0)))

    beta = _angle(l1, l2)
    epsilon = _angle(l3, l4)
    head = l1 + l2 * np.exp(1j * beta)
    tail = l3 + l4 * np.exp(1j * epsilon)
    if abs(head) > 1e-300 and abs(tail) > 1e-300:
        rotation = np.angle(-head) - np.angle(tail)
    else:
        rotation = np.pi
    return np.exp(1j * np.array([0.0, beta, rotation, rotation + epsilon]))


def separable_decomposition(rho: StateLike) -> List[Tuple[float, np.ndarray, np.ndarray]]:
    """Explicit ≤ 4-term product ensemble for a two-qubit state with C = 0.

    Diagonalizes the spin-flip overlap matrix of ρ's eigen-ensemble, then
    rotates with a closing set of phases so each new member has zero
    concurrence, i.e. is a product ket.

    Args:
        rho: A separable (PPT) two-qubit state.

    Returns:
        List of (weight, ket₁, ket₂) with weights summing to 1.

    Raises:
        OutOfRange: If the state is entangled.
    """
    policy = get_policy()
    m = as_matrix(rho)
    values, vectors = hermitian_eig(m)
    v = vectors * np.sqrt(np.where(values > policy.support_tol, values, 0.0))
    tau = dagger(v) @ SPIN_FLIP @ np.conj(v)
    tau = (tau + tau.T) / 2

    lam, u = _takagi(tau, threshold=policy.support_tol)
    if lam[0] - lam[1:].sum() > policy.spectral_tol:
        excess = lam[0] - lam[1:].sum()
        raise OutOfRange(f"State is entangled (C = {excess:.3e}); no product ensemble")

    x = v @ u
    phasors = _closing_phases(lam)
    w = x * np.exp(-0.5j * np.angle(phasors))
    signs = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]]) / 2.0
    z = w @ signs.T

    ensemble = []
    for k in range(4):
        block = z[:, k].reshape(2, 2)
        left, singular, right = np.linalg.svd(block)
        if singular[0] ** 2 <= policy.support_tol:
            continue
        ensemble.append((float(singular[0] ** 2), left[:, 0], right[0, :]))
    total = sum(weight for weight, _, _ in ensemble)
    return [(weight / total, ket1, ket2) for weight, ket1, ket2 in ensemble]


def _maximally_mixed_point() -> CaratheodoryPoint:
    zero = np.array([1.0, 0.0])
    one = np.array([0.0, 1.0])
    return caratheodory_from_ensemble(
        [(0.25, zero, zero), (0.25, zero, one), (0.25, one, zero), (0.25, one, one)]
    )


def ppt_projection(rho: StateLike) -> np.ndarray:
    """Clamp the negative partial-transpose eigenvalue and transpose back.

    The result is mixed with I/4 just enough to be positive, so it is both
    positive and PPT.
    """
    m = as_matrix(rho)
    values, vectors = hermitian_eig(partial_transpose(m, 2))
    clamped = np.clip(values, 0.0, None)
    projected = partial_transpose((vectors * (clamped / clamped.sum())) @ dagger(vectors), 2)
    projected = (projected + dagger(projected)) / 2
    lowest = float(np.linalg.eigvalsh(projected)[0])
    if lowest < 0:
        t = -lowest / (0.25 - lowest)
        projected = (1 - t) * projected + t * np.eye(4) / 4
    return projected


def is_ppt(rho: StateLike) -> bool:
    values, _ = hermitian_eig(partial_transpose(as_matrix(rho), 2))
    return values[0] >= -get_policy().structural_tol


# Numeric search


def _simplex(center: np.ndarray, step: float) -> np.ndarray:
    return np.vstack([center, center + step * np.eye(center.size)])


def schmidt_basis_ensemble(rho: StateLike) -> List[Tuple[float, np.ndarray, np.ndarray]]:
    """ρ dephased in the product basis built from the Schmidt vectors of its leading eigenvector.

    The result is separable. For a pure state it is the closest separable state.
    """
    m = as_matrix(rho)
    _, vectors = hermitian_eig(m)
    left, _, right = np.linalg.svd(vectors[:, -1].reshape(2, 2))
    ensemble = []
    for i in range(2):
        for j in range(2):
            ket = np.kron(left[:, i], right[j, :])
            weight = max(float(np.real(np.conj(ket) @ m @ ket)), 0.0)
            ensemble.append((weight, left[:, i], right[j, :]))
    total = sum(weight for weight, _, _ in ensemble)
    return [(weight / total, ket1, ket2) for weight, ket1, ket2 in ensemble]


def _starting_point(m: np.ndarray, cfg: ReeSolverConfig, restart: int) -> CaratheodoryPoint:
    if restart == 0:
        return caratheodory_from_ensemble(schmidt_basis_ensemble(m))
    if restart == 1:
        try:
            return caratheodory_from_ensemble(separable_decomposition(ppt_projection(m)))
        except OutOfRange as e:
            logger.debug(f"PPT projection seed unavailable, using a random start: {e}")
    if restart == 2:
        return _maximally_mixed_point()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, restart])))
    return random_point(rng)


def _run_restart(
    m: np.ndarray, cfg: ReeSolverConfig, restart: int, policy: NumericPolicy
) -> Tuple[int, np.ndarray, int, bool]:
    set_policy(policy)
    r_values, _ = hermitian_eig(m)
    neg_entropy = -entropy_bits(r_values)
    floor = policy.barrier_floor

    def objective(vector: np.ndarray) -> float:
        return _barrier_relative_entropy(m, neg_entropy, _assemble_matrix(vector), floor)

    best_x = _starting_point(m, cfg, restart).to_vector()
    best_f = objective(best_x)
    evaluations = 1
    step = cfg.initial_step
    converged = False
    while evaluations < cfg.max_evaluations:
        result = minimize(
            objective,
            best_x,
            method="Nelder-Mead",
            options={
                "initial_simplex": _simplex(best_x, step),
                "maxfev": cfg.max_evaluations - evaluations,
                "fatol": cfg.simplex_tolerance,
                "xatol": np.inf,
                "adaptive": True,
            },
        )
        evaluations += int(result.nfev)
        improvement = best_f - float(result.fun)
        spread_reached = result.status == 0
        if result.fun < best_f:
            best_x, best_f = np.asarray(result.x), float(result.fun)
        # status 0 means the simplex spread fell below fatol
        if improvement > cfg.simplex_tolerance:
            converged = spread_reached
        else:
            converged = converged or spread_reached
        if spread_reached and improvement <= cfg.simplex_tolerance:
            break
        # Re-expand around the best vertex with a tighter simplex
        step = max(step / 2, 1e-3)

    logger.debug(
        f"Restart {restart}: value {best_f:.10f} after {evaluations} evaluations "
        f"(converged={converged})"
    )
    return restart, best_x, evaluations, converged


def _settled(summaries: Sequence[RestartSummary], tolerance: float) -> bool:
    values = sorted(s.best_value for s in summaries if s.converged)
    return len(values) >= 2 and values[1] - values[0] <= tolerance


def ree_numeric(
    rho: StateLike, cfg: Optional[ReeSolverConfig] = None, strict: bool = False
) -> CssCandidate:
    """Closest separable state by restarted simplex search over 79 parameters.

    Restarts run in index order (Schmidt-basis seed, PPT projection, I/4, then
    seeded random points) and stop early once the two lowest converged values
    agree within ``cfg.agreement_tolerance``. With several workers, restarts run
    in waves and anything past the stopping index is discarded, so the result
    does not depend on the worker count.

    Args:
        rho: Two-qubit state.
        cfg: Solver settings; defaults come from ReeSolverConfig().
        strict: Raise BudgetExhausted instead of returning an unconverged result.

    Returns:
        The best CssCandidate over the restarts run (lowest restart index wins ties).

    Raises:
        BudgetExhausted: If ``strict`` and the winning restart hit its budget.
    """
    cfg = cfg or ReeSolverConfig()
    m = as_matrix(rho)

    if is_ppt(m):
        point = caratheodory_from_ensemble(separable_decomposition(m))
        state = caratheodory_assemble(point)
        logger.debug("PPT input: encoded its own separable decomposition")
        return CssCandidate(state, relative_entropy(m, state), point, True, 0, "numeric")

    policy = get_policy()
    pending = list(range(cfg.restarts))
    best = None
    summaries: List[RestartSummary] = []
    total = 0
    pool_context = (
        ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else nullcontext()
    )
    with pool_context as pool:
        while pending and not _settled(summaries, cfg.agreement_tolerance):
            wave, pending = pending[: cfg.workers], pending[cfg.workers :]
            if pool is None:
                outcomes = [_run_restart(m, cfg, r, policy) for r in wave]
            else:
                futures = [pool.submit(_run_restart, m, cfg, r, policy) for r in wave]
                outcomes = [f.result() for f in futures]
            for restart, vector, evaluations, converged in outcomes:
                if _settled(summaries, cfg.agreement_tolerance):
                    break
                point = CaratheodoryPoint.from_vector(vector)
                state = caratheodory_assemble(point)
                value = relative_entropy(m, state)
                total += evaluations
                summaries.append(RestartSummary(restart, evaluations, value, converged))
                if best is None or value < best[1]:
                    best = (state, value, point, converged)
    set_policy(policy)
    if len(summaries) < cfg.restarts:
        logger.debug(f"Restarts agreed after {len(summaries)} of {cfg.restarts}")

    state, value, point, converged = best
    candidate = CssCandidate(state, value, point, converged, total, "numeric", tuple(summaries))
    if not converged:
        logger.warning(f"REE search hit its evaluation budget; best value {value:.6f}")
        if strict:
            raise BudgetExhausted(
                f"REE search exhausted {cfg.max_evaluations} evaluations per restart", candidate
            )
    else:
        logger.info(f"REE search converged: {value:.10f} after {total} evaluations")
    return candidate


# Symmetry-reduced search for states with only a |01⟩–|10⟩ coherence

_SWAP_COHERENT_MASK = np.ones((4, 4), dtype=bool)
_SWAP_COHERENT_MASK[np.diag_indices(4)] = False
_SWAP_COHERENT_MASK[1, 2] = _SWAP_COHERENT_MASK[2, 1] = False


def is_swap_coherent(rho: StateLike) -> bool:
    """True when every coherence except ⟨01|ρ|10⟩ vanishes."""
    m = as_matrix(rho)
    return bool(np.max(np.abs(m[_SWAP_COHERENT_MASK])) <= get_policy().structural_tol)


def _reduced_sigma(params: np.ndarray, phase: complex) -> Tuple[np.ndarray, complex]:
    u = params[:4]
    s = u**2 / np.sum(u**2)
    bound = np.sqrt(min(s[0] * s[3], s[1] * s[2]))
    return s, phase * np.sin(params[4]) * bound


def _reduced_matrix(s: np.ndarray, w: complex) -> np.ndarray:
    sigma = np.diag(s).astype(complex)
    sigma[1, 2] = w
    sigma[2, 1] = np.conj(w)
    return sigma


def _block_lg_trace(rho_block: np.ndarray, a: float, d: float, w: complex, floor: float) -> float:
    # Tr(ρ_b lg σ_b) for σ_b = [[a, w], [w̄, d]] via its spectral projectors
    mean = (a + d) / 2
    radius = np.sqrt(((a - d) / 2) ** 2 + abs(w) ** 2)
    upper, lower = mean + radius, mean - radius
    if radius <= 1e-15:
        return float(np.real(np.trace(rho_block)) * np.log2(max(mean, floor)))
    sigma_block = np.array([[a, w], [np.conj(w), d]])
    p_upper = (sigma_block - lower * np.eye(2)) / (upper - lower)
    weight_upper = float(np.real(np.trace(rho_block @ p_upper)))
    weight_lower = float(np.real(np.trace(rho_block))) - weight_upper
    return weight_upper * np.log2(max(upper, floor)) + weight_lower * np.log2(max(lower, floor))


def ree_reduced(
    rho: StateLike, restarts: int = 6, seed: int = 0, max_evaluations: int = 20000
) -> CssCandidate:
    """REE of a swap-coherent state, searching only swap-coherent separable states.

    Such states are fixed by the local twirl diag(1, e^{iθ})^{⊗2}, so a closest
    separable state exists in the same class: four populations and one
    coherence |w| ≤ min(√(s₀₀s₁₁), √(s₀₁s₁₀)), leaving 5 parameters.

    Raises:
        OutOfRange: If ρ has coherences outside the |01⟩–|10⟩ block.
    """
    policy = get_policy()
    m = as_matrix(rho)
    if not is_swap_coherent(m):
        raise OutOfRange("Reduced REE solver needs a state whose only coherence is <01|rho|10>")

    diagonal = np.real(np.diag(m))
    block = m[1:3, 1:3]
    z = m[1, 2]
    phase = np.exp(1j * np.angle(z)) if abs(z) > 0 else 1.0 + 0j
    r_values, _ = hermitian_eig(m)
    neg_entropy = -entropy_bits(r_values)
    floor = policy.barrier_floor

    def objective(params: np.ndarray) -> float:
        s, w = _reduced_sigma(params, phase)
        cross = diagonal[0] * np.log2(max(s[0], floor)) + diagonal[3] * np.log2(max(s[3], floor))
        cross += _block_lg_trace(block, s[1], s[2], w, floor)
        return float(neg_entropy - cross)

    base = np.sqrt(np.clip(diagonal, 0.0, None) + 1e-3)
    starts = [np.append(base, 0.0), np.append(base, np.pi / 2)]
    for restart in range(2, restarts):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, restart])))
        starts.append(np.append(rng.uniform(0.05, 1.0, 4), rng.uniform(-np.pi / 2, np.pi / 2)))

    best_params, best_value, evaluations = None, np.inf, 0
    all_converged = True
    for start in starts[:restarts]:
        current = np.asarray(start, dtype=float)
        current_f = objective(current)
        spent, step, converged = 1, 0.25, False
        while spent < max_evaluations:
            result = minimize(
                objective,
                current,
                method="Nelder-Mead",
                options={
                    "initial_simplex": _simplex(current, step),
                    "maxfev": max_evaluations - spent,
                    "fatol": 1e-14,
                    "xatol": 1e-11,
                },
            )
            spent += int(result.nfev)
            improvement = current_f - float(result.fun)
            if result.fun < current_f:
                current, current_f = np.asarray(result.x), float(result.fun)
            if result.status == 0 and improvement <= 1e-13:
                converged = True
                break
            step = max(step / 4, 1e-6)
        evaluations += spent
        if current_f < best_value:
            best_params, best_value, all_converged = current, current_f, converged

    s, w = _reduced_sigma(best_params, phase)
    sigma = DensityMatrix(_reduced_matrix(s, w))
    value = relative_entropy(m, sigma)
    logger.debug(f"Reduced REE {value:.12f} after {evaluations} evaluations")
    return CssCandidate(sigma, value, None, all_converged, evaluations, "reduced")


# Analytic formulas


def _schmidt_css(psi: np.ndarray) -> np.ndarray:
    left, singular, right = np.linalg.svd(np.asarray(psi, dtype=complex).reshape(2, 2))
    sigma = np.zeros((4, 4), dtype=complex)
    for k in range(2):
        product = np.kron(left[:, k], right[k, :])
        sigma += singular[k] ** 2 * np.outer(product, np.conj(product))
    return sigma


def ree_pure(psi) -> float:
    """E_R of a pure state, W(C)."""
    if not isinstance(psi, PureState):
        psi = PureState(psi)
    return wootters_w(concurrence(psi.density()))


def ree_horodecki(p: float) -> float:
    """2h(1 − p/2) − h(p) − p."""
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"p must lie in [0, 1], got {p}")
    return float(max(0.0, 2 * binary_entropy(1 - p / 2) - binary_entropy(p) - p))


def ree_hprime(p: float, negativity: float) -> float:
    """Closed-form E_R of hprime(p, N); its closest separable state is horodecki_css(p)."""
    x = hprime_mixing(p, negativity)
    q = p / 2
    y1 = 1 - q * x
    y2 = 1 - 2 * q + q * q * x
    value = (
        q * q * xlogy(x, x)
        + 2 * q * xlogy(y1, y1 / (1 - q))
        + xlogy(y2, y2 / (1 - q) ** 2)
    ) / LN2
    return float(max(0.0, value))


def ree_bell_diagonal(spec) -> float:
    """1 − h(λ_max) when λ_max > 1/2, else 0."""
    if not isinstance(spec, BellDiagonalSpectrum):
        spec = BellDiagonalSpectrum(tuple(spec))
    top = spec.lambda_max
    return float(1 - binary_entropy(top)) if top > 0.5 else 0.0


def bell_diagonal_css(spec: BellDiagonalSpectrum) -> np.ndarray:
    lam = np.array(spec.lambdas)
    top = int(np.argmax(lam))
    if lam[top] <= 0.5:
        weights = lam
    else:
        weights = lam / (2 * (1 - lam[top]))
        weights[top] = 0.5
    return sum(wgt * np.outer(vec, np.conj(vec)) for wgt, vec in zip(weights, BELL_BASIS))


def bell_spectrum_of(rho: StateLike) -> Optional[BellDiagonalSpectrum]:
    """The Bell-basis spectrum if ρ is diagonal in the Bell basis, else None."""
    basis = np.column_stack(BELL_BASIS)
    in_bell = dagger(basis) @ as_matrix(rho) @ basis
    off = in_bell - np.diag(np.diag(in_bell))
    if np.max(np.abs(off)) > get_policy().structural_tol:
        return None
    lam = np.clip(np.real(np.diag(in_bell)), 0.0, None)
    lam = lam / lam.sum()
    lam[3] = max(0.0, 1.0 - lam[:3].sum())
    return BellDiagonalSpectrum(tuple(lam))


def ree_crossing(lo: float = 0.01, hi: float = 0.99, xtol: float = 1e-10) -> Tuple[float, float]:
    """Negativity where Horodecki-state E_R meets the pure-state curve W(N).

    Returns:
        (N_Y, E_Y) with E_Y the common REE value.

    Raises:
        NoRoot: If the difference does not change sign on [lo, hi].
    """

    def gap(n: float) -> float:
        return ree_horodecki(horodecki_p_of_negativity(n)) - wootters_w(n)

    if gap(lo) * gap(hi) > 0:
        raise NoRoot(f"No sign change of E_R(Horodecki) - W(N) on [{lo}, {hi}]")
    n_y = float(bisect(gap, lo, hi, xtol=xtol))
    return n_y, wootters_w(n_y)


def ree_auto(rho: StateLike, solver: Optional[ReeSolverConfig] = None) -> CssCandidate:
    """Pick the cheapest exact route: pure, Bell-diagonal, reduced, then numeric."""
    m = as_matrix(rho)
    if is_pure(m):
        values, vectors = hermitian_eig(m)
        psi = vectors[:, -1]
        sigma = DensityMatrix(_schmidt_css(psi))
        return CssCandidate(sigma, wootters_w(concurrence(m)), method="analytic")

    spec = bell_spectrum_of(m)
    if spec is not None:
        sigma = DensityMatrix(bell_diagonal_css(spec))
        return CssCandidate(sigma, ree_bell_diagonal(spec), method="analytic")

    if is_swap_coherent(m):
        return ree_reduced(m, seed=(solver.seed if solver else 0))

    return ree_numeric(m, solver)
