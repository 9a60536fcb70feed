"""State families and seeded random-state sampling for two qubits."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import get_policy
from .exceptions import BadIndex, BadSpectrum, InvalidState, OutOfRange
from .linalg import HADAMARD, IDENTITY2, dagger, hermiticity_defect, kron

logger = logging.getLogger(__name__)

SQRT_HALF = 1.0 / np.sqrt(2.0)
SAMPLER_METHODS = ("ginibre", "induced", "haar-pure", "family-mix")
FAMILY_TAGS = (
    "ginibre",
    "haar-pure",
    "horodecki",
    "werner",
    "hprime",
    "bell-diagonal",
    "maxcorr",
    "xstate",
)
DEFAULT_QUOTAS = {
    "ginibre": 0.3,
    "haar-pure": 0.15,
    "horodecki": 0.1,
    "werner": 0.05,
    "hprime": 0.2,
    "bell-diagonal": 0.1,
    "maxcorr": 0.1,
    "xstate": 0.0,
}


@dataclass(frozen=True)
class DensityMatrix:
    """A validated 4×4 two-qubit density matrix.

    Construction checks Hermiticity, unit trace and positivity against the
    structural tolerance and raises InvalidState with a report otherwise.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        report = validation_report(m)
        if report:
            logger.error(f"Rejected density matrix: {'; '.join(report)}")
            raise InvalidState("Matrix is not a valid two-qubit state", report)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.matrix + dagger(self.matrix)) / 2)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def to_json_dict(self) -> Dict[str, Any]:
        entries = [[float(z.real), float(z.imag)] for z in self.matrix.reshape(-1)]
        return {"format": "density-matrix", "dim": 4, "entries": entries}

    @classmethod
    def from_json_dict(cls, data: Union[Dict[str, Any], List[Any]]) -> "DensityMatrix":
        """Parse 16 row-major [re, im] pairs (flat, nested 4×4, or under "entries")."""
        raw = data.get("entries", data.get("matrix")) if isinstance(data, dict) else data
        try:
            pairs = np.asarray(raw, dtype=float).reshape(16, 2)
        except (TypeError, ValueError) as e:
            raise InvalidState("State JSON must hold 16 [re, im] pairs", [str(e)])
        return cls((pairs[:, 0] + 1j * pairs[:, 1]).reshape(4, 4))

    def __eq__(self, other):
        return isinstance(other, DensityMatrix) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


StateLike = Union[DensityMatrix, np.ndarray]


def as_matrix(state: StateLike) -> np.ndarray:
    if isinstance(state, DensityMatrix):
        return state.matrix
    if isinstance(state, PureState):
        return state.density().matrix
    return np.asarray(state, dtype=complex)


def validation_report(m: np.ndarray) -> List[str]:
    """List every violated density-matrix invariant (empty when valid)."""
    tol = get_policy().structural_tol
    if m.shape != (4, 4):
        return [f"shape {m.shape} is not (4, 4)"]
    if not np.all(np.isfinite(m)):
        return ["non-finite entries"]
    report = []
    defect = hermiticity_defect(m)
    if defect > tol:
        report.append(f"not Hermitian: max |m - m†| = {defect:.3e}")
    trace = np.trace(m)
    if abs(trace - 1) > tol:
        report.append(f"trace {trace.real:.12g}{trace.imag:+.3g}j is not 1")
    min_eig = float(np.linalg.eigvalsh((m + dagger(m)) / 2)[0])
    if min_eig < -tol:
        report.append(f"negative eigenvalue {min_eig:.3e}")
    return report


@dataclass(frozen=True)
class PureState:
    """Normalized amplitudes (c00, c01, c10, c11)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if a.shape != (4,):
            raise InvalidState("Pure state needs 4 amplitudes", [f"got {a.shape[0]}"])
        norm = float(np.sum(np.abs(a) ** 2))
        if abs(norm - 1) > get_policy().pure_norm_tol:
            raise InvalidState("Pure state is not normalized", [f"norm² = {norm:.15g}"])
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, amplitudes: Sequence[complex]) -> "PureState":
        a = np.asarray(amplitudes, dtype=complex)
        return cls(a / np.linalg.norm(a))

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, np.conj(self.amplitudes)))


@dataclass(frozen=True)
class BellDiagonalSpectrum:
    """Weights over the Bell projectors Ψ₁, Ψ₂ = Φ⁺, Φ⁻, Ψ⁺ (in that order)."""

    lambdas: Tuple[float, float, float, float]

    def __post_init__(self):
        values = tuple(float(v) for v in self.lambdas)
        if len(values) != 4:
            raise BadSpectrum(f"Bell-diagonal spectrum needs 4 weights, got {len(values)}")
        if min(values) < 0 or abs(sum(values) - 1) > 1e-12:
            raise BadSpectrum(f"Weights must be nonnegative and sum to 1: {values}")
        object.__setattr__(self, "lambdas", values)

    @property
    def lambda_max(self) -> float:
        return max(self.lambdas)


@dataclass
class SamplerConfig:
    """Settings for the Monte Carlo state stream.

    ``worker``/``workers`` select the partition of indices ≡ worker (mod workers);
    the union over all workers does not depend on ``workers``.
    """

    method: str = "ginibre"
    seed: int = 0
    count: int = 1
    ancilla: int = 4
    quotas: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_QUOTAS))
    worker: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.method not in SAMPLER_METHODS:
            raise OutOfRange(f"Unknown sampler method {self.method!r}; use {SAMPLER_METHODS}")
        if self.count < 1:
            raise OutOfRange(f"count must be >= 1, got {self.count}")
        if not 1 <= self.ancilla <= 8:
            raise OutOfRange(f"induced ancilla dimension must be in 1..8, got {self.ancilla}")
        if self.workers < 1 or not 0 <= self.worker < self.workers:
            raise OutOfRange(f"worker {self.worker} of {self.workers} is not a valid partition")
        unknown = set(self.quotas) - set(FAMILY_TAGS)
        if unknown:
            raise OutOfRange(f"Unknown family tags in quotas: {sorted(unknown)}")
        if any(w < 0 for w in self.quotas.values()) or sum(self.quotas.values()) <= 0:
            raise OutOfRange("Family quotas must be nonnegative with a positive total")


@dataclass(frozen=True)
class SampledState:
    state_id: int
    family_tag: str
    rho: DensityMatrix
    params: Tuple[float, ...] = ()


def _check_probability(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise OutOfRange(f"{name} must lie in [0, 1], got {value}")


def _projector(vector: np.ndarray) -> np.ndarray:
    return np.outer(vector, np.conj(vector))


def _basis(index: int) -> np.ndarray:
    e = np.zeros(4, dtype=complex)
    e[index] = 1.0
    return e


# Family constructors


def bell_state(k: int) -> PureState:
    """|Ψ₁⟩ (singlet), |Ψ₂⟩ = Φ⁺, or |Ψ₃⟩ = (I⊗H)|Ψ₂⟩.

    Raises:
        BadIndex: If k is not 1, 2 or 3.
    """
    if k == 1:
        return PureState(np.array([0, SQRT_HALF, -SQRT_HALF, 0]))
    psi2 = np.array([SQRT_HALF, 0, 0, SQRT_HALF], dtype=complex)
    if k == 2:
        return PureState(psi2)
    if k == 3:
        return PureState(kron(IDENTITY2, HADAMARD) @ psi2)
    raise BadIndex(f"Bell state index must be 1, 2 or 3, got {k}")


BELL_BASIS = (
    bell_state(1).amplitudes,
    bell_state(2).amplitudes,
    np.array([SQRT_HALF, 0, 0, -SQRT_HALF], dtype=complex),
    np.array([0, SQRT_HALF, SQRT_HALF, 0], dtype=complex),
)


def tilde_psi(p: float) -> PureState:
    """√p|01⟩ + √(1−p)|10⟩."""
    _check_probability("p", p)
    return PureState(np.array([0, np.sqrt(p), np.sqrt(1 - p), 0]))


def schmidt_state(theta: float) -> PureState:
    """cos θ|00⟩ + sin θ|11⟩."""
    return PureState(np.array([np.cos(theta), 0, 0, np.sin(theta)]))


def werner(k: int, p: float) -> DensityMatrix:
    """p|Ψₖ⟩⟨Ψₖ| + (1−p)I/4."""
    _check_probability("p", p)
    psi = bell_state(k).amplitudes
    return DensityMatrix(p * _projector(psi) + (1 - p) * np.eye(4) / 4)


def horodecki(p: float) -> DensityMatrix:
    """p|Ψ₁⟩⟨Ψ₁| + (1−p)|00⟩⟨00|."""
    _check_probability("p", p)
    return DensityMatrix(p * _projector(BELL_BASIS[0]) + (1 - p) * _projector(_basis(0)))


def horodecki_negativity(p: float) -> float:
    _check_probability("p", p)
    return float(np.sqrt((1 - p) ** 2 + p**2) - (1 - p))


def horodecki_p_of_negativity(negativity: float) -> float:
    """Inverse of the Horodecki negativity curve: p = √(2N(1+N)) − N."""
    _check_probability("N", negativity)
    return float(np.sqrt(2 * negativity * (1 + negativity)) - negativity)


def horodecki_css(p: float) -> DensityMatrix:
    """Closest separable state of horodecki(p), with q = p/2."""
    _check_probability("p", p)
    q = p / 2
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = (1 - q) ** 2
    m[3, 3] = q**2
    m[1, 1] = m[2, 2] = q * (1 - q)
    m[1, 2] = m[2, 1] = -q * (1 - q)
    return DensityMatrix(m)


def hprime_mixing(p: float, negativity: float) -> float:
    """Mixing weight x of the CSS in hprime(p, N).

    Raises:
        OutOfRange: Unless √(2N(1+N)) − N ≤ p ≤ 1, i.e. x ∈ [0, 1].
    """
    _check_probability("p", p)
    _check_probability("N", negativity)
    tol = get_policy().structural_tol
    p_min = horodecki_p_of_negativity(negativity)
    if p < p_min - tol:
        raise OutOfRange(f"p = {p} is below the minimum {p_min:.12g} for N = {negativity}")
    if p == 0:
        # only N = 0 reaches here; horodecki(0) and its CSS coincide
        return 0.0
    n = negativity
    x = ((n + p) ** 2 - 2 * n * (1 + n)) / (p**2 * (1 + n))
    if x < -tol or x > 1 + tol:
        raise OutOfRange(f"(p={p}, N={negativity}) gives mixing weight {x} outside [0, 1]")
    return float(min(max(x, 0.0), 1.0))


def hprime(p: float, negativity: float) -> DensityMatrix:
    """Horodecki state mixed with its CSS so that its negativity equals ``negativity``."""
    x = hprime_mixing(p, negativity)
    return DensityMatrix((1 - x) * horodecki(p).matrix + x * horodecki_css(p).matrix)


def bell_diagonal(spec: Union[BellDiagonalSpectrum, Sequence[float]]) -> DensityMatrix:
    if not isinstance(spec, BellDiagonalSpectrum):
        spec = BellDiagonalSpectrum(tuple(spec))
    m = sum(weight * _projector(vector) for weight, vector in zip(spec.lambdas, BELL_BASIS))
    return DensityMatrix(m)


def schmidt_dephased(theta: float, x: float) -> DensityMatrix:
    """(1−x)|ψ⟩⟨ψ| + x·(cos²θ|00⟩⟨00| + sin²θ|11⟩⟨11|) with ψ = cos θ|00⟩ + sin θ|11⟩."""
    _check_probability("x", x)
    psi = schmidt_state(theta).amplitudes
    dephased = np.diag(np.abs(psi) ** 2).astype(complex)
    return DensityMatrix((1 - x) * _projector(psi) + x * dephased)


def generalized_horodecki(s: float, a: float) -> DensityMatrix:
    """s|ψₐ⟩⟨ψₐ| + (1−s)|00⟩⟨00| with ψₐ = a|01⟩ − √(1−a²)|10⟩."""
    _check_probability("s", s)
    _check_probability("a", a)
    psi = np.array([0, a, -np.sqrt(1 - a**2), 0], dtype=complex)
    return DensityMatrix(s * _projector(psi) + (1 - s) * _projector(_basis(0)))


def x_state(populations: Sequence[float], coherence: complex) -> DensityMatrix:
    """Diagonal populations (p00, p01, p10, p11) plus a |01⟩⟨10| coherence."""
    m = np.diag(np.asarray(populations, dtype=complex))
    m[1, 2] = coherence
    m[2, 1] = np.conj(coherence)
    return DensityMatrix(m)


# Randomness


def state_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for one stream index; independent of partitioning."""
    mask = (1 << 64) - 1
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & mask, index])))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with the phase fix."""
    q, r = np.linalg.qr(complex_gaussian(rng, (dim, dim)))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def local_unitary(rng: np.random.Generator) -> np.ndarray:
    return kron(random_unitary(rng), random_unitary(rng))


def induced(rng: np.random.Generator, ancilla: int = 4) -> DensityMatrix:
    """GG†/Tr(GG†) for a 4×K complex Ginibre G (K = 4 is Hilbert–Schmidt)."""
    g = complex_gaussian(rng, (4, ancilla))
    rho = g @ dagger(g)
    return DensityMatrix(rho / np.trace(rho).real)


def ginibre(rng: np.random.Generator) -> DensityMatrix:
    return induced(rng, 4)


def haar_pure(rng: np.random.Generator) -> PureState:
    return PureState.normalized(complex_gaussian(rng, 4))


def _family_draw(tag: str, rng: np.random.Generator) -> Tuple[DensityMatrix, Tuple[float, ...]]:
    if tag == "ginibre":
        return ginibre(rng), ()
    if tag == "haar-pure":
        return haar_pure(rng).density(), ()
    if tag == "horodecki":
        p = float(rng.uniform())
        return horodecki(p), (p,)
    if tag == "werner":
        k = int(rng.integers(1, 4))
        p = float(rng.uniform())
        return werner(k, p), (float(k), p)
    if tag == "hprime":
        # Small negativities are where the mixture beats pure states
        n = float(rng.uniform(0.0, 0.6))
        p = float(rng.uniform(horodecki_p_of_negativity(n), 1.0))
        return hprime(p, n), (p, n)
    if tag == "bell-diagonal":
        lambdas = tuple(float(v) for v in rng.dirichlet(np.ones(4)))
        lambdas = lambdas[:3] + (max(0.0, 1.0 - sum(lambdas[:3])),)
        return bell_diagonal(lambdas), lambdas
    if tag == "maxcorr":
        theta = float(rng.uniform(0.0, np.pi / 4))
        x = float(rng.uniform())
        return schmidt_dephased(theta, x), (theta, x)
    if tag == "xstate":
        pops = rng.dirichlet(np.ones(4))
        magnitude = float(rng.uniform()) * np.sqrt(pops[1] * pops[2])
        phase = float(rng.uniform(0.0, 2 * np.pi))
        return x_state(pops, magnitude * np.exp(1j * phase)), tuple(float(v) for v in pops) + (
            magnitude,
            phase,
        )
    raise OutOfRange(f"Unknown family tag {tag!r}")


def sample_state(cfg: SamplerConfig, index: int) -> SampledState:
    """Draw the state with stream index ``index``; a pure function of (seed, index)."""
    rng = state_rng(cfg.seed, index)
    if cfg.method == "ginibre":
        return SampledState(index, "ginibre", ginibre(rng))
    if cfg.method == "induced":
        rho = induced(rng, cfg.ancilla)
        return SampledState(index, f"induced-{cfg.ancilla}", rho, (cfg.ancilla,))
    if cfg.method == "haar-pure":
        return SampledState(index, "haar-pure", haar_pure(rng).density())

    tags = [t for t in FAMILY_TAGS if cfg.quotas.get(t, 0.0) > 0]
    weights = np.array([cfg.quotas[t] for t in tags], dtype=float)
    tag = tags[int(rng.choice(len(tags), p=weights / weights.sum()))]
    rho, params = _family_draw(tag, rng)
    return SampledState(index, tag, rho, params)


def sample_states(cfg: SamplerConfig) -> Iterator[SampledState]:
    """Yield this worker's share of the stream, in index order."""
    logger.debug(
        f"Sampling {cfg.method} states: seed={cfg.seed}, count={cfg.count}, "
        f"partition {cfg.worker}/{cfg.workers}"
    )
    for index in range(cfg.worker, cfg.count, cfg.workers):
        yield sample_state(cfg, index)


def conjugate(rho: StateLike, unitary: np.ndarray) -> DensityMatrix:
    m = as_matrix(rho)
    return DensityMatrix(unitary @ m @ dagger(unitary))


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(np.eye(4, dtype=complex) / 4)


def product_state(a: Sequence[complex], b: Sequence[complex]) -> PureState:
    return PureState.normalized(np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)))


def family_state(name: str, params: Sequence[float]) -> DensityMatrix:
    """Build a named family member from CLI-style positional parameters.

    Args:
        name: One of bell, werner, horodecki, hprime, belldiag, tildepsi, maxcorr.
        params: The family's numeric parameters.

    Returns:
        The constructed DensityMatrix.

    Raises:
        OutOfRange: If the name is unknown or the parameter count is wrong.
    """
    arity = {
        "bell": 1,
        "werner": 2,
        "horodecki": 1,
        "hprime": 2,
        "belldiag": 4,
        "tildepsi": 1,
        "maxcorr": 2,
    }
    if name not in arity:
        raise OutOfRange(f"Unknown family {name!r}; choose from {sorted(arity)}")
    if len(params) != arity[name]:
        raise OutOfRange(f"Family {name!r} takes {arity[name]} parameter(s), got {len(params)}")
    if name == "bell":
        return bell_state(int(params[0])).density()
    if name == "werner":
        return werner(int(params[0]), params[1])
    if name == "horodecki":
        return horodecki(params[0])
    if name == "hprime":
        return hprime(params[0], params[1])
    if name == "belldiag":
        return bell_diagonal(tuple(params))
    if name == "tildepsi":
        return tilde_psi(params[0]).density()
    return schmidt_dephased(params[0], params[1])


def family_tag_of(name: str) -> Optional[str]:
    """Map a CLI family name to the sampler tag that carries the same analytic REE."""
    return {
        "bell": "haar-pure",
        "tildepsi": "haar-pure",
        "werner": "werner",
        "horodecki": "horodecki",
        "hprime": "hprime",
        "belldiag": "bell-diagonal",
        "maxcorr": "maxcorr",
    }.get(name)
