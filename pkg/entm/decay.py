"""Photon-loss decay of two cavity qubits and the robustness orderings it produces.

Each cavity is a zero-temperature amplitude-damping channel with survival
η = e^{−γt}; states are mapped straight from ρ₀ at every grid time.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import GridMismatch, OutOfRange
from .linalg import dagger, kron
from .measures import MeasureRecord, all_measures
from .states import DensityMatrix, StateLike, as_matrix, bell_state, werner

logger = logging.getLogger(__name__)

CHAIN_SLACK = 1e-8


@dataclass(frozen=True)
class InitialState:
    """What a trajectory starts from: ``bell`` k, ``werner`` k p, or an explicit ``matrix``."""

    kind: str
    k: int = 1
    p: float = 1.0
    matrix: Optional[DensityMatrix] = None

    def __post_init__(self):
        if self.kind not in ("bell", "werner", "matrix"):
            raise OutOfRange(f"Unknown initial state kind {self.kind!r}")
        if self.kind == "matrix" and self.matrix is None:
            raise OutOfRange("An explicit initial state needs a matrix")

    @property
    def label(self) -> str:
        if self.kind == "bell":
            return f"bell-{self.k}"
        if self.kind == "werner":
            return f"werner-{self.k}-{self.p:g}"
        return "matrix"

    def build(self) -> DensityMatrix:
        if self.kind == "bell":
            return bell_state(self.k).density()
        if self.kind == "werner":
            return werner(self.k, self.p)
        return self.matrix


@dataclass(frozen=True)
class DecayConfig:
    gamma: float
    t_grid: Tuple[float, ...]
    initial: InitialState

    def __post_init__(self):
        grid = tuple(float(t) for t in self.t_grid)
        if self.gamma <= 0:
            raise OutOfRange(f"gamma must be positive, got {self.gamma}")
        if not grid or grid[0] < 0:
            raise OutOfRange("t_grid must be nonempty and start at t >= 0")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise OutOfRange("t_grid must be strictly increasing")
        object.__setattr__(self, "t_grid", grid)


@dataclass
class Trajectory:
    label: str
    gamma: float
    times: np.ndarray
    eta: np.ndarray
    states: List[DensityMatrix]
    records: List[MeasureRecord]

    @property
    def gamma_t(self) -> np.ndarray:
        return self.gamma * self.times

    def series(self, measure: str) -> np.ndarray:
        return np.array([record.value(measure) for record in self.records], dtype=float)


@dataclass
class ChainCheck:
    name: str
    max_violation: float
    violating_points: int

    @property
    def holds(self) -> bool:
        return self.violating_points == 0


@dataclass
class MesOrderingReport:
    chains: Dict[str, ChainCheck]
    most_fragile: Dict[str, str]

    @property
    def holds(self) -> bool:
        return all(chain.holds for chain in self.chains.values())


@dataclass
class Crossing:
    pair: Tuple[int, int]
    gamma_t: float
    index: int


@dataclass
class WernerReport:
    p: float
    delta_n: Dict[int, np.ndarray]
    initial_spread: float
    crossings: List[Crossing] = field(default_factory=list)

    @property
    def has_crossing(self) -> bool:
        return bool(self.crossings)


def _damping_kraus(eta: float) -> Tuple[np.ndarray, np.ndarray]:
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(eta)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(1.0 - eta)], [0.0, 0.0]], dtype=complex)
    return k0, k1


def amplitude_damping(rho: StateLike, eta: float, eta2: Optional[float] = None) -> DensityMatrix:
    """Apply zero-temperature amplitude damping to both qubits.

    Args:
        rho: Two-qubit state.
        eta: Excitation survival probability of the first qubit (and the
            second unless ``eta2`` is given).
        eta2: Optional separate survival probability for the second qubit.

    Returns:
        The damped DensityMatrix.

    Raises:
        OutOfRange: If a survival probability is outside [0, 1].
    """
    eta2 = eta if eta2 is None else eta2
    for name, value in (("eta", eta), ("eta2", eta2)):
        if not 0.0 <= value <= 1.0:
            raise OutOfRange(f"{name} must lie in [0, 1], got {value}")

    m = as_matrix(rho)
    out = np.zeros((4, 4), dtype=complex)
    for a in _damping_kraus(eta):
        for b in _damping_kraus(eta2):
            k = kron(a, b)
            out += k @ m @ dagger(k)
    return DensityMatrix((out + dagger(out)) / 2)


def rescaled_grid(gamma: float, gamma_t_max: float = 3.0, points: int = 61) -> Tuple[float, ...]:
    """Times covering γt ∈ [0, gamma_t_max] with ``points`` equally spaced samples."""
    if gamma <= 0 or points < 2 or gamma_t_max <= 0:
        raise OutOfRange("Need gamma > 0, gamma_t_max > 0 and at least 2 points")
    return tuple(np.linspace(0.0, gamma_t_max / gamma, points))


def evolve(cfg: DecayConfig, with_ree: bool = False, solver=None) -> Trajectory:
    """Map ρ₀ to every grid time and record its measures."""
    rho0 = cfg.initial.build()
    times = np.array(cfg.t_grid)
    eta = np.exp(-cfg.gamma * times)
    states = [amplitude_damping(rho0, float(e)) for e in eta]
    records = [all_measures(state, with_ree=with_ree, solver=solver) for state in states]
    logger.debug(f"Evolved {cfg.initial.label} over {len(times)} points (gamma={cfg.gamma})")
    return Trajectory(cfg.initial.label, cfg.gamma, times, eta, states, records)


def _check_grid(trajs: Sequence[Trajectory]):
    if len(trajs) != 3:
        raise GridMismatch(f"Expected three trajectories, got {len(trajs)}")
    first = trajs[0]
    for other in trajs[1:]:
        if other.gamma != first.gamma or not np.array_equal(other.times, first.times):
            logger.error(f"Trajectory {other.label} does not share the grid of {first.label}")
            raise GridMismatch("Trajectories must share gamma and t_grid")


def _at_least(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return np.clip(rhs - lhs, 0.0, None)


def _chain(name: str, violation: np.ndarray, slack: float) -> ChainCheck:
    return ChainCheck(name, float(violation.max()), int(np.sum(violation > slack)))


def _most_fragile(series: Sequence[np.ndarray], labels: Sequence[str], slack: float) -> str:
    stacked = np.vstack(series)
    counts = np.zeros(len(series), dtype=int)
    for column in stacked.T[1:]:
        order = np.argsort(column)
        if column[order[1]] - column[order[0]] > slack:
            counts[order[0]] += 1
    return labels[int(np.argmax(counts))] if counts.any() else "none"


def check_mes_ordering(
    trajs: Sequence[Trajectory], slack: float = CHAIN_SLACK
) -> MesOrderingReport:
    """Check N₂ ≥ N₃ ≥ N₁, B₁ = B₂ ≥ B₃ and C₁ ≥ C₃ ≥ C₂ at every grid point.

    Trajectories are taken positionally as k = 1, 2, 3.

    Raises:
        GridMismatch: If the trajectories do not share gamma and times.
    """
    _check_grid(trajs)
    n1, n2, n3 = (t.series("N") for t in trajs)
    b1, b2, b3 = (t.series("B") for t in trajs)
    c1, c2, c3 = (t.series("C") for t in trajs)

    chains = {
        "N2>=N3>=N1": _chain("N2>=N3>=N1", np.maximum(_at_least(n2, n3), _at_least(n3, n1)), slack),
        "B1=B2>=B3": _chain("B1=B2>=B3", np.maximum(np.abs(b1 - b2), _at_least(b2, b3)), slack),
        "C1>=C3>=C2": _chain("C1>=C3>=C2", np.maximum(_at_least(c1, c3), _at_least(c3, c2)), slack),
    }
    labels = [t.label for t in trajs]
    most_fragile = {
        "N": _most_fragile([n1, n2, n3], labels, slack),
        "C": _most_fragile([c1, c2, c3], labels, slack),
        "B": _most_fragile([b1, b2, b3], labels, slack),
    }
    for chain in chains.values():
        if not chain.holds:
            logger.warning(
                f"Ordering {chain.name} violated at {chain.violating_points} points "
                f"(max {chain.max_violation:.3e})"
            )
    return MesOrderingReport(chains, most_fragile)


def werner_robustness(
    trajs: Sequence[Trajectory], p: float = 0.8, tol: float = 1e-12
) -> WernerReport:
    """ΔNₖ = Nₖ − N₁ and every sign change of Nⱼ − Nₖ along the grid.

    Raises:
        GridMismatch: If the trajectories do not share gamma and times.
    """
    _check_grid(trajs)
    negativities = {k: traj.series("N") for k, traj in enumerate(trajs, start=1)}
    delta_n = {k: negativities[k] - negativities[1] for k in negativities}
    gamma_t = trajs[0].gamma_t

    crossings = []
    for j, k in combinations(sorted(negativities), 2):
        diff = negativities[j] - negativities[k]
        significant = np.flatnonzero(np.abs(diff) > tol)
        for before, after in zip(significant, significant[1:]):
            if np.sign(diff[before]) != np.sign(diff[after]):
                # Linear interpolation of the zero between the two samples
                x0, x1 = gamma_t[before], gamma_t[after]
                d0, d1 = diff[before], diff[after]
                zero = float(x0 - d0 * (x1 - x0) / (d1 - d0))
                crossings.append(Crossing((j, k), zero, int(after)))
    initial = [values[0] for values in negativities.values()]
    report = WernerReport(p, delta_n, float(max(initial) - min(initial)), crossings)
    logger.info(f"Werner robustness at p={p}: {len(crossings)} crossing(s)")
    return report
