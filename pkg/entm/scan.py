"""Monte Carlo measure survey, bound envelopes and the state-ordering classifier."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from math import ceil
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .exceptions import DeadZone, EmptyInput, NotFound, OutOfRange
from .measures import MEASURE_NAMES, MeasureRecord, all_measures, wootters_w
from .ree import (
    ReeSolverConfig,
    ree_auto,
    ree_bell_diagonal,
    ree_horodecki,
    ree_hprime,
    ree_reduced,
    relative_entropy,
)
from .states import (
    BellDiagonalSpectrum,
    DensityMatrix,
    SamplerConfig,
    bell_diagonal,
    generalized_horodecki,
    horodecki,
    horodecki_p_of_negativity,
    hprime,
    sample_states,
    schmidt_state,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScanRecord:
    state_id: int
    family_tag: str
    purity: float
    measures: MeasureRecord
    params: Tuple[float, ...] = ()

    @property
    def flagged(self) -> bool:
        """True when a numeric REE stopped on its budget."""
        return self.measures.ree_converged is False


class Sign(str, Enum):
    LT = "LT"
    EQ = "EQ"
    GT = "GT"

    def flipped(self) -> "Sign":
        return {Sign.LT: Sign.GT, Sign.GT: Sign.LT, Sign.EQ: Sign.EQ}[self]


@dataclass(frozen=True)
class OrderingClass:
    """Signs of (ΔC, ΔN, ΔE_R) for a pair (ρ′, ρ″), Δ = value(ρ′) − value(ρ″)."""

    signs: Tuple[Sign, Sign, Sign]

    @classmethod
    def of(cls, *names: str) -> "OrderingClass":
        return cls(tuple(Sign(n) for n in names))

    @property
    def consistent(self) -> bool:
        return len(set(self.signs)) == 1

    def flipped(self) -> "OrderingClass":
        return OrderingClass(tuple(s.flipped() for s in self.signs))

    def __str__(self):
        return ",".join(s.value for s in self.signs)


PARADOX_PATTERNS = (
    OrderingClass.of("LT", "LT", "GT"),
    OrderingClass.of("LT", "GT", "LT"),
    OrderingClass.of("GT", "LT", "LT"),
    OrderingClass.of("EQ", "LT", "GT"),
    OrderingClass.of("LT", "EQ", "GT"),
    OrderingClass.of("LT", "GT", "EQ"),
    OrderingClass.of("EQ", "EQ", "LT"),
    OrderingClass.of("EQ", "LT", "EQ"),
    OrderingClass.of("LT", "EQ", "EQ"),
)


@dataclass(frozen=True)
class OrderingTolerance:
    tol_eq: float = 1e-4
    tol_strict: float = 1e-3

    def __post_init__(self):
        if not 0 < self.tol_eq <= self.tol_strict:
            raise OutOfRange("Need 0 < tol_eq <= tol_strict")


@dataclass(frozen=True)
class PairClassification:
    ordering: OrderingClass
    deltas: Tuple[float, float, float]
    b_delta: float
    b_witness: bool

    @property
    def consistent(self) -> bool:
        return self.ordering.consistent

    @property
    def paradoxical(self) -> bool:
        return not self.ordering.consistent


@dataclass
class Envelope:
    x_measure: str
    y_measure: str
    edges: np.ndarray
    counts: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lower_ids: np.ndarray
    upper_ids: np.ndarray
    curves: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def midpoints(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2


@dataclass(frozen=True)
class DominanceViolation:
    state_id: int
    relation: str
    excess: float


# Survey


def _werner_ree(p: float) -> float:
    tail = (1 - p) / 4
    return ree_bell_diagonal((1 - 3 * tail, tail, tail, tail))


def analytic_ree(tag: str, params: Sequence[float], rho: DensityMatrix) -> Optional[float]:
    """Closed-form E_R for sampler families that have one, else None."""
    if tag == "horodecki":
        return ree_horodecki(params[0])
    if tag == "werner":
        return _werner_ree(params[1])
    if tag == "hprime":
        return ree_hprime(params[0], params[1])
    if tag == "bell-diagonal":
        return ree_bell_diagonal(params)
    if tag == "maxcorr":
        # Dephasing in the Schmidt basis gives the closest separable state
        psi = schmidt_state(params[0]).amplitudes
        return relative_entropy(rho, np.diag(np.abs(psi) ** 2))
    return None


def run_scan(
    cfg: SamplerConfig,
    with_ree: bool = False,
    ree_budget: Optional[int] = None,
    solver: Optional[ReeSolverConfig] = None,
) -> Iterator[ScanRecord]:
    """Measure every state in this worker's share of the sampler stream.

    Args:
        cfg: Sampler settings (its worker/workers fields select the partition).
        with_ree: Also run the REE solvers on states without a closed form.
        ree_budget: Cap on solver runs per scan; states are picked by a
            state_id stride so the choice does not depend on partitioning.
        solver: Numeric REE settings.

    Yields:
        ScanRecord per state, in state_id order.
    """
    stride = max(1, ceil(cfg.count / ree_budget)) if ree_budget else 1
    for sampled in sample_states(cfg):
        rho = sampled.rho
        known = None
        value = analytic_ree(sampled.family_tag, sampled.params, rho)
        if value is not None:
            known = (value, "analytic", True)
        elif with_ree and sampled.state_id % stride == 0:
            candidate = ree_auto(rho, solver)
            known = (candidate.value, candidate.method, candidate.converged)
            if not candidate.converged:
                logger.warning(f"State {sampled.state_id}: REE budget exhausted, record flagged")
        measures = all_measures(rho, known_ree=known)
        yield ScanRecord(sampled.state_id, sampled.family_tag, rho.purity, measures, sampled.params)


def _scan_partition(cfg: SamplerConfig, with_ree: bool, ree_budget, solver) -> List[ScanRecord]:
    return list(run_scan(cfg, with_ree, ree_budget, solver))


def scan_records(
    cfg: SamplerConfig,
    with_ree: bool = False,
    ree_budget: Optional[int] = None,
    solver: Optional[ReeSolverConfig] = None,
    workers: int = 1,
) -> List[ScanRecord]:
    """Run the whole scan, optionally over worker processes; output is in state_id order."""
    if workers <= 1:
        records = _scan_partition(replace(cfg, worker=0, workers=1), with_ree, ree_budget, solver)
    else:
        parts = [replace(cfg, worker=w, workers=workers) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_scan_partition, p, with_ree, ree_budget, solver) for p in parts]
            records = [record for f in futures for record in f.result()]
    records.sort(key=lambda r: r.state_id)
    logger.info(f"Scanned {len(records)} {cfg.method} states (seed {cfg.seed})")
    return records


def dominance_violations(
    records: Iterable[ScanRecord], tol: float = 1e-9, ree_tol: float = 2e-3
) -> List[DominanceViolation]:
    """Every breach of N ≤ C, B ≤ C, B ≤ N (and E_R ≤ W(C) where E_R is known)."""
    violations = []
    for record in records:
        m = record.measures
        checks = [("N<=C", m.n - m.c, tol), ("B<=C", m.b - m.c, tol), ("B<=N", m.b - m.n, tol)]
        if m.e_r is not None:
            checks.append(("E_R<=W(C)", m.e_r - m.e_f, ree_tol))
        for relation, excess, slack in checks:
            if excess > slack:
                violations.append(DominanceViolation(record.state_id, relation, float(excess)))
    if violations:
        logger.warning(f"{len(violations)} dominance violation(s) found")
    return violations


# Envelopes


def _pure_curve(x: str, y: str) -> Optional[Callable[[float], float]]:
    ebit_like = ("C", "N", "B")
    if x in ebit_like and y in ebit_like:
        return lambda v: v
    if x in ebit_like and y in ("E_R", "E_F"):
        return wootters_w
    if x in ebit_like and y == "E_PPT":
        return lambda v: float(np.log2(1 + v))
    return None


def _horodecki_measures(p: float) -> Dict[str, float]:
    record = all_measures(horodecki(p), known_ree=(ree_horodecki(p), "analytic", True))
    return {name: record.value(name) for name in MEASURE_NAMES}


def _horodecki_curve(x: str, y: str, at: np.ndarray) -> np.ndarray:
    grid = [_horodecki_measures(p) for p in np.linspace(0.0, 1.0, 401)]
    xs = np.array([g[x] for g in grid])
    ys = np.array([g[y] for g in grid])
    keep = np.concatenate([[True], np.diff(xs) > 0])
    xs, ys = xs[keep], ys[keep]
    curve = np.interp(at, xs, ys)
    curve[(at < xs[0]) | (at > xs[-1])] = np.nan
    return curve


def verstraete_lower_bound(c: float) -> float:
    """Smallest negativity compatible with concurrence c."""
    return float(np.sqrt((1 - c) ** 2 + c**2) - (1 - c))


def extract_envelope(
    records: Sequence[ScanRecord], x: str, y: str, bins: int = 50
) -> Envelope:
    """Per-bin min/max of measure ``y`` against measure ``x`` over [0, 1].

    Empty bins hold NaN extrema and witness id −1. Companion analytic curves
    (pure states, Horodecki family, and for N vs C the lower bound) are
    evaluated at the bin midpoints.

    Raises:
        EmptyInput: If no record carries both measures.
    """
    if x not in MEASURE_NAMES or y not in MEASURE_NAMES:
        raise OutOfRange(f"Measures must be among {MEASURE_NAMES}")
    usable = [
        r for r in records if r.measures.value(x) is not None and r.measures.value(y) is not None
    ]
    if not usable:
        raise EmptyInput(f"No records carry both {x} and {y}")

    xs = np.array([r.measures.value(x) for r in usable])
    ys = np.array([r.measures.value(y) for r in usable])
    ids = np.array([r.state_id for r in usable])
    edges = np.linspace(0.0, 1.0, bins + 1)
    which = np.clip(np.searchsorted(edges, xs, side="right") - 1, 0, bins - 1)

    lower = np.full(bins, np.nan)
    upper = np.full(bins, np.nan)
    lower_ids = np.full(bins, -1, dtype=np.int64)
    upper_ids = np.full(bins, -1, dtype=np.int64)
    counts = np.bincount(which, minlength=bins)
    for b in np.flatnonzero(counts):
        members = np.flatnonzero(which == b)
        lo = members[np.argmin(ys[members])]
        hi = members[np.argmax(ys[members])]
        lower[b], lower_ids[b] = ys[lo], ids[lo]
        upper[b], upper_ids[b] = ys[hi], ids[hi]

    envelope = Envelope(x, y, edges, counts, lower, upper, lower_ids, upper_ids)
    mid = envelope.midpoints
    pure = _pure_curve(x, y)
    if pure is not None:
        envelope.curves["pure"] = np.array([pure(v) for v in mid])
    envelope.curves["horodecki"] = _horodecki_curve(x, y, mid)
    if (x, y) == ("C", "N"):
        envelope.curves["verstraete"] = np.array([verstraete_lower_bound(v) for v in mid])
    logger.debug(f"Envelope {y} vs {x}: {int(np.sum(counts > 0))}/{bins} bins populated")
    return envelope


def mixed_beats_pure(
    records: Iterable[ScanRecord], x: str = "N", margin: float = 0.01
) -> List[ScanRecord]:
    """Records whose E_R exceeds the pure-state value W(x) by more than ``margin``."""
    return [
        r
        for r in records
        if r.measures.e_r is not None and r.measures.e_r > wootters_w(r.measures.value(x)) + margin
    ]


def empirical_crossing(
    records: Sequence[ScanRecord], x: str = "B", bins: int = 50, tol: float = 2e-3
) -> Optional[float]:
    """Upper edge of the last low-x bin where the E_R envelope beats W(x).

    Returns None when no bin rises above the pure-state curve.
    """
    envelope = extract_envelope(records, x, "E_R", bins)
    above = envelope.upper > envelope.curves["pure"] + tol
    if not np.any(above):
        return None
    # The first run of violating bins starting from the low end
    start = int(np.argmax(above))
    end = start
    while end + 1 < bins and above[end + 1]:
        end += 1
    return float(envelope.edges[end + 1])


# Ordering classification


def _measures_of(record) -> MeasureRecord:
    return record.measures if isinstance(record, ScanRecord) else record


def _sign(delta: float, tol: OrderingTolerance) -> Optional[Sign]:
    if abs(delta) <= tol.tol_eq:
        return Sign.EQ
    if delta > tol.tol_strict:
        return Sign.GT
    if delta < -tol.tol_strict:
        return Sign.LT
    return None


def classify_pair(a, b, tol: Optional[OrderingTolerance] = None) -> PairClassification:
    """Sign triple of (ΔC, ΔN, ΔE_R) with Δ = a − b.

    Raises:
        DeadZone: If a difference lies between tol_eq and tol_strict.
        OutOfRange: If a record has no E_R.
    """
    tol = tol or OrderingTolerance()
    ma, mb = _measures_of(a), _measures_of(b)
    if ma.e_r is None or mb.e_r is None:
        raise OutOfRange("Both records need E_R to be classified")
    deltas = (ma.c - mb.c, ma.n - mb.n, ma.e_r - mb.e_r)
    signs = tuple(_sign(d, tol) for d in deltas)
    if any(s is None for s in signs):
        raise DeadZone(f"Differences {deltas} fall between tol_eq and tol_strict")
    b_delta = ma.b - mb.b
    return PairClassification(OrderingClass(signs), deltas, b_delta, abs(b_delta) > tol.tol_strict)


def _codes(deltas: np.ndarray, tol: OrderingTolerance) -> np.ndarray:
    codes = np.full(deltas.shape, 9, dtype=np.int8)
    codes[np.abs(deltas) <= tol.tol_eq] = 0
    codes[deltas > tol.tol_strict] = 1
    codes[deltas < -tol.tol_strict] = -1
    return codes


_SIGN_CODE = {Sign.LT: -1, Sign.EQ: 0, Sign.GT: 1}


def find_ordering_examples(
    records: Sequence[ScanRecord],
    targets: Iterable[OrderingClass] = PARADOX_PATTERNS,
    tol: Optional[OrderingTolerance] = None,
    max_pairs: int = 3,
    window: int = 64,
) -> Dict[OrderingClass, List[Tuple[ScanRecord, ScanRecord]]]:
    """Search neighboring records (in each measure's sort order) for each target pattern.

    Pairs within ``window`` positions of each other after sorting by C, N or
    E_R are screened in bulk, then confirmed with classify_pair. Records
    without E_R and fully separable records are skipped.

    Returns:
        Map from each target to up to ``max_pairs`` witness pairs (empty when
        none were found).
    """
    tol = tol or OrderingTolerance()
    targets = list(targets)
    found: Dict[OrderingClass, List[Tuple[ScanRecord, ScanRecord]]] = {t: [] for t in targets}
    usable = sorted(
        (
            r
            for r in records
            if r.measures.e_r is not None
            and max(r.measures.c, r.measures.n, r.measures.e_r) > tol.tol_eq
        ),
        key=lambda r: r.state_id,
    )
    if len(usable) < 2:
        return found

    values = np.array([[r.measures.c, r.measures.n, r.measures.e_r] for r in usable])
    wanted = {t: np.array([_SIGN_CODE[s] for s in t.signs], dtype=np.int8) for t in targets}
    seen = set()

    for column in range(3):
        order = np.argsort(values[:, column], kind="stable")
        for offset in range(1, min(window, len(usable) - 1) + 1):
            first, second = order[:-offset], order[offset:]
            codes = _codes(values[first] - values[second], tol)
            for target, pattern in wanted.items():
                if len(found[target]) >= max_pairs:
                    continue
                forward = np.flatnonzero(np.all(codes == pattern, axis=1))
                backward = np.flatnonzero(np.all(codes == -pattern, axis=1))
                candidates = [(first[i], second[i]) for i in forward]
                candidates += [(second[i], first[i]) for i in backward]
                for i, j in candidates:
                    if len(found[target]) >= max_pairs or (target, i, j) in seen:
                        continue
                    seen.add((target, i, j))
                    try:
                        result = classify_pair(usable[i], usable[j], tol)
                    except DeadZone:
                        continue
                    if result.ordering == target:
                        found[target].append((usable[i], usable[j]))
        if all(len(pairs) >= max_pairs for pairs in found.values()):
            break

    missing = [str(t) for t, pairs in found.items() if not pairs]
    if missing:
        logger.info(f"No witnesses found for: {'; '.join(missing)}")
    return found


# Constructed witnesses


def _record(tag: str, rho: DensityMatrix, e_r: float, method: str, state_id: int, params=()):
    measures = all_measures(rho, known_ree=(e_r, method, True))
    return ScanRecord(state_id, tag, rho.purity, measures, tuple(float(p) for p in params))


def _pure_record(c: float, state_id: int) -> ScanRecord:
    rho = schmidt_state(np.arcsin(c) / 2).density()
    return _record("constructed:pure", rho, wootters_w(c), "analytic", state_id, (c,))


def _bell_record(c: float, state_id: int) -> ScanRecord:
    top = (1 + c) / 2
    rest = (1 - top) / 3
    spec = BellDiagonalSpectrum((top, rest, rest, 1 - top - 2 * rest))
    return _record(
        "constructed:bell-diagonal",
        bell_diagonal(spec),
        ree_bell_diagonal(spec),
        "analytic",
        state_id,
        spec.lambdas,
    )


def _horodecki_record(p: float, state_id: int) -> ScanRecord:
    rho = horodecki(p)
    return _record("constructed:horodecki", rho, ree_horodecki(p), "analytic", state_id, (p,))


def _hprime_record(p: float, n: float, state_id: int) -> ScanRecord:
    rho = hprime(p, n)
    return _record("constructed:hprime", rho, ree_hprime(p, n), "analytic", state_id, (p, n))


def _fixed_concurrence_state(c: float, t: float) -> Tuple[float, float]:
    """(s, a) of the generalized Horodecki state with concurrence c and a·√(1−a²) = t."""
    s = c / (2 * t)
    a = np.sqrt((1 + np.sqrt(max(0.0, 1 - 4 * t * t))) / 2)
    return min(s, 1.0), float(a)


def _generalized_record(c: float, target_ree: float, state_id: int) -> ScanRecord:
    def gap(t: float) -> float:
        s, a = _fixed_concurrence_state(c, t)
        return ree_reduced(generalized_horodecki(s, a)).value - target_ree

    t = brentq(gap, c / 2, 0.5, xtol=1e-12)
    s, a = _fixed_concurrence_state(c, t)
    rho = generalized_horodecki(s, a)
    candidate = ree_reduced(rho)
    tag = "constructed:generalized-horodecki"
    return _record(tag, rho, candidate.value, "reduced", state_id, (s, a))


def constructed_witness_records(
    tol: Optional[OrderingTolerance] = None,
) -> Dict[OrderingClass, Tuple[ScanRecord, ScanRecord]]:
    """One deterministic witness pair for each of the nine mixed ordering patterns.

    Built from pure, Bell-diagonal, Horodecki, hprime and generalized Horodecki
    states; equalities are met by root solves on the analytic curves.
    """
    tol = tol or OrderingTolerance()
    c = 0.3
    e_bell = ree_bell_diagonal(((1 + c) / 2, (1 - c) / 6, (1 - c) / 6, (1 - c) / 6))

    p_half = 0.5
    c_equal_ree = brentq(lambda v: wootters_w(v) - ree_horodecki(p_half), 0.0, 1.0, xtol=1e-14)

    n_low = 0.2
    p_low = horodecki_p_of_negativity(n_low)
    p_star = brentq(
        lambda p: ree_hprime(p, n_low) - wootters_w(n_low), p_low + 1e-12, 1.0, xtol=1e-14
    )

    pairs = {
        PARADOX_PATTERNS[0]: (_pure_record(0.15, -1), _bell_record(0.2, -2)),
        PARADOX_PATTERNS[1]: (_pure_record(0.22, -3), _horodecki_record(p_low, -4)),
        PARADOX_PATTERNS[2]: (_hprime_record(0.8, n_low, -5), _pure_record(0.21, -6)),
        PARADOX_PATTERNS[3]: (_generalized_record(c, e_bell + 0.01, -7), _bell_record(c, -8)),
        PARADOX_PATTERNS[4]: (_pure_record(n_low, -9), _hprime_record(0.8, n_low, -10)),
        PARADOX_PATTERNS[5]: (_pure_record(c_equal_ree, -11), _horodecki_record(p_half, -12)),
        PARADOX_PATTERNS[6]: (_bell_record(c, -13), _pure_record(c, -14)),
        PARADOX_PATTERNS[7]: (_generalized_record(c, e_bell, -15), _bell_record(c, -16)),
        PARADOX_PATTERNS[8]: (_pure_record(n_low, -17), _hprime_record(p_star, n_low, -18)),
    }

    verified = {}
    for pattern, (a, b) in pairs.items():
        try:
            result = classify_pair(a, b, tol)
        except DeadZone as e:
            logger.warning(f"Constructed witness for {pattern} is unclassifiable: {e}")
            continue
        if result.ordering != pattern:
            logger.warning(f"Constructed witness for {pattern} classified as {result.ordering}")
            continue
        verified[pattern] = (a, b)
    return verified


# Bell-diagonal nonequivalence


def bell_diagonal_nonequivalence(
    lambda_max: float, seed: int = 0, margin: float = 0.05, tries: int = 64
) -> Tuple[BellDiagonalSpectrum, BellDiagonalSpectrum]:
    """Two Bell-diagonal spectra with the same λ_max but B values apart by > ``margin``.

    The two extreme tails (all weight on one projector, or spread evenly) are
    compared against ``tries`` seeded random tails; the widest B gap wins.

    Raises:
        OutOfRange: Unless 1/2 < lambda_max < 1.
        NotFound: If no pair separates B by more than ``margin``.
    """
    from .measures import nonlocality_bell_diagonal

    if not 0.5 < lambda_max < 1.0:
        raise OutOfRange(f"lambda_max must lie in (1/2, 1), got {lambda_max}")
    rest = 1.0 - lambda_max

    def spectrum(tail: Sequence[float]) -> BellDiagonalSpectrum:
        tail = list(tail)
        tail[-1] = max(0.0, rest - sum(tail[:-1]))
        return BellDiagonalSpectrum((lambda_max, *tail))

    candidates = [spectrum((rest, 0.0, 0.0)), spectrum((rest / 3,) * 3)]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0])))
    for _ in range(tries):
        tail = rng.dirichlet(np.ones(3)) * rest
        if tail.max() < lambda_max:
            candidates.append(spectrum(tail))

    b_values = [nonlocality_bell_diagonal(s) for s in candidates]
    hi = int(np.argmax(b_values))
    lo = int(np.argmin(b_values))
    gap = b_values[hi] - b_values[lo]
    if gap <= margin:
        raise NotFound(f"B values differ by only {gap:.3g} at lambda_max={lambda_max}", margin=gap)
    logger.debug(f"Bell-diagonal pair at lambda_max={lambda_max}: B gap {gap:.6f}")
    return candidates[hi], candidates[lo]


def crossing_table(points: int = 21) -> List[Tuple[float, float, float]]:
    """(N, E_R of the Horodecki state, W(N)) along the negativity axis."""
    rows = []
    for n in np.linspace(0.0, 1.0, points):
        rows.append((float(n), ree_horodecki(horodecki_p_of_negativity(n)), wootters_w(n)))
    return rows
