import unittest
from dataclasses import replace

import numpy as np

from entm.exceptions import DeadZone, EmptyInput, OutOfRange
from entm.measures import all_measures, nonlocality_bell_diagonal, wootters_w
from entm.ree import ReeSolverConfig, ree_bell_diagonal, ree_horodecki, ree_hprime
from entm.scan import (
    PARADOX_PATTERNS,
    OrderingClass,
    OrderingTolerance,
    ScanRecord,
    Sign,
    analytic_ree,
    bell_diagonal_nonequivalence,
    classify_pair,
    constructed_witness_records,
    crossing_table,
    dominance_violations,
    empirical_crossing,
    extract_envelope,
    find_ordering_examples,
    mixed_beats_pure,
    scan_records,
    verstraete_lower_bound,
)
from entm.states import (
    SamplerConfig,
    horodecki,
    horodecki_p_of_negativity,
    hprime,
    schmidt_state,
    werner,
)


def pure_record(c: float, state_id: int) -> ScanRecord:
    rho = schmidt_state(np.arcsin(c) / 2).density()
    measures = all_measures(rho, known_ree=(wootters_w(c), "analytic", True))
    return ScanRecord(state_id, "haar-pure", rho.purity, measures)


class TestSurvey(unittest.TestCase):
    """
    Test cases for the Monte Carlo survey and its dominance check.
    """

    def test_analytic_ree_by_family(self):
        """
        Test that closed forms are used for Horodecki and Werner draws, and Ginibre has none.
        """
        self.assertEqual(analytic_ree("horodecki", (0.5,), horodecki(0.5)), ree_horodecki(0.5))
        self.assertAlmostEqual(
            analytic_ree("werner", (2.0, 0.8), werner(2, 0.8)),
            ree_bell_diagonal((0.85, 0.05, 0.05, 0.05)),
            places=14,
        )
        self.assertIsNone(analytic_ree("ginibre", (), werner(1, 0.1)))

    def test_family_mix_scan_has_no_dominance_violations(self):
        """
        Test N ≤ C, B ≤ C, B ≤ N and E_R ≤ E_F across a family-mix scan.
        """
        records = scan_records(SamplerConfig(method="family-mix", seed=1, count=400))

        # Assertions
        self.assertEqual([r.state_id for r in records], list(range(400)))
        self.assertEqual(dominance_violations(records), [])
        self.assertTrue(any(r.measures.e_r is not None for r in records))

    def test_dominance_violation_detected(self):
        """
        Test that a record with B above N is reported.
        """
        record = pure_record(0.5, 0)
        broken = replace(record, measures=replace(record.measures, b=0.9))
        violations = dominance_violations([broken])
        self.assertEqual({v.relation for v in violations}, {"B<=C", "B<=N"})

    def test_worker_count_does_not_change_records(self):
        """
        Test that a two-process scan reproduces the single-process scan.
        """
        cfg = SamplerConfig(method="family-mix", seed=7, count=60)
        serial = scan_records(cfg)
        parallel = scan_records(cfg, workers=2)

        # Assertions
        self.assertEqual(len(serial), len(parallel))
        for a, b in zip(serial, parallel):
            self.assertEqual(a.state_id, b.state_id)
            self.assertEqual(a.family_tag, b.family_tag)
            self.assertEqual(a.measures, b.measures)

    def test_ree_budget_strides_over_ids(self):
        """
        Test that a budget of 5 solver runs over 20 Ginibre states fills E_R every fourth id.
        """
        cfg = SamplerConfig(method="ginibre", seed=3, count=20)
        solver = ReeSolverConfig(restarts=1, max_evaluations=200)
        records = scan_records(cfg, with_ree=True, ree_budget=5, solver=solver)
        with_ree = [r.state_id for r in records if r.measures.e_r is not None]
        self.assertEqual(with_ree, [0, 4, 8, 12, 16])


class TestEnvelopes(unittest.TestCase):
    """
    Test cases for per-bin extrema and companion curves.
    """

    @classmethod
    def setUpClass(cls):
        cls.records = scan_records(SamplerConfig(method="ginibre", seed=11, count=1500))

    def test_negativity_envelope_bounds(self):
        """
        Test that N vs C stays between the lower bound and the pure-state line.
        """
        env = extract_envelope(self.records, "C", "N", bins=20)
        filled = env.counts > 0

        # Assertions
        self.assertEqual(int(env.counts.sum()), 1500)
        self.assertTrue(np.all(env.upper[filled] <= env.edges[1:][filled] + 1e-9))
        lower_edges = env.edges[:-1][filled]
        bound = np.array([verstraete_lower_bound(c) for c in lower_edges])
        self.assertTrue(np.all(env.lower[filled] >= bound - 1e-9))
        self.assertTrue(np.all(env.lower_ids[~filled] == -1))
        self.assertTrue(np.all(np.isnan(env.upper[~filled])))
        self.assertIn("verstraete", env.curves)

    def test_lower_bound_endpoints(self):
        """
        Test that the lower bound is 0 at C = 0 and 1 at C = 1.
        """
        self.assertEqual(verstraete_lower_bound(0.0), 0.0)
        self.assertAlmostEqual(verstraete_lower_bound(1.0), 1.0, places=15)

    def test_bad_inputs(self):
        """
        Test EmptyInput for records without E_R and OutOfRange for unknown measures.
        """
        with self.assertRaises(EmptyInput):
            extract_envelope(self.records, "N", "E_R")
        with self.assertRaises(OutOfRange):
            extract_envelope(self.records, "C", "D")

    def test_mixed_states_beat_pure_states(self):
        """
        Test that hprime at N = 0.2 exceeds W(N) by more than 0.03, and pure states never do.
        """
        n = 0.2
        p = horodecki_p_of_negativity(n)
        rho = hprime(p, n)
        measures = all_measures(rho, known_ree=(ree_hprime(p, n), "analytic", True))
        mixed = ScanRecord(0, "hprime", rho.purity, measures, (p, n))
        pure = [pure_record(c, i + 1) for i, c in enumerate(np.linspace(0.05, 0.95, 10))]

        # Assertions
        self.assertEqual(mixed_beats_pure([mixed] + pure, margin=0.03), [mixed])
        self.assertIsNone(empirical_crossing(pure, x="N", bins=10))


class TestOrderingClassification(unittest.TestCase):
    """
    Test cases for sign triples and witness searches.
    """

    def test_consistent_pure_pair(self):
        """
        Test that two pure states order the same way under C, N and E_R.
        """
        result = classify_pair(pure_record(0.2, 0), pure_record(0.3, 1))
        self.assertEqual(result.ordering, OrderingClass.of("LT", "LT", "LT"))
        self.assertTrue(result.consistent)
        self.assertEqual(result.ordering.flipped().signs, (Sign.GT, Sign.GT, Sign.GT))

    def test_dead_zone(self):
        """
        Test that a ΔC between tol_eq and tol_strict raises DeadZone.
        """
        with self.assertRaises(DeadZone):
            classify_pair(pure_record(0.3, 0), pure_record(0.3005, 1))

    def test_missing_ree(self):
        """
        Test that a record without E_R cannot be classified.
        """
        rho = horodecki(0.5)
        bare = ScanRecord(0, "horodecki", rho.purity, all_measures(rho))
        with self.assertRaises(OutOfRange):
            classify_pair(bare, pure_record(0.3, 1))

    def test_tolerance_validation(self):
        """
        Test that tol_eq above tol_strict raises OutOfRange.
        """
        with self.assertRaises(OutOfRange):
            OrderingTolerance(tol_eq=1e-2, tol_strict=1e-3)

    def test_constructed_witnesses_cover_every_pattern(self):
        """
        Test that a deterministic witness pair exists for all nine mixed patterns.
        """
        witnesses = constructed_witness_records()

        # Assertions
        self.assertEqual(set(witnesses), set(PARADOX_PATTERNS))
        for pattern, (a, b) in witnesses.items():
            self.assertEqual(classify_pair(a, b).ordering, pattern)
            self.assertTrue(classify_pair(a, b).paradoxical)

    def test_search_finds_constructed_pairs(self):
        """
        Test that the neighbor search recovers every pattern from the constructed records.
        """
        records = [r for pair in constructed_witness_records().values() for r in pair]
        found = find_ordering_examples(records)
        for pattern in PARADOX_PATTERNS:
            self.assertTrue(found[pattern], msg=str(pattern))

    def test_pure_states_have_no_paradoxes(self):
        """
        Test that a pure-state scan yields no witness for any mixed pattern.
        """
        records = scan_records(SamplerConfig(method="haar-pure", seed=2, count=300), with_ree=True)
        found = find_ordering_examples(records)
        self.assertTrue(all(not pairs for pairs in found.values()))


class TestBellDiagonalAndCrossing(unittest.TestCase):
    """
    Test cases for the Bell-diagonal nonequivalence pair and the crossing table.
    """

    def test_nonequivalent_pair(self):
        """
        Test that two spectra sharing λ_max = 0.7 have B values apart by more than 0.05.
        """
        a, b = bell_diagonal_nonequivalence(0.7)

        # Assertions
        self.assertEqual(a.lambda_max, 0.7)
        self.assertEqual(b.lambda_max, 0.7)
        self.assertGreater(nonlocality_bell_diagonal(a) - nonlocality_bell_diagonal(b), 0.05)
        self.assertAlmostEqual(ree_bell_diagonal(a), ree_bell_diagonal(b), places=14)

    def test_nonequivalent_pair_range(self):
        """
        Test that λ_max ≤ 1/2 raises OutOfRange.
        """
        with self.assertRaises(OutOfRange):
            bell_diagonal_nonequivalence(0.4)

    def test_crossing_table(self):
        """
        Test the table endpoints and that Horodecki E_R is above W(N) at small N.
        """
        rows = crossing_table(21)

        # Assertions
        self.assertEqual(len(rows), 21)
        self.assertEqual(rows[0], (0.0, 0.0, 0.0))
        n, horodecki_ree, pure_ree = rows[4]
        self.assertAlmostEqual(n, 0.2, places=12)
        self.assertGreater(horodecki_ree, pure_ree)


if __name__ == "__main__":
    unittest.main()
