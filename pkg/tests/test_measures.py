import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from entm.exceptions import MeasureRangeError
from entm.measures import (
    all_measures,
    binary_entropy,
    concurrence,
    correlation_matrix,
    entanglement_of_formation,
    is_pure,
    negativity,
    nonlocality,
    nonlocality_bell_diagonal,
    ppt_cost,
    spin_flip_spectrum,
    wootters_w,
)
from entm.states import (
    SamplerConfig,
    bell_diagonal,
    bell_state,
    conjugate,
    horodecki,
    local_unitary,
    maximally_mixed,
    product_state,
    sample_states,
    state_rng,
    werner,
)


class TestScalarFunctions(unittest.TestCase):
    """
    Test cases for h(y) and W(x).
    """

    def test_binary_entropy(self):
        """
        Test h(0) = h(1) = 0 and h(1/2) = 1.
        """
        self.assertEqual(binary_entropy(0.0), 0.0)
        self.assertEqual(binary_entropy(1.0), 0.0)
        self.assertAlmostEqual(binary_entropy(0.5), 1.0, places=15)

    def test_wootters_w(self):
        """
        Test W(0) = 0, W(1) = 1 and W(0.2) ≈ 0.08147.
        """
        self.assertEqual(wootters_w(0.0), 0.0)
        self.assertAlmostEqual(wootters_w(1.0), 1.0, places=15)
        self.assertAlmostEqual(wootters_w(0.2), 0.08147, places=5)

    def test_roundoff_is_clamped(self):
        """
        Test that tiny excursions are clipped and larger ones raise MeasureRangeError.
        """
        self.assertAlmostEqual(wootters_w(1.0 + 1e-12), 1.0, places=15)
        with self.assertRaises(MeasureRangeError):
            wootters_w(1.5)


class TestMeasuresOnKnownStates(unittest.TestCase):
    """
    Test cases for every measure on states with known values.
    """

    def test_bell_states_are_maximal(self):
        """
        Test C = E_F = N = E_PPT = B = E_R = 1 for every Bell state.
        """
        for k in (1, 2, 3):
            record = all_measures(bell_state(k).density())
            for name in ("C", "E_F", "N", "E_PPT", "B", "E_R"):
                self.assertAlmostEqual(record.value(name), 1.0, places=10, msg=f"{name} k={k}")
            self.assertEqual(record.ree_method, "analytic")

    def test_product_state_is_zero(self):
        """
        Test that |00⟩ has all measures zero and a single correlation singular value.
        """
        rho = product_state([1, 0], [1, 0]).density()
        record = all_measures(rho)

        # Assertions
        self.assertAlmostEqual(record.c, 0.0, places=12)
        self.assertAlmostEqual(record.n, 0.0, places=12)
        self.assertAlmostEqual(record.b, 0.0, places=12)
        np.testing.assert_allclose(correlation_matrix(rho).u, [1.0, 0.0, 0.0], atol=1e-12)

    def test_horodecki_values(self):
        """
        Test C = p and N = √((1−p)² + p²) − (1−p) for the Horodecki state at p = 0.5.
        """
        rho = horodecki(0.5)
        self.assertAlmostEqual(concurrence(rho), 0.5, places=12)
        self.assertAlmostEqual(negativity(rho), 0.207107, places=6)
        self.assertAlmostEqual(ppt_cost(rho), np.log2(1.207106781), places=8)

    def test_bell_diagonal_nonequivalence_pair(self):
        """
        Test that (0.7, 0.3, 0, 0) and (0.7, 0.1, 0.1, 0.1) share C = N = 0.4 but B is 0.4 vs 0.
        """
        a = bell_diagonal((0.7, 0.3, 0.0, 0.0))
        b = bell_diagonal((0.7, 0.1, 0.1, 0.1))

        # Assertions
        for rho in (a, b):
            self.assertAlmostEqual(concurrence(rho), 0.4, places=12)
            self.assertAlmostEqual(negativity(rho), 0.4, places=12)
        self.assertAlmostEqual(nonlocality(a), 0.4, places=10)
        self.assertAlmostEqual(nonlocality(b), 0.0, places=10)
        self.assertAlmostEqual(nonlocality_bell_diagonal((0.7, 0.3, 0.0, 0.0)), 0.4, places=12)
        self.assertAlmostEqual(nonlocality_bell_diagonal((0.7, 0.1, 0.1, 0.1)), 0.0, places=12)

    def test_bell_diagonal_closed_form_matches_correlations(self):
        """
        Test the Bell-diagonal B formula against the correlation-matrix route.
        """
        rng = np.random.default_rng(3)
        for _ in range(50):
            lambdas = rng.dirichlet(np.ones(4))
            lambdas[-1] = 1.0 - lambdas[:3].sum()
            spec = tuple(float(v) for v in lambdas)
            self.assertAlmostEqual(
                nonlocality_bell_diagonal(spec), nonlocality(bell_diagonal(spec)), places=9
            )

    def test_werner_threshold(self):
        """
        Test that Werner states are separable up to p = 1/3 and C = (3p − 1)/2 above it.
        """
        self.assertAlmostEqual(concurrence(werner(1, 0.3)), 0.0, places=12)
        self.assertAlmostEqual(concurrence(werner(1, 0.6)), 0.4, places=12)
        self.assertAlmostEqual(negativity(werner(3, 0.6)), 0.4, places=12)

    def test_maximally_mixed(self):
        """
        Test that I/4 is not pure and has no entanglement or nonlocality.
        """
        rho = maximally_mixed()
        self.assertFalse(is_pure(rho))
        self.assertEqual(concurrence(rho), 0.0)
        self.assertEqual(nonlocality(rho), 0.0)

    def test_spin_flip_spectrum_of_singlet(self):
        """
        Test that the singlet's spin-flip spectrum is (1, 0, 0, 0).
        """
        values = spin_flip_spectrum(bell_state(1).density())
        np.testing.assert_allclose(values, [1.0, 0.0, 0.0, 0.0], atol=1e-7)

    def test_known_ree_and_absent_ree(self):
        """
        Test that a mixed state without with_ree keeps E_R absent and known_ree is passed through.
        """
        rho = horodecki(0.4)
        self.assertIsNone(all_measures(rho).e_r)
        self.assertEqual(all_measures(rho).ree_method, "absent")
        record = all_measures(rho, known_ree=(0.1, "analytic", True))
        self.assertEqual(record.e_r, 0.1)

    def test_value_rejects_unknown_measure(self):
        """
        Test that MeasureRecord.value raises KeyError for unknown names.
        """
        with self.assertRaises(KeyError):
            all_measures(horodecki(0.4)).value("D")


class TestMeasureRelations(unittest.TestCase):
    """
    Test cases for relations that hold across sampled states.
    """

    def test_pure_state_identity(self):
        """
        Test B = N = C over 2000 Haar pure states.
        """
        cfg = SamplerConfig(method="haar-pure", seed=17, count=2000)
        worst_b = worst_n = 0.0
        for s in sample_states(cfg):
            c = concurrence(s.rho)
            worst_b = max(worst_b, abs(nonlocality(s.rho) - c))
            worst_n = max(worst_n, abs(negativity(s.rho) - c))
        self.assertLessEqual(worst_b, 1e-8)
        self.assertLessEqual(worst_n, 1e-8)

    def test_dominance_on_ginibre_states(self):
        """
        Test N ≤ C, B ≤ C and B ≤ N on 2000 Hilbert–Schmidt states.
        """
        for s in sample_states(SamplerConfig(method="ginibre", seed=23, count=2000)):
            c, n, b = concurrence(s.rho), negativity(s.rho), nonlocality(s.rho)
            self.assertLessEqual(n, c + 1e-9)
            self.assertLessEqual(b, c + 1e-9)
            self.assertLessEqual(b, n + 1e-9)

    def test_concurrence_methods_agree(self):
        """
        Test the overlap-matrix and product-eigenvalue concurrence routes on full-rank states.
        """
        for s in sample_states(SamplerConfig(method="ginibre", seed=31, count=200)):
            if s.rho.eigenvalues[0] < 1e-6:
                continue
            self.assertAlmostEqual(
                concurrence(s.rho, "svd"), concurrence(s.rho, "product"), places=7
            )

    def test_entanglement_of_formation_is_w_of_c(self):
        """
        Test E_F = W(C) on a Horodecki state.
        """
        rho = horodecki(0.7)
        self.assertAlmostEqual(entanglement_of_formation(rho), wootters_w(0.7), places=12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_local_unitary_invariance(self, seed):
        """
        Test that C, N and B do not change under U₁⊗U₂.
        """
        rng = state_rng(seed, 1)
        rho = next(iter(sample_states(SamplerConfig(method="family-mix", seed=seed, count=1)))).rho
        rotated = conjugate(rho, local_unitary(rng))

        # Assertions
        self.assertAlmostEqual(concurrence(rotated), concurrence(rho), delta=1e-9)
        self.assertAlmostEqual(negativity(rotated), negativity(rho), places=8)
        self.assertAlmostEqual(nonlocality(rotated), nonlocality(rho), places=8)

    def test_rank_deficient_concurrence_is_local_unitary_invariant(self):
        """
        Test that both concurrence routes are stable to 1e-9 on rotated rank-2 Horodecki states.
        """
        for index, p in enumerate(np.linspace(0.05, 0.95, 300)):
            rho = horodecki(float(p))
            rotated = conjugate(rho, local_unitary(state_rng(260, index)))
            for method in ("svd", "product"):
                self.assertAlmostEqual(
                    concurrence(rotated, method), concurrence(rho, method), delta=1e-9, msg=f"p={p}"
                )
        self.assertAlmostEqual(concurrence(horodecki(0.4435)), 0.4435, delta=1e-10)


if __name__ == "__main__":
    unittest.main()
