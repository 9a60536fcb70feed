import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from entm.decay import (
    DecayConfig,
    InitialState,
    amplitude_damping,
    check_mes_ordering,
    evolve,
    rescaled_grid,
    werner_robustness,
)
from entm.exceptions import GridMismatch, OutOfRange
from entm.ree import ree_horodecki
from entm.states import SamplerConfig, bell_state, horodecki, sample_state

GAMMA = 0.1


def bell_trajectories(grid):
    return [evolve(DecayConfig(GAMMA, grid, InitialState("bell", k))) for k in (1, 2, 3)]


def werner_trajectories(grid, p=0.8):
    return [evolve(DecayConfig(GAMMA, grid, InitialState("werner", k, p))) for k in (1, 2, 3)]


class TestAmplitudeDamping(unittest.TestCase):
    """
    Test cases for the two-cavity damping channel.
    """

    def test_singlet_decays_to_horodecki(self):
        """
        Test that the damped singlet equals horodecki(e^{−γt}) entrywise.
        """
        grid = rescaled_grid(GAMMA)
        traj = evolve(DecayConfig(GAMMA, grid, InitialState("bell", 1)))

        # Assertions
        self.assertEqual(len(traj.states), 61)
        self.assertAlmostEqual(traj.gamma_t[-1], 3.0, places=12)
        for eta, state in zip(traj.eta, traj.states):
            np.testing.assert_allclose(state.matrix, horodecki(float(eta)).matrix, atol=1e-12)

    def test_full_loss_gives_ground_state(self):
        """
        Test that η = 0 maps every state to |00⟩⟨00|.
        """
        rho = amplitude_damping(bell_state(3).density(), 0.0)
        expected = np.zeros((4, 4))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-15)

    def test_rejects_bad_survival(self):
        """
        Test that η outside [0, 1] raises OutOfRange.
        """
        with self.assertRaises(OutOfRange):
            amplitude_damping(bell_state(1).density(), 1.5)

    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_semigroup(self, eta1, eta2, seed):
        """
        Test that damping by η₁ then η₂ equals damping by η₁η₂.
        """
        rho = sample_state(SamplerConfig(seed=seed, count=1), 0).rho
        twice = amplitude_damping(amplitude_damping(rho, eta1), eta2)
        once = amplitude_damping(rho, eta1 * eta2)
        np.testing.assert_allclose(twice.matrix, once.matrix, atol=1e-12)


class TestDecayConfig(unittest.TestCase):
    """
    Test cases for grid and initial-state validation.
    """

    def test_grid_must_increase(self):
        """
        Test that repeated or negative times raise OutOfRange.
        """
        with self.assertRaises(OutOfRange):
            DecayConfig(GAMMA, (0.0, 1.0, 1.0), InitialState("bell", 1))
        with self.assertRaises(OutOfRange):
            DecayConfig(GAMMA, (-1.0, 1.0), InitialState("bell", 1))
        with self.assertRaises(OutOfRange):
            DecayConfig(0.0, (0.0, 1.0), InitialState("bell", 1))

    def test_initial_state_kinds(self):
        """
        Test labels, the Werner start point and that an explicit kind needs a matrix.
        """
        werner = InitialState("werner", 1, 0.8)
        record = evolve(DecayConfig(GAMMA, (0.0,), werner)).records[0]

        # Assertions
        self.assertEqual(werner.label, "werner-1-0.8")
        self.assertAlmostEqual(record.n, 0.7, places=12)
        self.assertAlmostEqual(record.c, 0.7, places=12)
        with self.assertRaises(OutOfRange):
            InitialState("matrix")
        with self.assertRaises(OutOfRange):
            InitialState("ghz")

    def test_rescaled_grid(self):
        """
        Test that the grid spans γt ∈ [0, 3] in 61 points.
        """
        grid = rescaled_grid(GAMMA, 3.0, 61)
        self.assertEqual(len(grid), 61)
        self.assertAlmostEqual(grid[-1], 30.0, places=12)
        with self.assertRaises(OutOfRange):
            rescaled_grid(GAMMA, 3.0, 1)

    def test_trajectory_with_ree(self):
        """
        Test that E_R along the singlet trajectory follows the Horodecki closed form.
        """
        grid = rescaled_grid(GAMMA, 3.0, 5)
        traj = evolve(DecayConfig(GAMMA, grid, InitialState("bell", 1)), with_ree=True)
        for eta, value in zip(traj.eta, traj.series("E_R")):
            self.assertAlmostEqual(value, ree_horodecki(float(eta)), delta=1e-7)


class TestOrderings(unittest.TestCase):
    """
    Test cases for the maximally entangled and Werner orderings under decay.
    """

    def test_mes_chains_hold(self):
        """
        Test N₂ ≥ N₃ ≥ N₁, B₁ = B₂ ≥ B₃ and C₁ ≥ C₃ ≥ C₂ on 61 points of γt ∈ [0, 3].
        """
        report = check_mes_ordering(bell_trajectories(rescaled_grid(GAMMA)))

        # Assertions
        self.assertTrue(report.holds, msg=str(report.chains))
        self.assertEqual(report.most_fragile["N"], "bell-1")
        self.assertEqual(report.most_fragile["C"], "bell-2")
        self.assertEqual(report.most_fragile["B"], "bell-3")

    def test_measures_never_increase(self):
        """
        Test that C and N are non-increasing along every Bell and Werner trajectory
        and E_R along the singlet trajectory.
        """
        grid = rescaled_grid(GAMMA)
        for traj in bell_trajectories(grid) + werner_trajectories(grid):
            for name in ("C", "N"):
                steps = np.diff(traj.series(name))
                self.assertLessEqual(steps.max(), 1e-9, msg=f"{name} {traj.label}")
        singlet = evolve(
            DecayConfig(GAMMA, rescaled_grid(GAMMA, 3.0, 13), InitialState("bell", 1)),
            with_ree=True,
        )
        self.assertLessEqual(np.diff(singlet.series("E_R")).max(), 1e-9)

    def test_shuffled_labels_break_chains(self):
        """
        Test that passing the trajectories out of order is reported as a violation.
        """
        first, second, third = bell_trajectories(rescaled_grid(GAMMA))
        report = check_mes_ordering([second, first, third])

        # Assertions
        self.assertFalse(report.holds)
        self.assertFalse(report.chains["N2>=N3>=N1"].holds)
        self.assertFalse(report.chains["C1>=C3>=C2"].holds)

    def test_start_point_is_maximal(self):
        """
        Test that every measure equals 1 at t = 0 for all three states.
        """
        for traj in bell_trajectories((0.0,)):
            for name in ("C", "N", "B"):
                self.assertAlmostEqual(traj.series(name)[0], 1.0, places=10)

    def test_grid_mismatch(self):
        """
        Test that trajectories on different grids or of the wrong count raise GridMismatch.
        """
        trajs = bell_trajectories((0.0, 1.0))
        other = evolve(DecayConfig(GAMMA, (0.0, 2.0), InitialState("bell", 3)))
        with self.assertRaises(GridMismatch):
            check_mes_ordering([trajs[0], trajs[1], other])
        with self.assertRaises(GridMismatch):
            werner_robustness(trajs[:2])

    def test_werner_crossing(self):
        """
        Test equal initial negativities and at least one sign change of N_j − N_k at p = 0.8.
        """
        report = werner_robustness(werner_trajectories(rescaled_grid(GAMMA)), p=0.8)

        # Assertions
        self.assertLessEqual(report.initial_spread, 1e-9)
        np.testing.assert_allclose(report.delta_n[1], 0.0)
        self.assertTrue(report.has_crossing)
        for crossing in report.crossings:
            self.assertTrue(0.0 < crossing.gamma_t <= 3.0)


if __name__ == "__main__":
    unittest.main()
