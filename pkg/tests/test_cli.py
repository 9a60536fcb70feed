import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from click.testing import CliRunner

from entm.cli import (
    EXIT_BUDGET,
    EXIT_INVALID,
    EXIT_NOT_FOUND,
    EXIT_UNEXPECTED,
    EXIT_VIOLATION,
    exit_code_for,
    main,
)
from entm.config import NumericPolicy, Settings, set_policy
from entm.exceptions import (
    AcceptanceViolation,
    BudgetExhausted,
    InvalidState,
    MissingSeed,
    NoRoot,
    NoConvergence,
)
from entm.ree import CssCandidate
from entm.states import maximally_mixed


class CliTestCase(unittest.TestCase):
    """
    Shared setup: an isolated settings file and a temporary working directory.
    """

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.patcher = patch.object(Settings, "_state_file", Path(self.tmp.name) / "config.json")
        self.patcher.start()
        Settings.reset()
        self.runner = CliRunner()

    def tearDown(self):
        Settings.reset()
        set_policy(NumericPolicy())
        self.patcher.stop()
        self.tmp.cleanup()

    def path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)


class TestExitCodes(unittest.TestCase):
    """
    Test cases for the exception to exit-code mapping.
    """

    def test_exit_code_for(self):
        """
        Test every exit-code class.
        """
        self.assertEqual(exit_code_for(InvalidState("bad", [])), EXIT_INVALID)
        self.assertEqual(exit_code_for(MissingSeed("no seed")), EXIT_INVALID)
        self.assertEqual(exit_code_for(BudgetExhausted("budget")), EXIT_BUDGET)
        self.assertEqual(exit_code_for(AcceptanceViolation("order")), EXIT_VIOLATION)
        self.assertEqual(exit_code_for(NoRoot("root")), EXIT_NOT_FOUND)
        self.assertEqual(exit_code_for(NoConvergence("eig")), EXIT_UNEXPECTED)
        self.assertEqual(exit_code_for(RuntimeError("boom")), EXIT_UNEXPECTED)


class TestMeasureCommand(CliTestCase):
    """
    Test cases for the measure command.
    """

    def test_bell_state(self):
        """
        Test that a Bell state prints 1 for every measure.
        """
        result = self.runner.invoke(main, ["measure", "--family", "bell", "1"])

        # Assertions
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertIn("C     = 1.000000", result.output)
        self.assertIn("E_R   = 1.000000", result.output)

    def test_horodecki_state(self):
        """
        Test the Horodecki state at p = 0.5 with its closed-form E_R.
        """
        result = self.runner.invoke(main, ["measure", "--family", "horodecki", "0.5"])

        # Assertions
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertIn("C     = 0.500000", result.output)
        self.assertIn("N     = 0.207107", result.output)
        self.assertIn("E_R   = 0.122556", result.output)
        self.assertIn("E_R method: analytic", result.output)

    def test_bell_diagonal_json(self):
        """
        Test JSON output for a Bell-diagonal state with C = N = 0.4 and B = 0.
        """
        args = ["measure", "--family", "belldiag", "0.7", "0.1", "0.1", "0.1", "--format", "json"]
        result = self.runner.invoke(main, args)
        data = json.loads(result.output)

        # Assertions
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertAlmostEqual(data["c"], 0.4, places=10)
        self.assertAlmostEqual(data["n"], 0.4, places=10)
        self.assertAlmostEqual(data["b"], 0.0, places=10)

    def test_invalid_state_file(self):
        """
        Test that a non-positive matrix file exits with code 2 and lists the problem.
        """
        entries = [[0.0, 0.0]] * 16
        entries[0] = [1.5, 0.0]
        entries[5] = [-0.5, 0.0]
        with open(self.path("bad.json"), "w") as f:
            json.dump({"format": "density-matrix", "entries": entries}, f)
        result = self.runner.invoke(main, ["measure", "--file", self.path("bad.json")])

        # Assertions
        self.assertEqual(result.exit_code, EXIT_INVALID)
        self.assertIn("❌ Error executing command", result.output)
        self.assertIn("negative eigenvalue", result.output)

    def test_missing_state_source(self):
        """
        Test that giving neither --file nor --family is a usage error.
        """
        result = self.runner.invoke(main, ["measure"])
        self.assertEqual(result.exit_code, 2)

    def test_wrong_parameter_count(self):
        """
        Test that werner with one parameter exits with code 2.
        """
        result = self.runner.invoke(main, ["measure", "--family", "werner", "1"])
        self.assertEqual(result.exit_code, EXIT_INVALID)


class TestReeCommand(CliTestCase):
    """
    Test cases for the ree command.
    """

    def test_dump_css_then_measure(self):
        """
        Test that the dumped closest separable state measures as unentangled.
        """
        css = self.path("css.json")
        result = self.runner.invoke(
            main, ["ree", "--family", "horodecki", "0.5", "--dump-css", css]
        )
        follow = self.runner.invoke(main, ["measure", "--file", css, "--no-ree"])

        # Assertions
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertIn("method     = reduced", result.output)
        self.assertIn("E_R        = 0.12255", result.output)
        self.assertEqual(follow.exit_code, 0, msg=follow.output)
        self.assertIn("C     = 0.000000", follow.output)
        self.assertIn("E_R   = n/a", follow.output)

    @patch("entm.cli.ree_auto")
    def test_budget_exhausted(self, mock_ree_auto):
        """
        Test that an unconverged search exits with code 3 after printing its value.
        """
        mock_ree_auto.return_value = CssCandidate(maximally_mixed(), 0.2, converged=False)
        result = self.runner.invoke(main, ["ree", "--family", "horodecki", "0.5"])

        # Assertions
        self.assertEqual(result.exit_code, EXIT_BUDGET)
        self.assertIn("E_R        = 0.2000000000", result.output)
        self.assertIn("⚠️", result.output)
        mock_ree_auto.assert_called_once()

    def test_reduced_method_rejects_other_states(self):
        """
        Test that --method reduced on a Φ⁺ Werner state exits with code 2.
        """
        result = self.runner.invoke(
            main, ["ree", "--family", "werner", "2", "0.5", "--method", "reduced"]
        )
        self.assertEqual(result.exit_code, EXIT_INVALID)


class TestSurveyCommands(CliTestCase):
    """
    Test cases for scan, envelope, decay, ordering and crossing.
    """

    def test_scan_requires_seed(self):
        """
        Test that a scan without --seed or ENTM_SEED exits with code 2.
        """
        with patch.dict(os.environ, {}, clear=True):
            result = self.runner.invoke(main, ["scan", "--count", "5", "-o", self.path("s.csv")])
        self.assertEqual(result.exit_code, EXIT_INVALID)
        self.assertIn("seed", result.output)

    def test_scan_then_envelope(self):
        """
        Test a seeded scan and an envelope built from its CSV.
        """
        scan_csv = self.path("scan.csv")
        env_csv = self.path("envelope.csv")
        scan = self.runner.invoke(
            main,
            ["scan", "--count", "80", "--sampler", "family-mix", "--seed", "3", "-o", scan_csv],
        )
        env = self.runner.invoke(
            main, ["envelope", "--input", scan_csv, "--bins", "10", "-o", env_csv]
        )

        # Assertions
        self.assertEqual(scan.exit_code, 0, msg=scan.output)
        self.assertIn("✅ No dominance violations", scan.output)
        with open(scan_csv) as f:
            self.assertEqual(f.readline(), "#version=0.1.0\n")
            self.assertEqual(f.readline(), "#seed=3\n")
        self.assertEqual(env.exit_code, 0, msg=env.output)
        self.assertIn("N vs C envelope", env.output)

    def test_seed_from_environment(self):
        """
        Test that ENTM_SEED stands in for --seed.
        """
        out = self.path("env.csv")
        result = self.runner.invoke(
            main, ["scan", "--count", "5", "-o", out], env={"ENTM_SEED": "12"}
        )
        self.assertEqual(result.exit_code, 0, msg=result.output)
        with open(out) as f:
            f.readline()
            self.assertEqual(f.readline(), "#seed=12\n")

    def test_decay_bell(self):
        """
        Test that the default decay run reports all three orderings holding.
        """
        result = self.runner.invoke(main, ["decay", "-o", self.path("decay.csv")])

        # Assertions
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertIn("✅ N2>=N3>=N1", result.output)
        self.assertIn("✅ B1=B2>=B3", result.output)
        self.assertIn("✅ C1>=C3>=C2", result.output)

    def test_decay_werner(self):
        """
        Test that the Werner decay run finds a negativity crossing.
        """
        result = self.runner.invoke(
            main, ["decay", "--initial", "werner", "--p", "0.8", "-o", self.path("w.csv")]
        )
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertIn("crossing(s) found", result.output)

    def test_ordering_constructed_only(self):
        """
        Test that the constructed witnesses cover every pattern without a scan.
        """
        out = self.path("ordering.csv")
        result = self.runner.invoke(main, ["ordering", "--count", "0", "-o", out])

        # Assertions
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertEqual(result.output.count("✅"), 9)
        self.assertNotIn("❌", result.output)

    def test_ordering_without_witnesses(self):
        """
        Test that a run with no sources for a requested class exits with code 4.
        """
        args = ["ordering", "--count", "0", "--no-constructed", "--classes", "LT,LT,GT"]
        result = self.runner.invoke(main, args + ["-o", self.path("o.csv")])

        # Assertions
        self.assertEqual(result.exit_code, EXIT_VIOLATION)
        self.assertIn("❌ LT,LT,GT", result.output)

    def test_ordering_bad_class(self):
        """
        Test that a malformed --classes value is a usage error.
        """
        result = self.runner.invoke(main, ["ordering", "--count", "0", "--classes", "LT,XX"])
        self.assertEqual(result.exit_code, 2)

    def test_crossing(self):
        """
        Test that the crossing point prints N_Y ≈ 0.3770 and E_Y ≈ 0.2279.
        """
        result = self.runner.invoke(main, ["crossing", "-o", self.path("crossing.csv")])
        lines = dict(line.split(" = ") for line in result.output.splitlines() if " = " in line)

        # Assertions
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertAlmostEqual(float(lines["N_Y"]), 0.3770, delta=5e-4)
        self.assertAlmostEqual(float(lines["E_Y"]), 0.2279, delta=5e-4)


class TestConfigCommands(CliTestCase):
    """
    Test cases for config show and config set.
    """

    def test_set_and_show(self):
        """
        Test that a stored value appears in config show.
        """
        result = self.runner.invoke(main, ["config", "set", "ree.restarts", "3"])
        shown = self.runner.invoke(main, ["config", "show"])

        # Assertions
        self.assertEqual(result.exit_code, 0, msg=result.output)
        self.assertIn("✅ ree.restarts = 3", result.output)
        self.assertEqual(json.loads(shown.output)["ree"]["restarts"], 3)

    def test_unknown_key(self):
        """
        Test that an unknown key is a usage error.
        """
        result = self.runner.invoke(main, ["config", "set", "solver.depth", "3"])
        self.assertEqual(result.exit_code, 2)


if __name__ == "__main__":
    unittest.main()
