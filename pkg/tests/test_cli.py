"""
Tests for the Command-Line Interface

Flag parsing, exit codes, JSON output and experiment reproducibility.
"""

import contextlib
import io
import json
import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np

from cli.flags import parse_float_list, parse_int_list, parse_kernel_flag, parse_weight_flag
from cli.main import main
from validation.errors import EXIT_INPUT_ERROR, EXIT_NUMERICAL_ERROR, EXIT_OK, InputError, exit_code_for
from validation.synthetic_data import write_series_csv


def run_cli(*argv):
    """Run main() and return (exit code, parsed stdout or None)."""
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        code = main(list(argv) if "--quiet" in argv else [*argv, "--quiet"])
    text = buffer.getvalue().strip()
    return code, (json.loads(text) if text else None)


class TestFlagParsing(unittest.TestCase):
    """Compact kernel and weight flag strings."""

    def test_kernel_flag(self):
        """Test kernel specs with aliases."""
        self.assertEqual(parse_kernel_flag("imq:c=1,beta=0.5"), {"kind": "imq", "c": 1.0, "beta": 0.5})
        self.assertEqual(parse_kernel_flag("RBF:ell=2"), {"kind": "rbf", "lengthscale": 2.0})
        self.assertEqual(parse_kernel_flag("imq"), {"kind": "imq"})

    def test_weight_flag(self):
        """Test weight specs; 'none' means identity."""
        self.assertEqual(parse_weight_flag("none"), {"kind": "identity"})
        self.assertEqual(parse_weight_flag("logrecip:gamma=2,eps=0.1"),
                         {"kind": "logrecip", "gamma": 2.0, "epsilon": 0.1})
        self.assertEqual(parse_weight_flag("trunc:gamma=1,eps=0.1,tau=2")["tau"], 2.0)

    def test_malformed_flags(self):
        """Test that malformed specs raise InputError."""
        for text in ("imq:c", "imq:c=abc", ":c=1"):
            with self.assertRaises(InputError):
                parse_kernel_flag(text)
        with self.assertRaises(InputError):
            parse_float_list("0.1,x")
        with self.assertRaises(InputError):
            parse_int_list("10,2.5")

    def test_lists(self):
        """Test comma-separated lists."""
        self.assertEqual(parse_float_list("0,0.1, 0.2"), [0.0, 0.1, 0.2])
        self.assertEqual(parse_int_list("50,100"), [50, 100])


class CLITestCase(unittest.TestCase):
    """Temporary directory with a small Gaussian series."""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.data = self.tmp / "series.csv"
        write_series_csv(self.data, np.random.default_rng(11).normal(0.5, 1.0, size=40))

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


class TestKsdCommand(CLITestCase):
    """ksd command."""

    def test_identity_alias(self):
        """Test that --weight identity and --weight none agree."""
        code_a, a = run_cli("ksd", str(self.data), "--weight", "identity", "--seed", "1")
        code_b, b = run_cli("ksd", str(self.data), "--weight", "none", "--seed", "1")
        self.assertEqual((code_a, code_b), (EXIT_OK, EXIT_OK))
        self.assertEqual(a["value"], b["value"])
        self.assertEqual(a["n"], 40)
        self.assertGreaterEqual(a["value"], 0.0)

    def test_compare(self):
        """Test that --compare adds the unweighted value."""
        code, result = run_cli("ksd", str(self.data), "--compare", "--seed", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("ksd_squared", result)
        self.assertEqual(result["weight"]["kind"], "logrecip")
        self.assertNotEqual(result["value"], result["ksd_squared"])

    def test_missing_file(self):
        """Test that a missing file exits with 2."""
        code, result = run_cli("ksd", str(self.tmp / "absent.csv"), "--seed", "1")
        self.assertEqual(code, EXIT_INPUT_ERROR)
        self.assertIsNone(result)

    def test_unreadable_path(self):
        """Test that a directory given as the data file exits with 2."""
        code, result = run_cli("ksd", str(self.tmp), "--seed", "1")
        self.assertEqual(code, EXIT_INPUT_ERROR)
        self.assertIsNone(result)

    def test_os_errors_map_to_input_exit(self):
        """Test the exit code of permission and directory errors."""
        self.assertEqual(exit_code_for(PermissionError("denied")), EXIT_INPUT_ERROR)
        self.assertEqual(exit_code_for(IsADirectoryError("dir")), EXIT_INPUT_ERROR)
        self.assertEqual(exit_code_for(RuntimeError("boom")), 1)

    def test_bad_kernel(self):
        """Test that an invalid kernel exits with 2."""
        code, _ = run_cli("ksd", str(self.data), "--kernel", "imq:c=-1", "--seed", "1")
        self.assertEqual(code, EXIT_INPUT_ERROR)
        code, _ = run_cli("ksd", str(self.data), "--kernel", "laplace", "--seed", "1")
        self.assertEqual(code, EXIT_INPUT_ERROR)

    def test_non_finite_score(self):
        """Test that a non-finite KEF score exits with 3."""
        path = self.tmp / "extreme.csv"
        write_series_csv(path, np.array([0.1, -0.4, 1e200, 0.3]))
        code, _ = run_cli("ksd", str(path), "--model", "kef", "--kef-p", "5",
                          "--weight", "identity", "--seed", "1")
        self.assertEqual(code, EXIT_NUMERICAL_ERROR)

    def test_minibatch(self):
        """Test that --batch reports its batch size and is seeded."""
        code, a = run_cli("ksd", str(self.data), "--batch", "10", "--seed", "4")
        _, b = run_cli("ksd", str(self.data), "--batch", "10", "--seed", "4")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(a["batch_size"], 10)
        self.assertEqual(a["value"], b["value"])


class TestFitCommand(CLITestCase):
    """fit command."""

    def test_alpha_zero_returns_prior(self):
        """Test that alpha = 0 gives the N(0, 1) prior."""
        code, result = run_cli("fit", str(self.data), "--alpha", "0", "--seed", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(result["conjugate"]["mu_n"], [0.0])
        self.assertEqual(result["conjugate"]["Sigma_n"], [[1.0]])

    def test_kef_fit(self):
        """Test a KEF p=5 closed-form fit."""
        code, result = run_cli("fit", str(self.data), "--model", "kef", "--kef-p", "5", "--seed", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(result["p"], 5)
        self.assertEqual(len(result["conjugate"]["mu_n"]), 5)
        self.assertTrue(all(sd > 0 for sd in result["conjugate"]["sd"]))

    def test_mixture_needs_mcmc(self):
        """Test that a mixture fit without --mcmc exits with 2."""
        code, _ = run_cli("fit", str(self.data), "--model", "mixture", "--seed", "1")
        self.assertEqual(code, EXIT_INPUT_ERROR)

    def test_gaussian_mcmc(self):
        """Test that --mcmc adds chain summaries next to the closed form."""
        code, result = run_cli("fit", str(self.data), "--mcmc", "--steps", "2000", "--chains", "2",
                               "--seed", "9")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("conjugate", result)
        self.assertIn("mcmc", result)
        self.assertEqual(result["mcmc"]["config"]["steps"], 2000)


class TestBiCommand(CLITestCase):
    """bi command."""

    def test_bimodal_series(self):
        """Test that a well-separated mixture has a large index."""
        rng = np.random.default_rng(3)
        values = np.concatenate([rng.normal(-3, 1, 150), rng.normal(3, 1, 150)])
        path = self.tmp / "bimodal.csv"
        write_series_csv(path, values)
        code, result = run_cli("bi", str(path), "--seed", "2")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(result["n"], 300)
        self.assertGreater(result["bimodality_index"], 1.5)


class TestExperimentCommand(CLITestCase):
    """experiment command."""

    def _location(self, out, *extra):
        return run_cli("experiment", "location", "--epsilon", "0.1", "--y", "10", "--n", "50",
                       "--seed", "3", "--out", str(out), "--quiet", *extra)

    def test_location_rerun_identical(self):
        """Test that reruns and --config reruns write identical summaries."""
        code, result = self._location(self.tmp / "a")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(result["rows"], 3)
        self.assertEqual(result["seed"], 3)
        self._location(self.tmp / "b")
        summary = (self.tmp / "a" / "summary.csv").read_bytes()
        self.assertEqual(summary, (self.tmp / "b" / "summary.csv").read_bytes())

        code, _ = run_cli("experiment", "location", "--config", str(self.tmp / "a" / "config.json"),
                          "--out", str(self.tmp / "c"), "--quiet")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(summary, (self.tmp / "c" / "summary.csv").read_bytes())

    def test_blindness(self):
        """Test a small blindness run from a YAML config."""
        config = self.tmp / "blind.yaml"
        config.write_text("blindness:\n  grid_step: 0.1\n", encoding="utf-8")
        code, result = run_cli("experiment", "blindness", "--config", str(config), "--n", "200",
                               "--seed", "5", "--out", str(self.tmp / "blind"), "--quiet")
        self.assertEqual(code, EXIT_OK)
        for key in ("w_hat_ksd", "w_hat_msksd"):
            self.assertTrue(0.0 < result[key] < 1.0)

    def test_alpha_gamma_warning(self):
        """Test that alpha * gamma != 1 is logged as a warning."""
        with self.assertLogs("validation.config_validator", level="WARNING") as logs:
            code, _ = run_cli("bi", str(self.data), "--alpha", "2", "--seed", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(any("alpha * gamma" in line for line in logs.output))


if __name__ == "__main__":
    unittest.main()
