"""
Tests for Experiments

Contamination, CSV loading, mode detection, the bimodality index, runners and
report layout.
"""

import json
import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.stats import norm

from experiments import (
    GALAXY_CSV,
    GENE_SURROGATE_CSV,
    KSD_BAYES,
    MSKSD_BAYES,
    STANDARD_BAYES,
    BlindnessSettings,
    ContaminationSpec,
    ExperimentReport,
    GalaxySettings,
    GeneSettings,
    LocationSettings,
    MethodSettings,
    blindness_demo,
    bimodality_index,
    cell_seed,
    contaminate_dataset,
    detect_modes,
    generate_location_data,
    load_galaxy,
    load_series_csv,
    replaced_count,
    run_galaxy,
    run_gaussian_location,
    run_gene_expression,
    run_rate_check,
    write_report,
)
from models import kde_plugin
from posterior import DensityCurve
from stein import WeightSpec, weight_values
from validation.errors import DataParseError, InputError
from validation.invariants import check_density_normalised, check_mode_report
from validation.synthetic_data import generate_expression_surrogate, generate_mixture_series, write_series_csv


def normalised_curve(grid, density):
    density = np.asarray(density, dtype=float)
    return DensityCurve(grid=grid, density=density / trapezoid(density, grid))


class TestContamination(unittest.TestCase):
    """Contamination models."""

    def test_replaced_count_rounds_half_to_even(self):
        """round(ε n) uses banker's rounding."""
        self.assertEqual(replaced_count(82, 0.1), 8)
        self.assertEqual(replaced_count(82, 0.2), 16)
        self.assertEqual(replaced_count(10, 0.25), 2)
        self.assertEqual(replaced_count(10, 0.35), 4)
        self.assertEqual(replaced_count(82, 0.0), 0)

    def test_replace_mode(self):
        """Exactly round(ε n) points change; the rest keep their positions."""
        data = np.arange(82, dtype=float)
        spec = ContaminationSpec(epsilon=0.2, y=500.0, noise_sd=0.1, mode="replace")
        out = contaminate_dataset(data, spec, seed=4)
        changed = np.flatnonzero(out != data)
        self.assertEqual(changed.size, 16)
        self.assertTrue(np.all(np.abs(out[changed] - 500.0) < 1.0))
        np.testing.assert_array_equal(out, contaminate_dataset(data, spec, seed=4))

    def test_zero_epsilon_is_identity(self):
        """ε = 0 returns an unchanged copy."""
        data = np.linspace(0, 1, 20)
        out = contaminate_dataset(data, ContaminationSpec(epsilon=0.0), seed=1)
        np.testing.assert_array_equal(out, data)
        self.assertIsNot(out, data)

    def test_mixture_mode(self):
        """Clean location draws centre on θ⋆."""
        x = generate_location_data(2000, 1.0, ContaminationSpec(epsilon=0.0, mode="mixture"), seed=0)
        self.assertAlmostEqual(float(np.mean(x)), 1.0, delta=0.1)
        x = generate_location_data(2000, 1.0, ContaminationSpec(epsilon=0.2, y=20.0, noise_sd=1.0,
                                                                mode="mixture"), seed=0)
        self.assertAlmostEqual(float(np.mean(x > 10)), 0.2, delta=0.04)

    def test_mode_mismatch(self):
        """Each generator insists on its own contamination mode."""
        with self.assertRaises(InputError):
            contaminate_dataset(np.zeros(5), ContaminationSpec(epsilon=0.2, mode="mixture"))
        with self.assertRaises(InputError):
            generate_location_data(5, 0.0, ContaminationSpec(epsilon=0.2, mode="replace"))

    def test_invalid_spec(self):
        """ε outside [0, 1] is rejected."""
        with self.assertRaises(InputError):
            ContaminationSpec(epsilon=1.5)


class TestSeriesLoader(unittest.TestCase):
    """Single-series CSV loader."""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def _write(self, name, text):
        path = self.tmp / name
        path.write_text(text, encoding="utf-8", newline="")
        return path

    def test_header_detection(self):
        """A non-numeric first row is treated as a header."""
        np.testing.assert_array_equal(load_series_csv(self._write("a.csv", "velocity\n1.5\n2\n")), [1.5, 2.0])
        np.testing.assert_array_equal(load_series_csv(self._write("b.csv", "1.5\n2\n")), [1.5, 2.0])

    def test_crlf_and_blank_lines(self):
        """CRLF endings and blank lines are accepted."""
        path = self.tmp / "crlf.csv"
        write_series_csv(path, [1.0, 2.0, 3.0], line_ending="\r\n")
        np.testing.assert_array_equal(load_series_csv(path), [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(load_series_csv(self._write("blank.csv", "x\n1\n\n2\n\n")), [1.0, 2.0])

    def test_bad_value_line_number(self):
        """Non-numeric rows report their 1-based line number."""
        with self.assertRaises(DataParseError) as ctx:
            load_series_csv(self._write("bad.csv", "value\n1.0\n\nabc\n"))
        self.assertEqual(ctx.exception.line, 4)
        with self.assertRaises(DataParseError):
            load_series_csv(self._write("nan.csv", "1.0\nnan\n"))

    def test_empty_and_header_only(self):
        """Files without values are rejected."""
        with self.assertRaises(DataParseError):
            load_series_csv(self._write("empty.csv", ""))
        with self.assertRaises(DataParseError):
            load_series_csv(self._write("header.csv", "value\n"))

    def test_multiple_columns(self):
        """More than one column is rejected."""
        with self.assertRaises(DataParseError):
            load_series_csv(self._write("wide.csv", "1,2\n3,4\n"))

    def test_missing_file(self):
        """A missing file raises FileNotFoundError."""
        with self.assertRaises(FileNotFoundError):
            load_series_csv(self.tmp / "missing.csv")

    def test_log_transform(self):
        """log2(1 + x) is applied after parsing."""
        path = self._write("expr.csv", "0\n1\n3\n")
        np.testing.assert_allclose(load_series_csv(path, log_transform=True), [0.0, 1.0, 2.0])
        with self.assertRaises(DataParseError):
            load_series_csv(self._write("neg.csv", "-1\n2\n"), log_transform=True)

    def test_bundled_galaxy(self):
        """The bundled Galaxy data has 82 velocities."""
        values = load_series_csv(GALAXY_CSV)
        self.assertEqual(values.shape, (82,))
        np.testing.assert_allclose(load_galaxy(), values / 1e4)


class TestModeDetection(unittest.TestCase):
    """Prominence-based mode detection."""

    def setUp(self):
        self.grid = np.linspace(-8, 8, 2001)

    def test_bimodal(self):
        """Two separated components give two modes with their masses."""
        curve = normalised_curve(self.grid, 0.3 * norm.pdf(self.grid, -3) + 0.7 * norm.pdf(self.grid, 3))
        report = detect_modes(curve)
        check_mode_report(report)
        self.assertEqual(report.mode_count, 2)
        np.testing.assert_allclose(report.locations, [-3.0, 3.0], atol=0.02)
        np.testing.assert_allclose(report.masses, [0.3, 0.7], atol=0.01)
        self.assertTrue(report.has_mode_in(2.5, 3.5))

    def test_unimodal(self):
        """A Gaussian has one mode."""
        report = detect_modes(normalised_curve(self.grid, norm.pdf(self.grid, 1.0)))
        self.assertEqual(report.mode_count, 1)
        self.assertAlmostEqual(float(report.locations[0]), 1.0, delta=0.01)
        self.assertAlmostEqual(float(report.masses[0]), 1.0)

    def test_prominence_threshold(self):
        """A bump below the threshold is not a mode."""
        curve = normalised_curve(self.grid, 0.97 * norm.pdf(self.grid, -3) + 0.03 * norm.pdf(self.grid, 3))
        self.assertEqual(detect_modes(curve, 0.05).mode_count, 1)
        self.assertEqual(detect_modes(curve, 0.01).mode_count, 2)

    def test_plateau_midpoint(self):
        """A flat top is reported at its midpoint."""
        grid = np.linspace(-3, 3, 601)
        curve = normalised_curve(grid, np.clip(np.minimum(1.0, 2.0 - np.abs(grid)), 0.0, None))
        report = detect_modes(curve)
        self.assertEqual(report.mode_count, 1)
        self.assertAlmostEqual(float(report.locations[0]), 0.0, places=9)

    def test_boundary_maximum(self):
        """A monotone curve reports its boundary maximum as the single mode."""
        grid = np.linspace(0, 5, 501)
        report = detect_modes(normalised_curve(grid, np.exp(-grid)))
        self.assertEqual(report.mode_count, 1)
        self.assertEqual(float(report.locations[0]), 0.0)

    def test_invalid_inputs(self):
        """Unnormalised curves and out-of-range thresholds are rejected."""
        with self.assertRaises(InputError):
            detect_modes(DensityCurve(grid=self.grid, density=2 * norm.pdf(self.grid)))
        curve = normalised_curve(self.grid, norm.pdf(self.grid))
        for threshold in (0.0, 1.0):
            with self.assertRaises(InputError):
                detect_modes(curve, threshold)


class TestBimodalityIndex(unittest.TestCase):
    """Gaussian-mixture bimodality index."""

    def test_separated_mixture(self):
        """A 50/50 mixture at ±3 with unit sd has BI close to 3."""
        values = generate_mixture_series(n=500, means=(-3.0, 3.0), sd=1.0, weight=0.5, seed=42)
        self.assertAlmostEqual(bimodality_index(values), 3.0, delta=0.3)

    def test_constant(self):
        """Constant data has BI 0."""
        self.assertEqual(bimodality_index(np.full(20, 4.2)), 0.0)

    def test_deterministic(self):
        """Same data and seed give the same index."""
        values = generate_mixture_series(n=200, seed=1)
        self.assertEqual(bimodality_index(values, seed=3), bimodality_index(values, seed=3))

    def test_invalid_inputs(self):
        """Short or non-finite series are rejected."""
        with self.assertRaises(InputError):
            bimodality_index(np.arange(9.0))
        with self.assertRaises(InputError):
            bimodality_index(np.append(np.arange(20.0), np.nan))


class TestLocationExperiment(unittest.TestCase):
    """Gaussian location robustness grid."""

    @classmethod
    def setUpClass(cls):
        cls.settings = LocationSettings()
        cls.method = MethodSettings()
        cls.report = run_gaussian_location(cls.settings, cls.method, seed=7)

    def _row(self, method, cell):
        return next(r for r in self.report.rows if r["method"] == method and r["cell"] == cell)

    def test_rows(self):
        """Three methods for each of the 16 cells."""
        self.assertEqual(len(self.report.rows), 48)
        for name in (STANDARD_BAYES, KSD_BAYES, MSKSD_BAYES):
            self.assertEqual(len(self.report.rows_for(name)), 16)
        self.assertEqual(len(self.report.curves), 48)

    def test_standard_bayes_oracle(self):
        """Standard Bayes mean is Σx / (n + 1) on the cell's own draw."""
        index = list((e, y) for e in self.settings.epsilons for y in self.settings.ys).index((0.1, 10.0))
        spec = ContaminationSpec(epsilon=0.1, y=10.0, noise_sd=1.0, mode="mixture")
        x = generate_location_data(100, 1.0, spec, seed=cell_seed(7, index))
        row = self._row(STANDARD_BAYES, "eps0.1_y10")
        self.assertEqual(row["posterior_mean"], float(np.sum(x) / 101.0))
        self.assertAlmostEqual(row["posterior_sd"], 1.0 / np.sqrt(101.0), places=12)

    def test_msksd_more_robust_than_standard(self):
        """Under ε = 0.1, y = 10 MS-KSD-Bayes stays within 0.25 of θ⋆ = 1."""
        standard = self._row(STANDARD_BAYES, "eps0.1_y10")["posterior_mean"]
        ms = self._row(MSKSD_BAYES, "eps0.1_y10")["posterior_mean"]
        self.assertAlmostEqual(standard, 1.88, delta=0.15)
        self.assertLess(abs(ms - 1.0), abs(standard - 1.0))
        self.assertLessEqual(abs(ms - 1.0), 0.25)

    def test_clean_cells_centered(self):
        """At ε = 0 every method is centered on θ⋆ = 1."""
        clean = [r for r in self.report.rows if r["epsilon"] == 0.0]
        self.assertEqual(len(clean), 12)
        for name in (STANDARD_BAYES, KSD_BAYES, MSKSD_BAYES):
            means = [r["posterior_mean"] for r in clean if r["method"] == name]
            self.assertLessEqual(abs(float(np.mean(means)) - 1.0), 0.15, f"{name}: {means}")
        for row in clean:
            if row["method"] == STANDARD_BAYES:
                self.assertLessEqual(abs(row["posterior_mean"] - 1.0), 3.0 / np.sqrt(101.0))

    def test_curves_normalised(self):
        """Every posterior curve integrates to 1."""
        for key, curve in self.report.curves.items():
            check_density_normalised(curve.grid, curve.density, tol=1e-6, name=key)

    def test_parallel_cells_identical(self):
        """n_jobs does not change the results."""
        settings = LocationSettings(n=30, epsilons=[0.0, 0.1], ys=[5.0])
        serial = run_gaussian_location(settings, MethodSettings(n_jobs=1), seed=3)
        parallel = run_gaussian_location(settings, MethodSettings(n_jobs=2), seed=3)
        for a, b in zip(serial.rows, parallel.rows):
            self.assertEqual(a["posterior_mean"], b["posterior_mean"])


class TestRunners(unittest.TestCase):
    """Galaxy, gene, blindness and rate runners."""

    def test_cell_seed(self):
        """Cell seeds are deterministic and distinct."""
        self.assertEqual(cell_seed(1, 2), cell_seed(1, 2))
        self.assertNotEqual(cell_seed(1, 2), cell_seed(1, 3))
        self.assertNotEqual(cell_seed(1, 2), cell_seed(2, 2))

    def test_galaxy_structure(self):
        """Two methods per ε, normalised curves on the scaled axis."""
        report = run_galaxy(settings=GalaxySettings(epsilons=[0.0, 0.2]), seed=7)
        self.assertEqual(len(report.rows), 4)
        self.assertEqual({r["epsilon"] for r in report.rows}, {0.0, 0.2})
        for key, curve in report.curves.items():
            check_density_normalised(curve.grid, curve.density, tol=1e-6, name=key)
            self.assertLessEqual(curve.grid[0], 0.9572)
            self.assertGreaterEqual(curve.grid[-1], 5.0)
        for row in report.rows:
            self.assertGreaterEqual(row["mode_count"], 1)
            self.assertEqual(len(row["mode_masses"]), row["mode_count"])
        self.assertAlmostEqual(report.extras["shift"], float(np.mean(load_galaxy())), places=12)

    def test_gene_structure(self):
        """The bundled surrogate is fitted by both methods and has a clear BI."""
        report = run_gene_expression(seed=3)
        self.assertEqual([r["method"] for r in report.rows], [KSD_BAYES, MSKSD_BAYES])
        self.assertGreater(report.extras["bimodality_index"], 1.5)
        for curve in report.curves.values():
            self.assertAlmostEqual(curve.integral(), 1.0, places=6)

    def test_blindness_structure(self):
        """Grid argmins are grid points and match the returned losses."""
        grid = BlindnessSettings(grid_step=0.1).w1_grid()
        result = blindness_demo(w1_true=0.7, mu=4.0, sigma=1.0, n=200, w1_grid=grid, seed=0)
        self.assertEqual(len(result["ksd_losses"]), 9)
        self.assertEqual(result["w_hat_ksd"], grid[int(np.argmin(result["ksd_losses"]))])
        self.assertEqual(result["w_hat_msksd"], grid[int(np.argmin(result["msksd_losses"]))])
        self.assertTrue(all(v >= -1e-12 for v in result["ksd_losses"] + result["msksd_losses"]))

    def test_blindness_grid(self):
        """The default grid is 0.02, ..., 0.98 and boundary weights are rejected."""
        grid = BlindnessSettings().w1_grid()
        self.assertEqual(grid.shape, (49,))
        self.assertAlmostEqual(grid[0], 0.02)
        self.assertAlmostEqual(grid[-1], 0.98)
        with self.assertRaises(InputError):
            blindness_demo(n=50, w1_grid=[0.0, 0.5])

    def test_blindness_separation_warning(self):
        """Poorly separated components are flagged."""
        with self.assertLogs("experiments.runners", level="WARNING"):
            blindness_demo(mu=2.0, sigma=1.0, n=50, w1_grid=[0.25, 0.5, 0.75])

    def test_rate_slope(self):
        """Posterior sd contracts at roughly n^-1/2."""
        report = run_rate_check(seed=11)
        self.assertTrue(-0.6 <= report.extras["slope"] <= -0.4, report.extras["slope"])
        sds = [row["posterior_sd"] for row in report.rows]
        self.assertTrue(all(a > b for a, b in zip(sds, sds[1:])))

    def test_galaxy_contaminant_weight(self):
        """The KDE plug-in weights the tight contaminant cluster below the clean velocities."""
        settings = GalaxySettings()
        scaled = load_galaxy(settings.unit_scale)
        for index, eps in enumerate((0.1, 0.2), start=1):
            spec = ContaminationSpec(epsilon=eps, y=settings.y, noise_sd=settings.noise_sd, mode="replace")
            X = contaminate_dataset(scaled, spec, seed=cell_seed(7, index))
            omega = weight_values(WeightSpec.log_reciprocal(), kde_plugin(X).logpdf(X))
            cluster = X > 4.0
            self.assertEqual(int(cluster.sum()), replaced_count(X.shape[0], eps))
            self.assertLess(omega[cluster].mean(), omega[~cluster].mean())

    def test_expression_surrogate_matches_bundled_shape(self):
        """The generator reproduces the bundled surrogate's size, group centers and rounding."""
        generated = generate_expression_surrogate()
        bundled = load_series_csv(GENE_SURROGATE_CSV)
        self.assertEqual(generated.shape, bundled.shape)
        self.assertEqual(int(np.sum(bundled < 8.0)), 120)
        for values in (generated, bundled):
            ordered = np.sort(values)
            self.assertAlmostEqual(float(ordered[:120].mean()), 6.0, delta=0.25)
            self.assertAlmostEqual(float(ordered[120:].mean()), 10.0, delta=0.25)
        np.testing.assert_array_equal(generated, np.round(generated, 4))


@pytest.mark.slow
class TestReplication(unittest.TestCase):
    """Full-size runs of the gene, Galaxy and blindness experiments."""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def _msksd_modes(self, report):
        return next(r for r in report.rows if r["method"] == MSKSD_BAYES)

    def test_gene_surrogate_bimodal(self):
        """MS-KSD-Bayes finds both groups of the bundled surrogate."""
        report = run_gene_expression(seed=3)
        row = self._msksd_modes(report)
        self.assertEqual(row["mode_count"], 2)
        check_mode_report(detect_modes(report.curves[f"{MSKSD_BAYES}_series"], 0.05))

    def test_generated_surrogate_bimodal(self):
        """A freshly generated surrogate written to CSV gives the same two modes."""
        path = self.tmp / "expression.csv"
        write_series_csv(path, generate_expression_surrogate(seed=9))
        report = run_gene_expression(GeneSettings(csv_path=str(path)), seed=3)
        row = self._msksd_modes(report)
        self.assertEqual(row["mode_count"], 2)
        low, high = sorted(row["mode_locations"])
        self.assertLess(low, 8.0)
        self.assertGreater(high, 8.0)

    def test_galaxy_reference_run(self):
        """Default Galaxy run: one mode near the main velocity group for every ε and method."""
        report = run_galaxy(seed=7)
        self.assertEqual(len(report.rows), 6)
        for row in report.rows:
            self.assertEqual(row["mode_count"], 1, row)
            self.assertTrue(1.5 < row["mode_locations"][0] < 2.8, row)
            self.assertFalse(any(4.5 <= m <= 5.5 for m in row["mode_locations"]))
            check_mode_report(detect_modes(report.curves[f"{row['method']}_{row['cell']}"], 0.05))

    def test_blindness_at_reference_setting(self):
        """w1 = 0.7, mu = 4, n = 1000: grid argmins over 10 seeds stay off the true weight."""
        results = [blindness_demo(w1_true=0.7, mu=4.0, sigma=1.0, n=1000, seed=seed) for seed in range(10)]
        ksd = np.array([r["w_hat_ksd"] for r in results])
        ms = np.array([r["w_hat_msksd"] for r in results])
        # flat KSD² curves: the argmin wanders over most of the grid
        self.assertGreaterEqual(float(ksd.max() - ksd.min()), 0.5, ksd)
        # the KDE-weighted curve drifts to the upper edge instead of 0.7
        self.assertGreaterEqual(float(np.median(ms)), 0.85, ms)


class TestReport(unittest.TestCase):
    """Report directory layout."""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def _report(self):
        settings = LocationSettings(n=30, epsilons=[0.1], ys=[5.0, 10.0])
        return run_gaussian_location(settings, MethodSettings(grid_points=64), seed=5)

    def test_layout(self):
        """config, summary and one curve file per (method, cell)."""
        out = write_report(self._report(), self.tmp / "run")
        names = sorted(p.name for p in out.iterdir())
        self.assertIn("config.json", names)
        self.assertIn("summary.csv", names)
        self.assertEqual(len([n for n in names if n.startswith("curve_")]), 6)
        self.assertIn("curve_msksd_bayes_eps0.1_y10.csv", names)
        self.assertFalse((self.tmp / "run.partial").exists())
        self.assertEqual(json.loads((out / "config.json").read_text())["seed"], 5)

    def test_byte_identical(self):
        """Two runs with the same seed write identical files (timing excluded)."""
        a = write_report(self._report(), self.tmp / "a")
        b = write_report(self._report(), self.tmp / "b")
        for path in sorted(a.iterdir()):
            self.assertEqual(path.read_bytes(), (b / path.name).read_bytes(), path.name)
        header = (a / "summary.csv").read_text().splitlines()[0]
        self.assertNotIn("wall_time_ms", header)

    def test_timing_column(self):
        """include_timing keeps wall_time_ms."""
        out = write_report(self._report(), self.tmp / "timed", include_timing=True)
        self.assertIn("wall_time_ms", (out / "summary.csv").read_text().splitlines()[0])

    def test_failed_write_leaves_nothing(self):
        """A failure while writing removes the staging directory."""
        report = ExperimentReport(experiment="x", config={}, seed=1, extras={"bad": object()})
        with self.assertRaises(TypeError):
            write_report(report, self.tmp / "broken")
        self.assertFalse((self.tmp / "broken").exists())
        self.assertFalse((self.tmp / "broken.partial").exists())


if __name__ == "__main__":
    unittest.main()
