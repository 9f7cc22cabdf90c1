"""
Experiment Runners

- run_galaxy:            KEF density of the Galaxy velocities under replacement contamination
- run_gene_expression:   KEF density of a single expression series
- run_gaussian_location: standard Bayes vs KSD-Bayes vs MS-KSD-Bayes on contaminated N(θ⋆, 1)
- blindness_demo:        mixture-weight estimates by KSD² and MS-KSD² grid search
- run_rate_check:        posterior-sd contraction rate of MS-KSD-Bayes

Every cell draws from its own RNG stream seeded by (master seed, cell index),
so results do not depend on scheduling or n_jobs.
"""

import itertools
import logging
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.integrate import trapezoid
from scipy.special import logit
from scipy.stats import norm

from kernels import BaseKernelSpec
from models import (
    PluginDensity,
    ScoreModel,
    gaussian_location_model,
    kde_plugin,
    kef_model,
    tracking_plugin,
    two_component_mixture,
)
from posterior import (
    ConjugatePosterior,
    DensityCurve,
    GaussianPrior,
    conjugate_coefficients,
    conjugate_posterior,
    log_posterior_grid,
    make_log_posterior,
    predictive_density,
)
from stein import WeightSpec, ksd_squared, precompute_gram
from validation.errors import InputError
from .analysis import bimodality_index, detect_modes
from .data import (
    GALAXY_CSV,
    GENE_SURROGATE_CSV,
    ContaminationSpec,
    contaminate_dataset,
    generate_location_data,
    load_series_csv,
)
from .report import ExperimentReport
from .settings import (
    BlindnessSettings,
    GalaxySettings,
    GeneSettings,
    LocationSettings,
    MethodSettings,
)

logger = logging.getLogger(__name__)

STANDARD_BAYES = "standard_bayes"
KSD_BAYES = "ksd_bayes"
MSKSD_BAYES = "msksd_bayes"

DEFAULT_RATE_SIZES = (50, 100, 200, 400, 800, 1600)


def cell_seed(master_seed: int, cell_index: int) -> int:
    """Seed of one grid cell, derived from (master seed, cell index)."""
    return int(np.random.SeedSequence([int(master_seed), int(cell_index)]).generate_state(1)[0])


def _banner(title: str) -> None:
    logger.info("=" * 60)
    logger.info(title)
    logger.info("=" * 60)


def _method_weights(method: MethodSettings) -> List[Tuple[str, WeightSpec]]:
    return [(KSD_BAYES, WeightSpec.identity()), (MSKSD_BAYES, method.weight)]


def _weight_plugin(method: MethodSettings, X: np.ndarray, model: ScoreModel) -> PluginDensity:
    if method.plugin == "kde":
        return kde_plugin(X)
    if method.plugin == "model_tracking":
        return tracking_plugin(model)
    raise InputError(f"Unknown plug-in density '{method.plugin}' (expected kde or model_tracking)")


def _fit_conjugate(X: np.ndarray, model: ScoreModel, prior: GaussianPrior, base: BaseKernelSpec,
                   weight: WeightSpec, plugin: PluginDensity, alpha: float) -> ConjugatePosterior:
    coeffs = conjugate_coefficients(X, model, base=base, weight=weight, plugin=plugin)
    return conjugate_posterior(prior, coeffs, alpha)


def _predictive(grid: np.ndarray, model: ScoreModel, post: ConjugatePosterior,
                method: MethodSettings, seed: int, label: str) -> DensityCurve:
    if method.predictive == "averaged":
        rng = np.random.default_rng(seed)
        draws = rng.multivariate_normal(post.mu_n, post.Sigma_n, size=method.predictive_draws,
                                        method="cholesky")
        return predictive_density(grid, model, draws=draws, label=label)
    return predictive_density(grid, model, theta=post.mu_n, label=label)


def _mode_columns(curve: DensityCurve, threshold: float) -> Dict[str, Any]:
    modes = detect_modes(curve, threshold)
    return {
        "mode_count": modes.mode_count,
        "mode_locations": modes.locations.tolist(),
        "mode_masses": modes.masses.tolist(),
    }


def _cell_label(**values: float) -> str:
    return "_".join(f"{k}{v:g}" for k, v in values.items())


def _fit_kef_series(X: np.ndarray, grid_fit: np.ndarray, kef_spec, kernel: BaseKernelSpec,
                    method: MethodSettings, seed: int, cell: str, to_output,
                    extra: Optional[Dict[str, Any]] = None) -> Tuple[List[Dict[str, Any]], Dict[str, DensityCurve]]:
    """Fit KSD-Bayes and MS-KSD-Bayes KEF posteriors on one (transformed) sample."""
    model = kef_model(kef_spec)
    prior = GaussianPrior.from_model(model)
    plugin = _weight_plugin(method, X, model)
    rows, curves = [], {}
    for name, weight in _method_weights(method):
        start = time.perf_counter()
        post = _fit_conjugate(X, model, prior, kernel, weight, plugin, method.alpha)
        curve = to_output(_predictive(grid_fit, model, post, method, seed, f"{name}_{cell}"))
        elapsed = (time.perf_counter() - start) * 1000.0
        row = {"method": name, "cell": cell, **(extra or {}),
               "posterior_mean_norm": float(np.linalg.norm(post.mu_n))}
        row.update(_mode_columns(curve, method.prominence_threshold))
        row["wall_time_ms"] = elapsed
        rows.append(row)
        curves[f"{name}_{cell}"] = curve
        logger.info(f"[OK] {name} {cell}: {row['mode_count']} mode(s) at "
                    f"{', '.join(f'{m:.3f}' for m in row['mode_locations'])} ({elapsed:.0f} ms)")
    return rows, curves


def run_galaxy(data=None, settings: Optional[GalaxySettings] = None,
               method: Optional[MethodSettings] = None, seed: int = 0) -> ExperimentReport:
    """
    Galaxy velocity replication.

    Velocities are divided by settings.unit_scale, contaminated per ε by
    replacing round(ε n) points with N(y, noise_sd²), centered at the clean
    mean and fitted with both methods. Curves are reported on the scaled
    (uncentered) axis.

    Args:
        data: Velocities in km/s (defaults to the bundled dataset)
        settings: Galaxy settings
        method: Shared method settings
        seed: Master seed

    Returns:
        ExperimentReport
    """
    settings = settings or GalaxySettings()
    method = method or MethodSettings()
    raw = load_series_csv(GALAXY_CSV) if data is None else np.asarray(data, dtype=float).ravel()
    scaled = raw / settings.unit_scale
    shift = float(np.mean(scaled)) if settings.center else 0.0

    lo = min(float(scaled.min()), settings.y) - settings.margin
    hi = max(float(scaled.max()), settings.y) + settings.margin
    grid = np.linspace(lo, hi, method.grid_points)

    _banner("GALAXY EXPERIMENT")
    logger.info(f"n={scaled.shape[0]}, epsilons={settings.epsilons}, y={settings.y}, shift={shift:.4f}")

    report = ExperimentReport(
        experiment="galaxy",
        config={"galaxy": settings.to_dict(), "method": method.to_dict()},
        seed=seed,
        extras={"shift": shift, "unit_scale": settings.unit_scale},
    )
    for i, eps in enumerate(settings.epsilons):
        spec = ContaminationSpec(epsilon=eps, y=settings.y, noise_sd=settings.noise_sd, mode="replace")
        s = cell_seed(seed, i)
        X = contaminate_dataset(scaled, spec, seed=s) - shift
        rows, curves = _fit_kef_series(X, grid - shift, settings.kef, settings.kernel, method, s,
                                       _cell_label(eps=eps), lambda c: c.shifted(shift),
                                       extra={"epsilon": eps})
        report.rows.extend(rows)
        report.curves.update(curves)

    _banner("GALAXY EXPERIMENT COMPLETE")
    return report


def run_gene_expression(settings: Optional[GeneSettings] = None,
                        method: Optional[MethodSettings] = None, seed: int = 0) -> ExperimentReport:
    """
    Gene expression replication on one series.

    The series is optionally log2(1 + x)-transformed, standardized, fitted
    with both methods and reported on the original axis.

    Args:
        settings: Gene settings (csv_path None = bundled surrogate)
        method: Shared method settings
        seed: Master seed

    Returns:
        ExperimentReport (extras carry the bimodality index)
    """
    settings = settings or GeneSettings()
    method = method or MethodSettings()
    path = settings.csv_path or str(GENE_SURROGATE_CSV)
    values = load_series_csv(path, log_transform=settings.log_transform)
    if values.shape[0] < 2:
        raise InputError(f"Gene series needs at least 2 values, got {values.shape[0]}")
    center = float(np.mean(values)) if settings.standardize else 0.0
    scale = float(np.std(values, ddof=1)) if settings.standardize else 1.0
    if not scale > 0:
        raise InputError("Gene series has zero variance and cannot be standardized")
    X = (values - center) / scale

    grid = np.linspace(X.min() - settings.margin, X.max() + settings.margin, method.grid_points)
    _banner("GENE EXPRESSION EXPERIMENT")
    logger.info(f"Series {path}: n={values.shape[0]}, center={center:.4f}, scale={scale:.4f}")

    report = ExperimentReport(
        experiment="gene",
        config={"gene": settings.to_dict(), "method": method.to_dict()},
        seed=seed,
        extras={"center": center, "scale": scale, "source": path},
    )
    rows, curves = _fit_kef_series(X, grid, settings.kef, settings.kernel, method, cell_seed(seed, 0),
                                   "series", lambda c: c.shifted(center, scale))
    report.rows.extend(rows)
    report.curves.update(curves)
    if values.shape[0] >= 10:
        report.extras["bimodality_index"] = bimodality_index(values, seed=seed)
    _banner("GENE EXPRESSION EXPERIMENT COMPLETE")
    return report


def _gaussian_curve(theta_grid: np.ndarray, mean: float, sd: float, label: str) -> DensityCurve:
    density = norm.pdf(theta_grid, loc=mean, scale=sd)
    return DensityCurve(grid=theta_grid, density=density / trapezoid(density, theta_grid), label=label)


def _location_cell(index: int, eps: float, y: float, settings: LocationSettings,
                   method: MethodSettings, seed: int):
    """One (ε, y) cell: data draw plus the three posteriors."""
    cell = _cell_label(eps=eps, y=y)
    spec = ContaminationSpec(epsilon=eps, y=y, noise_sd=settings.noise_sd, mode="mixture")
    x = generate_location_data(settings.n, settings.theta_star, spec, seed=cell_seed(seed, index))
    theta_grid = np.linspace(min(settings.theta_star, y) - 3.0, max(settings.theta_star, y) + 3.0,
                             method.grid_points)
    model = gaussian_location_model()
    prior = GaussianPrior.isotropic(1, settings.prior_variance)
    rows, curves = [], {}

    def record(name: str, curve: DensityCurve, mean: float, sd: float, start: float) -> None:
        row = {"method": name, "cell": cell, "epsilon": eps, "y": y,
               "posterior_mean": mean, "posterior_sd": sd}
        row.update(_mode_columns(curve, method.prominence_threshold))
        row["wall_time_ms"] = (time.perf_counter() - start) * 1000.0
        rows.append(row)
        curves[f"{name}_{cell}"] = curve

    start = time.perf_counter()
    precision = settings.n + 1.0 / settings.prior_variance
    mean, sd = float(np.sum(x) / precision), float(1.0 / np.sqrt(precision))
    record(STANDARD_BAYES, _gaussian_curve(theta_grid, mean, sd, f"{STANDARD_BAYES}_{cell}"), mean, sd, start)

    plugin = _weight_plugin(method, x, model)
    for name, weight in _method_weights(method):
        start = time.perf_counter()
        if not weight.is_identity and plugin.theta_dependent:
            target = make_log_posterior(prior, method.alpha, samples=x, model=model, base=method.base,
                                        weight=weight, plugin=plugin)
            grid_post = log_posterior_grid(theta_grid, target)
            curve = DensityCurve(grid=theta_grid, density=grid_post.density, label=f"{name}_{cell}")
            record(name, curve, grid_post.mean, grid_post.sd, start)
        else:
            post = _fit_conjugate(x, model, prior, method.base, weight, plugin, method.alpha)
            mean, sd = float(post.mu_n[0]), float(post.sd[0])
            record(name, _gaussian_curve(theta_grid, mean, sd, f"{name}_{cell}"), mean, sd, start)
    return rows, curves


def run_gaussian_location(settings: Optional[LocationSettings] = None,
                          method: Optional[MethodSettings] = None, seed: int = 0) -> ExperimentReport:
    """
    Gaussian location robustness grid.

    For every (ε, y) cell: standard Bayes (N(0, v) prior, posterior mean
    Σx / (n + 1/v)), KSD-Bayes and MS-KSD-Bayes.

    Args:
        settings: Location settings
        method: Shared method settings (n_jobs parallelises cells)
        seed: Master seed

    Returns:
        ExperimentReport with 3 rows per cell
    """
    settings = settings or LocationSettings()
    method = method or MethodSettings()
    cells = list(itertools.product(settings.epsilons, settings.ys))
    _banner("GAUSSIAN LOCATION EXPERIMENT")
    logger.info(f"n={settings.n}, theta*={settings.theta_star}, {len(cells)} cells, n_jobs={method.n_jobs}")

    results = Parallel(n_jobs=method.n_jobs)(
        delayed(_location_cell)(i, eps, y, settings, method, seed) for i, (eps, y) in enumerate(cells)
    )
    report = ExperimentReport(
        experiment="location",
        config={"location": settings.to_dict(), "method": method.to_dict()},
        seed=seed,
    )
    for rows, curves in results:
        report.rows.extend(rows)
        report.curves.update(curves)
        means = ", ".join(f"{r['method']}={r['posterior_mean']:.3f}" for r in rows)
        logger.info(f"[OK] {rows[0]['cell']}: {means}")
    _banner("GAUSSIAN LOCATION EXPERIMENT COMPLETE")
    return report


def blindness_demo(w1_true: float = 0.7, mu: float = 4.0, sigma: float = 1.0, n: int = 1000,
                   w1_grid: Optional[Sequence[float]] = None, seed: int = 0,
                   method: Optional[MethodSettings] = None) -> Dict[str, Any]:
    """
    Grid-search the mixture weight by KSD² and MS-KSD².

    Args:
        w1_true: True weight of the +mu component
        mu: Component location (components at ±mu)
        sigma: Component sd
        n: Sample size
        w1_grid: Candidate weights in (0, 1) (default step 0.02)
        seed: Seed for the data draw
        method: Kernel, weight and plug-in settings

    Returns:
        Dict with w_hat_ksd, w_hat_msksd, the grid and both loss curves
    """
    method = method or MethodSettings()
    if w1_grid is None:
        w1_grid = BlindnessSettings().w1_grid()
    w1_grid = np.asarray(w1_grid, dtype=float)
    if np.any((w1_grid <= 0) | (w1_grid >= 1)):
        raise InputError("w1 grid must lie strictly inside (0, 1)")
    if mu / sigma < 3:
        logger.warning(f"mu/sigma = {mu / sigma:.2f} < 3: modes are not well separated")

    truth = two_component_mixture(w1_true, mu, sigma)
    data = truth.sample(n, np.random.default_rng(seed))
    model = two_component_mixture(0.5, mu, sigma, parameterize_weight=True)
    gram = precompute_gram(data, method.base)
    plugin = _weight_plugin(method, data, model)

    ksd_losses, ms_losses = [], []
    for w in w1_grid:
        theta = np.array([logit(w)])
        ksd_losses.append(ksd_squared(None, model, theta, gram=gram).value)
        ms_losses.append(ksd_squared(None, model, theta, weight=method.weight,
                                     weight_density=plugin, gram=gram).value)
    ksd_losses = np.array(ksd_losses)
    ms_losses = np.array(ms_losses)
    result = {
        "w_hat_ksd": float(w1_grid[int(np.argmin(ksd_losses))]),
        "w_hat_msksd": float(w1_grid[int(np.argmin(ms_losses))]),
        "w1_true": w1_true,
        "w1_grid": w1_grid.tolist(),
        "ksd_losses": ksd_losses.tolist(),
        "msksd_losses": ms_losses.tolist(),
    }
    logger.info(f"[OK] Blindness (w1={w1_true}, mu={mu}): "
                f"w_hat_ksd={result['w_hat_ksd']:.2f}, w_hat_msksd={result['w_hat_msksd']:.2f}")
    return result


def run_blindness(settings: Optional[BlindnessSettings] = None,
                  method: Optional[MethodSettings] = None, seed: int = 0) -> ExperimentReport:
    """blindness_demo wrapped as an ExperimentReport (one row per method)."""
    settings = settings or BlindnessSettings()
    method = method or MethodSettings()
    _banner("MIXTURE WEIGHT BLINDNESS")
    result = blindness_demo(settings.w1_true, settings.mu, settings.sigma, settings.n,
                            settings.w1_grid(), seed=seed, method=method)
    report = ExperimentReport(
        experiment="blindness",
        config={"blindness": settings.to_dict(), "method": method.to_dict()},
        seed=seed,
        extras=result,
    )
    cell = _cell_label(w1=settings.w1_true, mu=settings.mu)
    report.rows.append({"method": KSD_BAYES, "cell": cell, "w_hat": result["w_hat_ksd"]})
    report.rows.append({"method": MSKSD_BAYES, "cell": cell, "w_hat": result["w_hat_msksd"]})
    return report


def run_rate_check(sizes: Sequence[int] = DEFAULT_RATE_SIZES, theta_star: float = 1.0,
                   method: Optional[MethodSettings] = None, seed: int = 0) -> ExperimentReport:
    """
    Contraction rate of MS-KSD-Bayes on clean Gaussian-location data.

    Fits log(posterior sd) against log n; the slope is expected near -1/2.

    Args:
        sizes: Sample sizes
        theta_star: True location
        method: Kernel, weight and α settings
        seed: Master seed

    Returns:
        ExperimentReport (extras carry the fitted slope)
    """
    method = method or MethodSettings()
    model = gaussian_location_model()
    prior = GaussianPrior.isotropic(1, 1.0)
    clean = ContaminationSpec(epsilon=0.0, mode="mixture")
    _banner("RATE CHECK")
    report = ExperimentReport(
        experiment="rate",
        config={"sizes": list(sizes), "theta_star": theta_star, "method": method.to_dict()},
        seed=seed,
    )
    sds = []
    for i, n in enumerate(sizes):
        start = time.perf_counter()
        x = generate_location_data(int(n), theta_star, clean, seed=cell_seed(seed, i))
        plugin = kde_plugin(x)
        post = _fit_conjugate(x, model, prior, method.base, method.weight, plugin, method.alpha)
        sd = float(post.sd[0])
        sds.append(sd)
        report.rows.append({"method": MSKSD_BAYES, "cell": f"n{n}", "n": int(n),
                            "posterior_mean": float(post.mu_n[0]), "posterior_sd": sd,
                            "wall_time_ms": (time.perf_counter() - start) * 1000.0})
        logger.info(f"[OK] n={n}: posterior sd {sd:.4f}")
    slope = float(np.polyfit(np.log(np.asarray(sizes, dtype=float)), np.log(sds), 1)[0])
    report.extras["slope"] = slope
    logger.info(f"Log-log slope of posterior sd: {slope:.3f}")
    _banner("RATE CHECK COMPLETE")
    return report
