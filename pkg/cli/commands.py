"""
CLI Commands

Each command takes the parsed arguments and a validated RunConfig and returns
a JSON-friendly result dictionary; cli.main prints it to stdout.
"""

import argparse
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from experiments import (
    BlindnessSettings,
    GalaxySettings,
    GeneSettings,
    LocationSettings,
    MethodSettings,
    bimodality_index,
    load_series_csv,
    run_blindness,
    run_galaxy,
    run_gaussian_location,
    run_gene_expression,
    run_rate_check,
    write_report,
)
from models import (
    KEFSpec,
    PluginDensity,
    ScoreModel,
    gaussian_location_model,
    kde_plugin,
    kef_model,
    tracking_plugin,
    two_component_mixture,
)
from posterior import (
    ChainConfig,
    ConjugatePosterior,
    GaussianPrior,
    conjugate_coefficients,
    conjugate_posterior,
    default_proposal_scale,
    make_log_posterior,
    rwm_sample,
    run_chains,
)
from stein import ksd_squared, ksd_squared_minibatch, precompute_gram, WeightSpec
from validation.config_validator import RunConfig
from validation.errors import InputError
from .flags import output_dir

logger = logging.getLogger(__name__)

PILOT_STEPS = 2000


def build_model(model_cfg: Dict[str, Any], for_fit: bool) -> Tuple[ScoreModel, Optional[GaussianPrior]]:
    """
    Model and prior from the config's model section.

    The mixture is fixed (θ empty) for ksd and weight-parameterised
    (θ = logit w1) for fit.
    """
    kind = model_cfg.get("kind", "gaussian")
    prior_variance = float(model_cfg.get("prior_variance", 1.0))
    if kind == "gaussian":
        return gaussian_location_model(), GaussianPrior.isotropic(1, prior_variance)
    if kind == "kef":
        model = kef_model(KEFSpec.from_dict(model_cfg.get("kef", {})))
        return model, GaussianPrior.from_model(model)
    if kind == "mixture":
        mix = model_cfg.get("mixture", {})
        model = two_component_mixture(float(mix.get("w1", 0.5)), float(mix.get("mu", 4.0)),
                                      float(mix.get("sigma", 1.0)), parameterize_weight=for_fit)
        return model, (GaussianPrior.isotropic(1, prior_variance) if for_fit else None)
    raise InputError(f"Unknown model kind '{kind}' (expected gaussian, kef or mixture)")


def resolve_theta(model_cfg: Dict[str, Any], model: ScoreModel,
                  prior: Optional[GaussianPrior]) -> Optional[np.ndarray]:
    """model.theta if given, else the prior mean (None for a fixed model)."""
    theta = model_cfg.get("theta")
    if model.param_dim == 0:
        if theta:
            raise InputError(f"Model '{model.name}' has no free parameters, got theta={theta}")
        return None
    if theta is None:
        return prior.mu0.copy()
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.param_dim,):
        raise InputError(f"Model '{model.name}' expects theta of length {model.param_dim}, got {theta.shape[0]}")
    return theta


def build_plugin(method: MethodSettings, X: np.ndarray, model: ScoreModel) -> Optional[PluginDensity]:
    if method.weight.is_identity:
        return None
    if method.plugin == "model_tracking":
        return tracking_plugin(model)
    return kde_plugin(X)


def cmd_ksd(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    """(MS-)KSD² of a CSV series against the configured model."""
    X = load_series_csv(args.data, log_transform=args.log_transform)
    method = MethodSettings.from_dict(run.section("method"))
    model_cfg = run.section("model")
    model, prior = build_model(model_cfg, for_fit=False)
    theta = resolve_theta(model_cfg, model, prior)
    plugin = build_plugin(method, X, model)

    def evaluate(weight: WeightSpec, density: Optional[PluginDensity]):
        if args.batch:
            return ksd_squared_minibatch(X, model, theta, base=method.base, weight=weight,
                                         weight_density=density, batch_size=args.batch, seed=run.seed)
        return ksd_squared(X, model, theta, base=method.base, weight=weight, weight_density=density)

    value = evaluate(method.weight, plugin)
    result: Dict[str, Any] = {
        "value": value.value,
        "estimator": value.estimator,
        "n": int(X.shape[0]),
        "model": model.describe(),
        "theta": None if theta is None else theta.tolist(),
        "kernel": method.base.to_dict(),
        "weight": method.weight.to_dict(),
        "seed": run.seed,
    }
    if value.batch_size is not None:
        result["batch_size"] = value.batch_size
    if args.compare:
        result["ksd_squared"] = evaluate(WeightSpec.identity(), None).value
    logger.info(f"[OK] {'MS-KSD' if not method.weight.is_identity else 'KSD'}^2 = {value.value:.6g} (n={X.shape[0]})")
    return result


def cmd_experiment(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    """Run one named experiment and write its report directory."""
    name = args.name
    method = MethodSettings.from_dict(run.section("method"))
    seed = run.seed
    if name == "galaxy":
        report = run_galaxy(settings=GalaxySettings.from_dict(run.section("galaxy")), method=method, seed=seed)
    elif name == "gene":
        report = run_gene_expression(GeneSettings.from_dict(run.section("gene")), method, seed)
    elif name == "location":
        report = run_gaussian_location(LocationSettings.from_dict(run.section("location")), method, seed)
    elif name == "blindness":
        report = run_blindness(BlindnessSettings.from_dict(run.section("blindness")), method, seed)
    elif name == "rate":
        rate = run.section("rate")
        report = run_rate_check(sizes=rate.get("sizes", (50, 100, 200, 400, 800, 1600)),
                                theta_star=float(rate.get("theta_star", 1.0)), method=method, seed=seed)
    else:
        raise InputError(f"Unknown experiment '{name}' (expected galaxy, gene, location, blindness or rate)")

    out = output_dir(args, run.output_root, f"{name}_seed{seed}")
    write_report(report, out, config=run.to_dict(), include_timing=args.timing)
    result: Dict[str, Any] = {"experiment": name, "out": str(out), "rows": len(report.rows), "seed": seed}
    if name == "blindness":
        result["w_hat_ksd"] = report.extras["w_hat_ksd"]
        result["w_hat_msksd"] = report.extras["w_hat_msksd"]
    if name == "rate":
        result["slope"] = report.extras["slope"]
    if name == "gene" and "bimodality_index" in report.extras:
        result["bimodality_index"] = report.extras["bimodality_index"]
    return result


def _proposal_scale(run: RunConfig, target, initial: np.ndarray, prior: GaussianPrior,
                    post: Optional[ConjugatePosterior], n: int, alpha: float) -> np.ndarray:
    """Configured scale, else 2.4/√p times the conjugate sd or a pilot-chain sd."""
    configured = run.section("mcmc").get("proposal_scale")
    p = initial.shape[0]
    if configured is not None:
        return np.broadcast_to(np.asarray(configured, dtype=float), (p,)).copy()
    if post is not None:
        return default_proposal_scale(p, post.sd)
    prior_sd = np.sqrt(np.diag(prior.Sigma0)) / np.sqrt(max(alpha * n, 1.0))
    pilot = rwm_sample(target, ChainConfig(steps=PILOT_STEPS, burn_in=PILOT_STEPS // 2,
                                           proposal_scale=default_proposal_scale(p, prior_sd).tolist(),
                                           seed=run.seed), initial)
    sd = np.maximum(pilot.samples.std(axis=0), 1e-3 * prior_sd)
    logger.info(f"Pilot chain acceptance {pilot.acceptance_rate:.2f}, sd {np.round(sd, 4).tolist()}")
    return default_proposal_scale(p, sd)


def cmd_fit(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    """
    Generalized posterior of the configured model.

    The closed form is reported whenever the model is an exponential family
    and the weight's plug-in is θ-independent; --mcmc adds random-walk
    Metropolis chains (the only route otherwise).
    """
    X = load_series_csv(args.data, log_transform=args.log_transform)
    n = int(X.shape[0])
    method = MethodSettings.from_dict(run.section("method"))
    model, prior = build_model(run.section("model"), for_fit=True)
    plugin = build_plugin(method, X, model)
    alpha = method.alpha

    result: Dict[str, Any] = {
        "model": model.describe(),
        "p": prior.dimension,
        "n": n,
        "alpha": alpha,
        "kernel": method.base.to_dict(),
        "weight": method.weight.to_dict(),
        "seed": run.seed,
    }
    conjugate = model.decomposition is not None and (plugin is None or not plugin.theta_dependent)
    coeffs, post = None, None
    if conjugate or not args.mcmc:
        coeffs = conjugate_coefficients(X, model, base=method.base, weight=method.weight, plugin=plugin)
        post = conjugate_posterior(prior, coeffs, alpha)
        result["conjugate"] = post.to_dict()
        logger.info(f"[OK] Conjugate posterior: p={prior.dimension}, min eigenvalue of Gamma_n "
                    f"{coeffs.min_eigenvalue():.3e}")

    if args.mcmc:
        if coeffs is not None:
            target = make_log_posterior(prior, alpha, coeffs=coeffs)
        else:
            target = make_log_posterior(prior, alpha, model=model, base=method.base, weight=method.weight,
                                        plugin=plugin, gram=precompute_gram(X, method.base))
        initial = post.mu_n.copy() if post is not None else prior.mu0.copy()
        mcmc = run.section("mcmc")
        scale = _proposal_scale(run, target, initial, prior, post, n, alpha)
        config = ChainConfig(
            steps=int(mcmc.get("steps", 20000)),
            burn_in=mcmc.get("burn_in"),
            proposal_scale=scale.tolist(),
            seed=run.seed,
            thin=int(mcmc.get("thin", 1)),
        )
        chains = run_chains(target, config, initial, n_chains=int(mcmc.get("chains", 4)),
                            n_jobs=int(mcmc.get("n_jobs", 1)))
        result["mcmc"] = chains.to_dict()
        result["mcmc"]["config"] = config.to_dict()
    return result


def cmd_bi(args: argparse.Namespace, run: RunConfig) -> Dict[str, Any]:
    """Bimodality index of a CSV series."""
    values = load_series_csv(args.data, log_transform=args.log_transform)
    bi = bimodality_index(values, seed=run.seed)
    logger.info(f"[OK] Bimodality index {bi:.4f} (n={values.shape[0]})")
    return {"bimodality_index": bi, "n": int(values.shape[0]), "source": str(args.data), "seed": run.seed}


COMMANDS = {
    "ksd": cmd_ksd,
    "experiment": cmd_experiment,
    "fit": cmd_fit,
    "bi": cmd_bi,
}
