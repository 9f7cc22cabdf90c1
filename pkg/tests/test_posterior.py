"""
Tests for Generalized Posteriors

Conjugate coefficients against direct evaluation, the closed-form posterior,
grid and MCMC posteriors, and predictive curves.
"""

import unittest

import numpy as np
import pytest
from scipy.stats import norm

from kernels import BaseKernelSpec
from models import (
    KEFSpec,
    gaussian_location_model,
    kde_plugin,
    kef_model,
    tracking_plugin,
    two_component_mixture,
)
from posterior import (
    ChainConfig,
    ConjugateCoefficients,
    GaussianPrior,
    batch_means_mcse,
    chain_seeds,
    conjugate_coefficients,
    conjugate_posterior,
    default_proposal_scale,
    generalized_log_posterior,
    log_posterior_grid,
    make_log_posterior,
    predictive_density,
    run_chains,
    rwm_sample,
    stable_cholesky,
)
from stein import WeightSpec, ksd_squared, precompute_gram
from validation.errors import ConjugacyError, InputError, NumericalError, UnsupportedModelError
from validation.invariants import check_density_normalised, check_posterior_precision


class WhitenedTarget:
    """Log-target in coordinates η with θ = mean + L η."""

    def __init__(self, target, mean, chol):
        self.target = target
        self.mean = mean
        self.chol = chol

    def __call__(self, eta):
        return self.target(self.mean + self.chol @ eta)


class TestConjugateCoefficients(unittest.TestCase):
    """θ^T Γ θ + τ^T θ + c reproduces the direct discrepancy."""

    def setUp(self):
        self.rng = np.random.default_rng(21)
        self.X = self.rng.normal(0.3, 1.5, size=50)
        self.base = BaseKernelSpec.imq()
        self.weight = WeightSpec.log_reciprocal(gamma=1.0, epsilon=0.1)
        self.plugin = kde_plugin(self.X)

    def _check_quadratic(self, model, thetas, weight, plugin):
        coeffs = conjugate_coefficients(self.X, model, base=self.base, weight=weight, plugin=plugin)
        for theta in thetas:
            direct = ksd_squared(self.X, model, theta, base=self.base, weight=weight,
                                 weight_density=plugin).value
            self.assertLessEqual(abs(coeffs.quadratic(theta) - direct), 1e-8 * max(1.0, abs(direct)))
        return coeffs

    def test_gaussian_location(self):
        """Gaussian location model, weighted and unweighted."""
        model = gaussian_location_model()
        thetas = self.rng.normal(0.0, 2.0, size=(20, 1))
        self._check_quadratic(model, thetas, self.weight, self.plugin)
        self._check_quadratic(model, thetas, WeightSpec.identity(), None)

    def test_kef(self):
        """KEF with p = 5, weighted and unweighted."""
        model = kef_model(KEFSpec(p=5))
        thetas = self.rng.normal(0.0, 1.0, size=(20, 5))
        coeffs = self._check_quadratic(model, thetas, self.weight, self.plugin)
        self._check_quadratic(model, thetas, WeightSpec.identity(), None)
        self.assertEqual(coeffs.Gamma_n.shape, (5, 5))
        np.testing.assert_array_equal(coeffs.Gamma_n, coeffs.Gamma_n.T)
        self.assertGreater(coeffs.min_eigenvalue(), -1e-10)

    def test_rbf_kernel(self):
        """The identity holds for the RBF base kernel too."""
        self.base = BaseKernelSpec.rbf(1.0)
        self._check_quadratic(gaussian_location_model(), self.rng.normal(size=(5, 1)), self.weight, self.plugin)

    def test_gram_reuse(self):
        """Coefficients from a cached Gram equal those from raw samples."""
        model = gaussian_location_model()
        gram = precompute_gram(self.X, self.base)
        a = conjugate_coefficients(self.X, model, base=self.base, weight=self.weight, plugin=self.plugin)
        b = conjugate_coefficients(None, model, weight=self.weight, plugin=self.plugin, gram=gram)
        np.testing.assert_allclose(a.Gamma_n, b.Gamma_n, rtol=1e-14)
        np.testing.assert_allclose(a.tau_n, b.tau_n, rtol=1e-14)

    def test_tracking_plugin_rejected(self):
        """A θ-tracking weight cannot be made conjugate."""
        model = gaussian_location_model()
        with self.assertRaises(ConjugacyError):
            conjugate_coefficients(self.X, model, weight=self.weight, plugin=tracking_plugin(model))

    def test_mixture_rejected(self):
        """Models without an exponential-family decomposition are unsupported."""
        model = two_component_mixture(0.5, 4.0, 1.0, parameterize_weight=True)
        with self.assertRaises(UnsupportedModelError):
            conjugate_coefficients(self.X, model)


class TestConjugatePosterior(unittest.TestCase):
    """Closed-form Gaussian posterior."""

    def test_scalar_example(self):
        """Σ0 = 1, Γ = 0.5, τ = 0.5, α n = 1 gives precision 2 and mean -0.25."""
        coeffs = ConjugateCoefficients(Gamma_n=np.array([[0.5]]), tau_n=np.array([0.5]), const_n=0.0, n=1)
        post = conjugate_posterior(GaussianPrior.isotropic(1, 1.0), coeffs, alpha=1.0)
        self.assertAlmostEqual(float(post.precision_n[0, 0]), 2.0, places=14)
        self.assertAlmostEqual(float(post.Sigma_n[0, 0]), 0.5, places=14)
        self.assertAlmostEqual(float(post.mu_n[0]), -0.25, places=14)

    def test_mean_minimises_log_posterior(self):
        """μ_n maximises log π0(θ) - α n KSD²(θ)."""
        X = np.random.default_rng(4).normal(1.0, 1.0, size=40)
        model = gaussian_location_model()
        prior = GaussianPrior.isotropic(1, 1.0)
        coeffs = conjugate_coefficients(X, model)
        post = conjugate_posterior(prior, coeffs, alpha=1.0)
        target = make_log_posterior(prior, 1.0, coeffs=coeffs)
        top = target(post.mu_n)
        for delta in (-1e-3, 1e-3):
            self.assertLess(target(post.mu_n + delta), top)

    def test_precision_identity(self):
        """Σ_n^-1 = Σ0^-1 + 2 α n Γ_n for the KEF."""
        X = np.random.default_rng(5).normal(size=60)
        model = kef_model(KEFSpec(p=5))
        prior = GaussianPrior.from_model(model)
        coeffs = conjugate_coefficients(X, model, weight=WeightSpec.log_reciprocal(), plugin=kde_plugin(X))
        for alpha in (0.5, 1.0, 2.0):
            post = conjugate_posterior(prior, coeffs, alpha)
            check_posterior_precision(prior, coeffs, post, alpha, tol=1e-8)

    def test_zero_alpha_returns_prior(self):
        """α = 0 leaves the prior unchanged."""
        X = np.random.default_rng(6).normal(size=30)
        model = kef_model(KEFSpec(p=4))
        prior = GaussianPrior.from_model(model)
        post = conjugate_posterior(prior, conjugate_coefficients(X, model), alpha=0.0)
        np.testing.assert_allclose(post.mu_n, prior.mu0, atol=1e-12)
        np.testing.assert_allclose(post.Sigma_n, prior.Sigma0, rtol=1e-12)

    def test_negative_alpha(self):
        """α < 0 is an input error."""
        coeffs = ConjugateCoefficients(Gamma_n=np.eye(1), tau_n=np.zeros(1), const_n=0.0, n=1)
        with self.assertRaises(InputError):
            conjugate_posterior(GaussianPrior.isotropic(1), coeffs, alpha=-1.0)

    def test_dimension_mismatch(self):
        """Prior and coefficient dimensions must agree."""
        coeffs = ConjugateCoefficients(Gamma_n=np.eye(2), tau_n=np.zeros(2), const_n=0.0, n=1)
        with self.assertRaises(InputError):
            conjugate_posterior(GaussianPrior.isotropic(1), coeffs, alpha=1.0)

    def test_non_pd_precision(self):
        """A precision that jitter cannot repair raises NumericalError."""
        coeffs = ConjugateCoefficients(Gamma_n=np.array([[-10.0]]), tau_n=np.zeros(1), const_n=0.0, n=1)
        with self.assertRaises(NumericalError):
            conjugate_posterior(GaussianPrior.isotropic(1), coeffs, alpha=1.0)

    def test_stable_cholesky_jitter(self):
        """Near-singular matrices are repaired with a logged jitter."""
        with self.assertLogs("posterior.conjugate", level="WARNING"):
            stable_cholesky(np.diag([1.0, -1e-12]), "test matrix")
        with self.assertRaises(NumericalError):
            stable_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]), "test matrix")

    def test_invalid_prior(self):
        """Asymmetric or indefinite prior covariances are rejected."""
        with self.assertRaises(InputError):
            GaussianPrior(mu0=np.zeros(2), Sigma0=np.array([[1.0, 0.5], [0.0, 1.0]]))
        with self.assertRaises(InputError):
            GaussianPrior(mu0=np.zeros(2), Sigma0=np.array([[1.0, 2.0], [2.0, 1.0]]))
        with self.assertRaises(UnsupportedModelError):
            GaussianPrior.from_model(gaussian_location_model())


class TestLogPosterior(unittest.TestCase):
    """Fast and direct log-posterior paths and grid evaluation."""

    def setUp(self):
        self.X = np.random.default_rng(8).normal(0.5, 1.0, size=40)
        self.model = gaussian_location_model()
        self.prior = GaussianPrior.isotropic(1, 1.0)
        self.weight = WeightSpec.log_reciprocal()
        self.plugin = kde_plugin(self.X)

    def test_fast_and_direct_agree(self):
        """Both paths give the same log-posterior."""
        coeffs = conjugate_coefficients(self.X, self.model, weight=self.weight, plugin=self.plugin)
        fast = make_log_posterior(self.prior, 1.0, coeffs=coeffs)
        direct = make_log_posterior(self.prior, 1.0, model=self.model, samples=self.X,
                                    base=BaseKernelSpec.imq(), weight=self.weight, plugin=self.plugin)
        self.assertTrue(fast.is_fast)
        self.assertFalse(direct.is_fast)
        for theta in (-1.0, 0.0, 0.7, 3.0):
            self.assertAlmostEqual(fast([theta]), direct([theta]), delta=1e-8 * max(1.0, abs(direct([theta]))))

    def test_single_evaluation(self):
        """log π0(θ) - α n KSD²(θ) through a cached Gram."""
        gram = precompute_gram(self.X, BaseKernelSpec.imq())
        value = generalized_log_posterior([0.3], self.prior, 2.0, model=self.model, gram=gram,
                                          weight=self.weight, plugin=self.plugin)
        ksd = ksd_squared(self.X, self.model, [0.3], weight=self.weight, weight_density=self.plugin).value
        self.assertAlmostEqual(value, float(norm.logpdf(0.3)) - 2.0 * 40 * ksd, places=8)

    def test_zero_alpha_is_prior(self):
        """α = 0 returns the prior log-density."""
        target = make_log_posterior(self.prior, 0.0, model=self.model, samples=self.X)
        self.assertAlmostEqual(target([0.4]), float(norm.logpdf(0.4)), places=12)

    def test_grid_matches_conjugate(self):
        """A grid posterior reproduces the conjugate moments."""
        coeffs = conjugate_coefficients(self.X, self.model, weight=self.weight, plugin=self.plugin)
        post = conjugate_posterior(self.prior, coeffs, 1.0)
        mu, sd = float(post.mu_n[0]), float(post.sd[0])
        target = make_log_posterior(self.prior, 1.0, model=self.model, gram=precompute_gram(self.X, BaseKernelSpec.imq()),
                                    weight=self.weight, plugin=self.plugin)
        grid = log_posterior_grid(np.linspace(mu - 8 * sd, mu + 8 * sd, 801), target)
        check_density_normalised(grid.theta, grid.density, tol=1e-9)
        self.assertAlmostEqual(grid.mean, mu, delta=1e-4 * sd)
        self.assertAlmostEqual(grid.sd, sd, delta=1e-3 * sd)
        self.assertGreater(grid.mass_within(mu, 2 * sd), 0.95)

    def test_grid_with_tracking_plugin(self):
        """The θ-tracking weight is supported off the conjugate path."""
        target = make_log_posterior(self.prior, 1.0, model=self.model, samples=self.X,
                                    weight=self.weight, plugin=tracking_plugin(self.model))
        grid = log_posterior_grid(np.linspace(-3, 4, 141), target)
        check_density_normalised(grid.theta, grid.density, tol=1e-9)
        self.assertTrue(np.isfinite(grid.mean))

    def test_grid_validation(self):
        """Malformed grids and vector parameters are rejected."""
        target = make_log_posterior(self.prior, 1.0, model=self.model, samples=self.X)
        with self.assertRaises(InputError):
            log_posterior_grid([0.0, 1.0], target)
        with self.assertRaises(InputError):
            log_posterior_grid([0.0, 2.0, 1.0], target)

    def test_missing_path(self):
        """Neither coefficients nor a model is an input error."""
        with self.assertRaises(InputError):
            make_log_posterior(self.prior, 1.0)


class TestSampler(unittest.TestCase):
    """Random-walk Metropolis."""

    def test_deterministic(self):
        """A fixed seed reproduces the chain exactly."""
        config = ChainConfig(steps=500, proposal_scale=1.0, seed=9)
        target = lambda theta: float(norm.logpdf(theta[0]))
        a = rwm_sample(target, config, [0.0])
        b = rwm_sample(target, config, [0.0])
        np.testing.assert_array_equal(a.samples, b.samples)
        self.assertEqual(a.samples.shape, (400, 1))
        self.assertTrue(0.0 < a.acceptance_rate < 1.0)

    def test_nan_target(self):
        """NaN log-targets raise NumericalError."""
        with self.assertRaises(NumericalError):
            rwm_sample(lambda theta: float("nan"), ChainConfig(steps=10, seed=0), [0.0])

    def test_zero_density_start(self):
        """Starting where the target is zero is an input error."""
        with self.assertRaises(InputError):
            rwm_sample(lambda theta: -np.inf, ChainConfig(steps=10, seed=0), [0.0])

    def test_chain_config_validation(self):
        """Invalid chain settings are rejected."""
        with self.assertRaises(InputError):
            ChainConfig(steps=0)
        with self.assertRaises(InputError):
            ChainConfig(steps=10, burn_in=10)
        with self.assertRaises(InputError):
            ChainConfig(proposal_scale=-1.0)

    def test_chain_seeds(self):
        """Chain seeds are deterministic and distinct."""
        self.assertEqual(chain_seeds(3, 4), chain_seeds(3, 4))
        self.assertEqual(len(set(chain_seeds(3, 4))), 4)

    def test_batch_means_mcse(self):
        """For iid draws the MCSE is close to sd / sqrt(m)."""
        draws = np.random.default_rng(0).standard_normal((10000, 2))
        mcse = batch_means_mcse(draws)
        self.assertTrue(np.all(mcse > 0.007) and np.all(mcse < 0.013))

    def test_run_chains_deterministic(self):
        """Multi-chain runs are reproducible for a master seed."""
        target = lambda theta: float(norm.logpdf(theta[0]))
        config = ChainConfig(steps=300, proposal_scale=2.4, seed=1)
        a = run_chains(target, config, [0.0], n_chains=3)
        b = run_chains(target, config, [0.0], n_chains=3)
        np.testing.assert_array_equal(a.pooled, b.pooled)
        self.assertEqual(len(a.chains), 3)


@pytest.mark.slow
class TestSamplerAgreement(unittest.TestCase):
    """RWM on the generalized log-posterior recovers the conjugate moments."""

    def test_kef_posterior(self):
        """KEF p = 5: whitened draws have mean 0 (3 MCSE) and unit variance (10%)."""
        X = np.random.default_rng(12).normal(size=50)
        model = kef_model(KEFSpec(p=5))
        prior = GaussianPrior.from_model(model)
        plugin = kde_plugin(X)
        weight = WeightSpec.log_reciprocal()
        coeffs = conjugate_coefficients(X, model, weight=weight, plugin=plugin)
        post = conjugate_posterior(prior, coeffs, alpha=1.0)
        chol = np.linalg.cholesky(post.Sigma_n)
        target = WhitenedTarget(make_log_posterior(prior, 1.0, coeffs=coeffs), post.mu_n, chol)

        config = ChainConfig(steps=100000, proposal_scale=default_proposal_scale(5).tolist(), seed=2024)
        chains = run_chains(target, config, np.zeros(5), n_chains=4)
        mean, mcse = chains.mean, chains.mcse
        self.assertTrue(np.all(np.abs(mean) <= 3 * mcse + 1e-12), f"mean={mean}, mcse={mcse}")
        np.testing.assert_allclose(np.diag(chains.covariance), np.ones(5), rtol=0.1)


class TestPredictive(unittest.TestCase):
    """Predictive density curves."""

    def setUp(self):
        self.grid = np.linspace(-6, 8, 1401)
        self.model = gaussian_location_model()

    def test_point_predictive(self):
        """The Gaussian predictive at θ is N(θ, 1) on the grid."""
        curve = predictive_density(self.grid, self.model, theta=[1.0])
        check_density_normalised(curve.grid, curve.density, tol=1e-12)
        np.testing.assert_allclose(curve.density, norm.pdf(self.grid, 1.0), atol=1e-4)

    def test_averaged_predictive(self):
        """Averaging identical draws equals the point predictive."""
        point = predictive_density(self.grid, self.model, theta=[0.5])
        averaged = predictive_density(self.grid, self.model, draws=np.full((4, 1), 0.5))
        np.testing.assert_allclose(averaged.density, point.density, rtol=1e-12)

    def test_shifted_stays_normalised(self):
        """Mapping the grid back to data units keeps the integral."""
        curve = predictive_density(self.grid, self.model, theta=[0.0]).shifted(2.0, 3.0)
        self.assertAlmostEqual(curve.integral(), 1.0, places=10)
        self.assertAlmostEqual(curve.grid[0], -16.0)

    def test_fixed_model(self):
        """A fixed mixture needs no θ."""
        curve = predictive_density(self.grid, two_component_mixture(0.5, 2.0, 1.0))
        self.assertAlmostEqual(curve.integral(), 1.0, places=10)

    def test_invalid_inputs(self):
        """Missing θ and malformed grids are input errors."""
        with self.assertRaises(InputError):
            predictive_density(self.grid, self.model)
        with self.assertRaises(InputError):
            predictive_density([0.0, 1.0], self.model, theta=[0.0])


if __name__ == "__main__":
    unittest.main()
