"""Bayesian double machine learning for the partially linear model.

Estimates the causal coefficient in y = alpha*d + x'beta + noise by placing
a conjugate prior on the bivariate reduced-form regression of (y, d) on x
and reading alpha off the posterior of the error covariance. Also ships the
standard single-equation and two-step comparison estimators, exact
closed-form ridge bias audits, implied-prior diagnostics, a replication
benchmark harness, and an asymptotic-rate lab.
"""

from .asymptotics import (RateExperiment, asymptotic_variance, bvm_diagnostic,
                          run_rate_experiment)
from .bayes_lm import LmDraws, LmPrior, gibbs_lm, posterior_mean_coef
from .competitors import (EstimateSummary, fdml_fit, hcph_fit, linero_fit,
                          naive_fit, ols_fit)
from .dgp import SimDesign, default_design, generate
from .harness import GridConfig, SimReport, metrics, run_grid, write_report
from .model_core import (Cov2, Dataset, ReducedForm, StructuralParams,
                         alpha_from_sigma, reduced_to_structural,
                         structural_to_reduced)
from .prior_audit import (TPriorParams, induced_alpha_prior,
                          prior_selection_bias, prior_snr_r2)
from .ridge import RidgeAudit, ridge_audit, ridge_bias, ridge_point
from .sur import SurDraws, SurPrior, alpha_summary, bdml_fit

__version__ = "0.1.0"

__all__ = [
    "Cov2", "Dataset", "ReducedForm", "StructuralParams",
    "alpha_from_sigma", "structural_to_reduced", "reduced_to_structural",
    "SimDesign", "default_design", "generate",
    "RidgeAudit", "ridge_audit", "ridge_bias", "ridge_point",
    "LmPrior", "LmDraws", "gibbs_lm", "posterior_mean_coef",
    "SurPrior", "SurDraws", "bdml_fit", "alpha_summary",
    "EstimateSummary", "naive_fit", "hcph_fit", "linero_fit", "fdml_fit",
    "ols_fit",
    "TPriorParams", "induced_alpha_prior", "prior_selection_bias",
    "prior_snr_r2",
    "RateExperiment", "run_rate_experiment", "asymptotic_variance",
    "bvm_diagnostic",
    "GridConfig", "SimReport", "run_grid", "metrics", "write_report",
    "__version__",
]
