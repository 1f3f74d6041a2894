"""Comparison estimators for the causal coefficient.

All operate on centered data and return an EstimateSummary:
  - naive: single-equation Bayesian ridge of y on (d, x), flat prior on the
    treatment coefficient.
  - hcph: two-step residualized-treatment regression
    y on (d - x gamma_hat, x), gamma_hat a first-stage posterior mean.
  - linero: y on (d, x gamma_hat, x) with both the treatment and the
    fitted-treatment coefficients unpenalized.
  - fdml: residual-on-residual regression with ridge posterior-mean first
    stages, full-sample or half-split.
  - ols: unpenalized joint regression, for baselines and identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.stats

from .bayes_lm import LmPrior, gibbs_lm, posterior_mean_coef
from .model_core import Dataset

METHODS = (
    "BDML-Basic", "BDML-Hier", "Naive", "HCPH", "Linero",
    "FDML-Full", "FDML-Split", "OLS",
)


@dataclass
class EstimateSummary:
    method: str
    point: float
    interval_lo: float
    interval_hi: float
    level: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.interval_lo > self.interval_hi:
            raise ValueError("interval_lo must not exceed interval_hi")

    @property
    def width(self) -> float:
        return self.interval_hi - self.interval_lo

    def covers(self, truth: float) -> bool:
        # endpoints count as covered (measure-zero event, fixed for
        # reproducibility)
        return self.interval_lo <= truth <= self.interval_hi


def _equal_tailed(draws: np.ndarray, level: float):
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [tail, 1.0 - tail])
    return float(draws.mean()), float(lo), float(hi)


def _ridge_prior(unpenalized: tuple[int, ...]) -> LmPrior:
    """Default competitor prior: flat on the listed columns, normal ridge with
    a Jeffreys hyperprior on the rest, Jeffreys on the noise variance."""
    return LmPrior(unpenalized_columns=unpenalized, hyper_coef_var=True)


def ols_fit(data: Dataset, level: float = 0.95) -> EstimateSummary:
    """Joint OLS of y on (d, x) with the classic normal-theory interval."""
    data = data if data.centered else data.center()
    n, p = data.n, data.p
    if p + 1 >= n:
        raise ValueError(f"OLS needs n > p + 1, got n={n}, p={p}")
    design = np.column_stack([data.d, data.x])
    coef, _, rank, _ = np.linalg.lstsq(design, data.y, rcond=None)
    if rank < p + 1:
        raise np.linalg.LinAlgError("design is rank deficient")
    resid = data.y - design @ coef
    dof = n - (p + 1)
    s2 = float(resid @ resid) / dof
    gram_inv_00 = scipy.linalg.solve(
        design.T @ design, np.eye(p + 1)[:, 0], assume_a="pos"
    )[0]
    se = np.sqrt(s2 * gram_inv_00)
    crit = scipy.stats.t.ppf(0.5 + level / 2.0, dof)
    point = float(coef[0])
    return EstimateSummary(
        method="OLS", point=point,
        interval_lo=point - crit * se, interval_hi=point + crit * se,
        level=level, diagnostics={"se": float(se), "dof": dof},
    )


def naive_fit(data: Dataset, iters: int = 5000, burnin: int = 1000,
              seed: int = 0, level: float = 0.95,
              prior: LmPrior | None = None) -> EstimateSummary:
    """Single-equation Bayesian ridge with the treatment unpenalized."""
    data = data if data.centered else data.center()
    design = np.column_stack([data.d, data.x])
    if prior is None:
        prior = _ridge_prior((0,))
    draws = gibbs_lm(data.y, design, prior, iters=iters, burnin=burnin, seed=seed)
    mean, lo, hi = _equal_tailed(draws.coef[:, 0], level)
    return EstimateSummary(
        method="Naive", point=mean, interval_lo=lo, interval_hi=hi, level=level,
        diagnostics={"iters": iters, "burnin": burnin},
    )


def _first_stage_gamma(data: Dataset, iters: int, burnin: int, seed: int,
                       use_median: bool = False) -> np.ndarray:
    prior = _ridge_prior(())
    draws = gibbs_lm(data.d, data.x, prior, iters=iters, burnin=burnin, seed=seed)
    if use_median:
        return np.median(draws.coef, axis=0)
    return posterior_mean_coef(draws)


def hcph_fit(data: Dataset, iters: int = 5000, burnin: int = 1000,
             seed: int = 0, level: float = 0.95,
             gamma_estimate: str = "mean") -> EstimateSummary:
    """Two-step fit regressing y on the first-stage treatment residual and x."""
    data = data if data.centered else data.center()
    gamma_hat = _first_stage_gamma(
        data, iters, burnin, seed, use_median=(gamma_estimate == "median")
    )
    v_hat = data.d - data.x @ gamma_hat
    design = np.column_stack([v_hat, data.x])
    draws = gibbs_lm(data.y, design, _ridge_prior((0,)),
                     iters=iters, burnin=burnin, seed=seed + 1)
    mean, lo, hi = _equal_tailed(draws.coef[:, 0], level)
    return EstimateSummary(
        method="HCPH", point=mean, interval_lo=lo, interval_hi=hi, level=level,
        diagnostics={"iters": iters, "burnin": burnin,
                     "gamma_estimate": gamma_estimate},
    )


def linero_fit(data: Dataset, iters: int = 5000, burnin: int = 1000,
               seed: int = 0, level: float = 0.95,
               prior: LmPrior | None = None) -> EstimateSummary:
    """Two-step fit of y on (d, fitted treatment, x); the fitted treatment
    column is perfectly collinear with x, so the x-columns must be penalized."""
    data = data if data.centered else data.center()
    gamma_hat = _first_stage_gamma(data, iters, burnin, seed)
    d_hat = data.x @ gamma_hat
    design = np.column_stack([data.d, d_hat, data.x])
    if prior is None:
        prior = _ridge_prior((0, 1))
    elif not prior.hyper_coef_var and prior.tau == 0:
        raise ValueError(
            "flat prior on the control columns is not identified: the fitted "
            "treatment is perfectly collinear with the controls"
        )
    draws = gibbs_lm(data.y, design, prior, iters=iters, burnin=burnin,
                     seed=seed + 1)
    mean, lo, hi = _equal_tailed(draws.coef[:, 0], level)
    return EstimateSummary(
        method="Linero", point=mean, interval_lo=lo, interval_hi=hi, level=level,
        diagnostics={"iters": iters, "burnin": burnin},
    )


def _residual_on_residual(y_res: np.ndarray, d_res: np.ndarray, level: float):
    """Final-stage OLS of the y-residual on the d-residual (no intercept)."""
    dtd = float(d_res @ d_res)
    if dtd <= 0:
        raise ValueError("treatment residuals have zero variance")
    alpha = float(y_res @ d_res) / dtd
    resid = y_res - alpha * d_res
    m = y_res.shape[0]
    dof = m - 1
    s2 = float(resid @ resid) / dof
    se = np.sqrt(s2 / dtd)
    crit = scipy.stats.t.ppf(0.5 + level / 2.0, dof)
    return alpha, se, crit, dof


def fdml_fit(data: Dataset, split: str = "full", iters: int = 5000,
             burnin: int = 1000, seed: int = 0, level: float = 0.95,
             first_stage: str = "ridge", cross_fit: bool = False,
             first_stage_prior: LmPrior | None = None) -> EstimateSummary:
    """Residual-on-residual estimator.

    first_stage "ridge" uses gibbs_lm posterior means; "ols" uses exact
    unpenalized least squares (the zero-penalty limit, useful for the
    partialling-out identity). first_stage_prior overrides the default
    ridge+Jeffreys first-stage prior, e.g. a huge fixed precision to probe
    the fully-shrunk limit. split is "full" or "half"; cross_fit averages
    the two half orientations (exploratory, off the reproduction path).
    """
    data = data if data.centered else data.center()
    rng = np.random.default_rng(seed)

    def stage_coefs(train: Dataset):
        if first_stage == "ols":
            delta_hat, *_ = np.linalg.lstsq(train.x, train.y, rcond=None)
            gamma_hat, *_ = np.linalg.lstsq(train.x, train.d, rcond=None)
            return delta_hat, gamma_hat
        prior = _ridge_prior(()) if first_stage_prior is None else first_stage_prior
        delta_hat = posterior_mean_coef(
            gibbs_lm(train.y, train.x, prior, iters=iters, burnin=burnin,
                     seed=seed + 10)
        )
        gamma_hat = posterior_mean_coef(
            gibbs_lm(train.d, train.x, prior, iters=iters, burnin=burnin,
                     seed=seed + 11)
        )
        return delta_hat, gamma_hat

    if split == "full":
        delta_hat, gamma_hat = stage_coefs(data)
        y_res = data.y - data.x @ delta_hat
        d_res = data.d - data.x @ gamma_hat
        alpha, se, crit, dof = _residual_on_residual(y_res, d_res, level)
        method = "FDML-Full"
        diag = {"dof": dof}
    elif split == "half":
        perm = rng.permutation(data.n)
        half = data.n // 2
        orientations = [(perm[:half], perm[half:])]
        if cross_fit:
            orientations.append((perm[half:], perm[:half]))
        points, ses, dofs = [], [], []
        for fit_idx, eval_idx in orientations:
            train = Dataset(data.y[fit_idx], data.d[fit_idx], data.x[fit_idx],
                            centered=True)
            delta_hat, gamma_hat = stage_coefs(train)
            y_res = data.y[eval_idx] - data.x[eval_idx] @ delta_hat
            d_res = data.d[eval_idx] - data.x[eval_idx] @ gamma_hat
            a, se, crit, dof = _residual_on_residual(y_res, d_res, level)
            points.append(a)
            ses.append(se)
            dofs.append(dof)
        alpha = float(np.mean(points))
        se = float(np.mean(ses)) / np.sqrt(len(points))
        dof = dofs[0]
        crit = scipy.stats.t.ppf(0.5 + level / 2.0, dof)
        method = "FDML-Split"
        diag = {"dof": dof, "split_seed": seed, "cross_fit": cross_fit}
    else:
        raise ValueError(f"unknown split {split!r}")

    return EstimateSummary(
        method=method, point=alpha,
        interval_lo=alpha - crit * se, interval_hi=alpha + crit * se,
        level=level, diagnostics=diag,
    )
