"""Empirical rate and normality checks for the causal-coefficient estimators.

Three diagnostics:
  - run_rate_experiment: mean signed bias of the single-equation ridge point
    estimate versus the reduced-form posterior mean over an (n, p) grid,
    with prior precisions scaled proportionally to p. The ridge bias shrinks
    like p/n while the reduced-form bias shrinks like p^2/n^2.
  - asymptotic_variance: the common large-sample variance of the causal
    coefficient implied by the reduced-form error covariance.
  - bvm_diagnostic: Kolmogorov-Smirnov distance of standardized posterior
    draws from a normal reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .dgp import SimDesign, generate
from .model_core import Cov2
from .ridge import ridge_point
from .sur import SurPrior, bdml_fit

RATE_METHODS = ("naive", "bdml")


def _rate_design(n: int, p: int, sigma_eps: float, beta_mode: str) -> SimDesign:
    """Fixed-coefficient design for the rate grid.

    beta_mode "aligned" sets beta = -gamma/2 so gamma'beta = -1/2 exactly;
    "orthogonal" alternates the sign of beta so gamma'beta = 0 (p must be
    even).
    """
    gamma = np.full(p, 1.0 / np.sqrt(p))
    if beta_mode == "aligned":
        mu_beta = -gamma / 2.0
    elif beta_mode == "orthogonal":
        if p % 2:
            raise ValueError("orthogonal beta construction needs even p")
        signs = np.where(np.arange(p) % 2 == 0, 1.0, -1.0)
        mu_beta = signs / (2.0 * np.sqrt(p))
    else:
        raise ValueError(f"unknown beta_mode {beta_mode!r}")
    return SimDesign(n=n, p=p, alpha=2.0, gamma=gamma, mu_beta=mu_beta,
                     sigma_beta2=0.0, sigma_eps=sigma_eps)


@dataclass(frozen=True)
class RateExperiment:
    """Grid of (n, p) cells with p-proportional regularization.

    tau_scale c sets the ridge penalty lambda = c*p and the reduced-form
    prior precisions tau_delta = tau_gamma = c*p in every cell.
    """

    cells: tuple = ((200, 50), (400, 80), (800, 126), (1600, 200))
    tau_scale: float = 1.0
    reps: int = 100
    methods: tuple = RATE_METHODS
    seed: int = 0
    sigma_eps: float = 1.0
    beta_mode: str = "aligned"
    iters: int = 1500
    burnin: int = 300

    def __post_init__(self):
        if not self.cells:
            raise ValueError("grid must be nonempty")
        if self.reps < 100:
            raise ValueError(f"reps must be >= 100, got {self.reps}")
        if self.tau_scale <= 0:
            raise ValueError(f"tau_scale must be > 0, got {self.tau_scale}")
        unknown = set(self.methods) - set(RATE_METHODS)
        if unknown:
            raise ValueError(f"unknown rate methods {sorted(unknown)}")


@dataclass
class RateRow:
    n: int
    p: int
    method: str
    mean_bias: float
    mc_se: float
    reps: int


@dataclass
class RateResult:
    rows: list
    biases: dict = field(default_factory=dict)  # (n, p, method) -> per-rep array

    def cell_gap(self, n: int, p: int):
        """Paired |naive| - |bdml| bias gap for one cell: (mean, mc_se).

        Both methods see the same datasets, so the difference of per-rep
        absolute errors is the efficient comparison.
        """
        naive = np.abs(self.biases[(n, p, "naive")])
        bdml = np.abs(self.biases[(n, p, "bdml")])
        diff = naive - bdml
        return float(diff.mean()), float(diff.std(ddof=1) / np.sqrt(diff.size))


def naive_bias_prediction(n: int, p: int, lam: float, gamma: np.ndarray,
                          beta: np.ndarray, sigma22: float) -> float:
    """Leading-order ridge bias (lam/n) * gamma'beta / Sigma_22."""
    return (lam / n) * float(gamma @ beta) / sigma22


def run_rate_experiment(exp: RateExperiment) -> RateResult:
    """Run the grid and return per-cell mean signed biases with MC errors.

    The "naive" entry is the closed-form ridge point estimate at
    lambda = tau_scale * p (the fixed-variance posterior mean of the
    single-equation model); "bdml" is the reduced-form Gibbs posterior mean
    with matching fixed prior precisions. Within a replication all methods
    share one dataset so cross-method gaps are paired.
    """
    result = RateResult(rows=[])
    root = np.random.SeedSequence(exp.seed)
    for cell_idx, (n, p) in enumerate(exp.cells):
        design = _rate_design(n, p, exp.sigma_eps, exp.beta_mode)
        lam = exp.tau_scale * p
        prior = SurPrior(tau_delta=lam, tau_gamma=lam, hierarchical=False)
        per_method = {m: np.empty(exp.reps) for m in exp.methods}
        for rep in range(exp.reps):
            ss = np.random.SeedSequence(
                entropy=root.entropy, spawn_key=(cell_idx, rep)
            )
            rng = np.random.default_rng(ss)
            data, truth = generate(design, rng=rng)
            data = data.center()
            if "naive" in per_method:
                per_method["naive"][rep] = ridge_point(data, lam) - truth.alpha
            if "bdml" in per_method:
                fit_seed = int(ss.generate_state(1)[0] >> 1)
                draws = bdml_fit(data, prior=prior, iters=exp.iters,
                                 burnin=exp.burnin, seed=fit_seed,
                                 store_coef=False)
                per_method["bdml"][rep] = float(draws.alpha.mean()) - truth.alpha
        for m in exp.methods:
            b = per_method[m]
            result.biases[(n, p, m)] = b
            result.rows.append(RateRow(
                n=n, p=p, method=m,
                mean_bias=float(b.mean()),
                mc_se=float(b.std(ddof=1) / np.sqrt(exp.reps)),
                reps=exp.reps,
            ))
    return result


def rate_slope(result: RateResult, method: str):
    """OLS slope of log |mean bias| on log n across cells, with its SE."""
    pts = [(r.n, abs(r.mean_bias)) for r in result.rows if r.method == method]
    if len(pts) < 2:
        raise ValueError(f"need >= 2 cells for method {method!r}")
    ns, biases = zip(*pts)
    if min(biases) <= 0:
        raise ValueError("mean bias hit zero exactly; slope undefined")
    res = scipy.stats.linregress(np.log(ns), np.log(biases))
    return float(res.slope), float(res.stderr)


def asymptotic_variance(sigma_star: Cov2) -> float:
    """Large-sample variance of the causal coefficient:
    (Sigma_11 Sigma_22 - Sigma_12^2) / Sigma_22^2, which equals the
    structural noise variance over the treatment-error variance."""
    return sigma_star.det() / sigma_star.s22 ** 2


def bvm_diagnostic(draws, center: float | None = None,
                   scale: float | None = None) -> float:
    """KS distance of standardized causal-coefficient draws from Normal(0,1).

    draws may be a posterior-draw container with an `alpha` array or a bare
    array. center/scale default to the sample mean/SD; pass oracle values to
    test the theoretical centering instead.
    """
    alpha = np.asarray(getattr(draws, "alpha", draws), dtype=float)
    if alpha.ndim != 1 or alpha.size < 500:
        raise ValueError(f"need >= 500 draws in a flat array, got shape {alpha.shape}")
    center = float(alpha.mean()) if center is None else center
    scale = float(alpha.std(ddof=1)) if scale is None else scale
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    stat, _ = scipy.stats.kstest((alpha - center) / scale, "norm")
    return float(stat)
