"""Single-equation Bayesian linear regression Gibbs sampler.

The engine behind the naive, two-step, and residual-on-residual first-stage
estimators. Columns flagged as unpenalized get a flat prior (zero prior
precision); the remaining columns get a normal ridge prior whose precision is
either fixed or given a Jeffreys hyperprior. The noise variance gets a
Jeffreys prior unless fixed.

Full conditionals per sweep (IG shape/rate pairs default to 0 = Jeffreys;
proper values make the joint prior samplable for calibration checks):
  coef | variances   ~ Normal(mean, Prec^{-1}),  Prec = G/s2 + tau * mask
  s2   | coef        ~ Inverse-Gamma(a0 + n/2, b0 + SSR/2)
  s2_coef | coef_pen ~ Inverse-Gamma(c0 + k/2, d0 + ||coef_pen||^2 / 2)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Floor on the squared norm feeding the coefficient-variance conditional;
# prevents a degenerate Inverse-Gamma draw when all coefficients are ~0.
COEF_NORM_FLOOR = 1e-12

JITTER = 1e-8


@dataclass(frozen=True)
class LmPrior:
    """Prior layout for one regression.

    unpenalized_columns: indices with a flat prior (e.g. the treatment column).
    tau: fixed prior precision for the penalized block; ignored when
        hyper_coef_var is True.
    hyper_coef_var: Jeffreys hyperprior on the penalized-coefficient variance.
    noise_var: fixed noise variance; None means Jeffreys prior on it.
    """

    unpenalized_columns: tuple[int, ...] = ()
    tau: float = 1.0
    hyper_coef_var: bool = True
    noise_var: float | None = None
    # Inverse-Gamma(shape, rate) hyperparameters; zero means Jeffreys. The
    # noise pair applies when noise_var is None, the hyper pair when
    # hyper_coef_var is True. Proper values make the joint prior samplable.
    noise_shape: float = 0.0
    noise_rate: float = 0.0
    hyper_shape: float = 0.0
    hyper_rate: float = 0.0

    def validate(self, width: int) -> None:
        for j in self.unpenalized_columns:
            if not 0 <= j < width:
                raise ValueError(f"unpenalized column {j} outside design width {width}")
        if not self.hyper_coef_var and self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.noise_var is not None and self.noise_var <= 0:
            raise ValueError(f"noise_var must be > 0, got {self.noise_var}")
        for name in ("noise_shape", "noise_rate", "hyper_shape", "hyper_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if (self.noise_shape > 0) != (self.noise_rate > 0):
            raise ValueError("noise_shape and noise_rate must be set together")
        if (self.hyper_shape > 0) != (self.hyper_rate > 0):
            raise ValueError("hyper_shape and hyper_rate must be set together")


@dataclass
class LmDraws:
    coef: np.ndarray              # (iters, width)
    noise_var: np.ndarray         # (iters,)
    coef_var: np.ndarray | None   # (iters,) when the hyperprior is active
    burnin: int = 0
    seed: int | None = None


def draw_mvn_precision(mean: np.ndarray, prec: np.ndarray, z: np.ndarray,
                       method: str = "cholesky") -> np.ndarray:
    """One draw from Normal(mean, prec^{-1}) given standard normals z.

    method="eigh" uses the symmetric inverse square root, which is exactly
    equivariant under simultaneous permutation of coordinates and of z;
    "cholesky" is faster and the default.
    """
    if method == "cholesky":
        low = scipy.linalg.cholesky(prec, lower=True, check_finite=False)
        return mean + scipy.linalg.solve_triangular(
            low, z, lower=True, trans="T", check_finite=False
        )
    if method == "eigh":
        vals, vecs = scipy.linalg.eigh(prec, check_finite=False)
        if vals[0] <= 0:
            raise np.linalg.LinAlgError("precision matrix not positive definite")
        return mean + vecs @ ((vecs.T @ z) / np.sqrt(vals))
    raise ValueError(f"unknown draw method {method!r}")


def _draw_coef(prec: np.ndarray, rhs: np.ndarray, z: np.ndarray,
               method: str) -> np.ndarray:
    """Conditional mean solve plus one draw, factoring the precision once."""
    if method == "cholesky":
        low = scipy.linalg.cholesky(prec, lower=True, check_finite=False)
        mean = scipy.linalg.cho_solve((low, True), rhs, check_finite=False)
        return mean + scipy.linalg.solve_triangular(
            low, z, lower=True, trans="T", check_finite=False
        )
    vals, vecs = scipy.linalg.eigh(prec, check_finite=False)
    if vals[0] <= 0:
        raise np.linalg.LinAlgError("precision matrix not positive definite")
    mean = vecs @ ((vecs.T @ rhs) / vals)
    return mean + vecs @ ((vecs.T @ z) / np.sqrt(vals))


def gibbs_lm(y: np.ndarray, design: np.ndarray, prior: LmPrior,
             iters: int = 5000, burnin: int = 1000, seed: int = 0,
             draw_method: str = "cholesky",
             normals: np.ndarray | None = None) -> LmDraws:
    """Run the Gibbs sampler and return the retained (post-burn-in) draws.

    normals, when given, supplies the (iters, width) standard normals used
    for the coefficient draws instead of the internal stream; this enables
    common-random-number experiments such as the column-permutation
    equivariance check (together with draw_method="eigh").
    """
    y = np.asarray(y, dtype=float)
    design = np.asarray(design, dtype=float)
    n, width = design.shape
    if iters <= burnin or burnin < 0:
        raise ValueError(f"need iters > burnin >= 0, got {iters}, {burnin}")
    if prior.noise_var is None and n < 3:
        raise ValueError(f"Jeffreys noise prior needs n >= 3, got n={n}")
    if np.var(y) == 0:
        raise ValueError("response has zero variance")
    prior.validate(width)
    if normals is not None and normals.shape != (iters, width):
        raise ValueError(f"normals must have shape ({iters}, {width})")

    mask = np.ones(width)
    mask[list(prior.unpenalized_columns)] = 0.0
    k_pen = int(mask.sum())
    if prior.hyper_coef_var and k_pen == 0:
        raise ValueError("hyperprior on coefficient variance needs penalized columns")

    gram = design.T @ design
    dty = design.T @ y
    rng = np.random.default_rng(seed)

    s2 = prior.noise_var if prior.noise_var is not None else float(np.var(y))
    coef_var = 1.0 / prior.tau if (not prior.hyper_coef_var and prior.tau > 0) else 1.0

    keep = iters - burnin
    coef_out = np.empty((keep, width))
    s2_out = np.empty(keep)
    cv_out = np.empty(keep) if prior.hyper_coef_var else None

    diag = np.diag_indices(width)
    for it in range(iters):
        tau = (1.0 / coef_var) if (prior.hyper_coef_var or prior.tau > 0) else 0.0
        prec = gram / s2
        prec[diag] += tau * mask
        z = rng.standard_normal(width) if normals is None else normals[it]
        try:
            coef = _draw_coef(prec, dty / s2, z, draw_method)
        except np.linalg.LinAlgError:
            prec[diag] += JITTER
            try:
                coef = _draw_coef(prec, dty / s2, z, draw_method)
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(
                    f"conditional precision not PD after {JITTER} jitter at sweep {it}"
                ) from exc

        if prior.noise_var is None:
            resid = y - design @ coef
            ssr = float(resid @ resid)
            s2 = (prior.noise_rate + ssr / 2.0) / rng.gamma(
                prior.noise_shape + n / 2.0
            )
        if prior.hyper_coef_var:
            norm2 = float(coef @ (mask * coef))
            coef_var = (prior.hyper_rate + max(norm2, COEF_NORM_FLOOR) / 2.0) / (
                rng.gamma(prior.hyper_shape + k_pen / 2.0)
            )

        if it >= burnin:
            j = it - burnin
            coef_out[j] = coef
            s2_out[j] = s2
            if cv_out is not None:
                cv_out[j] = coef_var

    return LmDraws(coef=coef_out, noise_var=s2_out, coef_var=cv_out,
                   burnin=burnin, seed=seed)


def posterior_mean_coef(draws: LmDraws) -> np.ndarray:
    """Columnwise mean of the retained coefficient draws."""
    if draws.coef.shape[0] == 0:
        raise ValueError("no retained draws")
    return draws.coef.mean(axis=0)
