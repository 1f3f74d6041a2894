"""Implied-prior diagnostics.

Tools to inspect what a prior on the reduced-form system actually says about
the causal quantities:
  - induced_alpha_prior: the location-scale t distribution on alpha implied by
    an Inverse-Wishart prior on the error covariance.
  - prior_selection_bias: Monte Carlo draws of the a priori selection bias
    under the single-equation ridge prior versus the reduced-form prior.
  - prior_snr_r2: the large-p signal-to-noise ratio and R-squared implied by a
    ridge precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .model_core import Cov2
from .sur import sample_invwishart2


@dataclass(frozen=True)
class TPriorParams:
    """Location-scale t distribution: location + scale * t_df."""

    location: float
    scale: float
    df: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if self.df <= 0:
            raise ValueError(f"df must be > 0, got {self.df}")

    def rvs(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return self.location + self.scale * rng.standard_t(self.df, size=size)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return scipy.stats.t.cdf(x, self.df, loc=self.location, scale=self.scale)


def induced_alpha_prior(nu0: float, sigma0: Cov2) -> TPriorParams:
    """t prior on alpha = Sigma_12/Sigma_22 implied by
    Sigma ~ Inverse-Wishart(nu0, sigma0):

        alpha ~ s0_12/s0_22 + (det(sigma0)^{1/2} / (sqrt(nu0) s0_22)) t_{nu0}
    """
    if nu0 <= 0:
        raise ValueError(f"nu0 must be > 0, got {nu0}")
    location = sigma0.s12 / sigma0.s22
    scale = np.sqrt(sigma0.det()) / (np.sqrt(nu0) * sigma0.s22)
    return TPriorParams(location=location, scale=float(scale), df=float(nu0))


def _gamma_quad(gamma: np.ndarray, sigma_x_spec: np.ndarray | None) -> np.ndarray:
    """gamma' Sigma_X gamma for identity (None) or diagonal Sigma_X."""
    if sigma_x_spec is None:
        return np.einsum("ij,ij->i", gamma, gamma)
    return np.einsum("ij,j,ij->i", gamma, sigma_x_spec, gamma)


def prior_selection_bias(model: str, p: int, draws: int = 10000, seed: int = 0,
                         tau_beta: float | None = None,
                         tau_gamma: float | None = None,
                         nu0: float = 4.0, sigma0: Cov2 | None = None,
                         sigma22: float = 1.0,
                         sigma_x_spec: np.ndarray | None = None) -> np.ndarray:
    """Monte Carlo sample of the a priori selection bias.

    model "naive": beta and gamma drawn independently from mean-zero normals
    with precisions tau_beta, tau_gamma (default p, matching a ridge penalty
    of the same order as the dimension); the noise variance Sigma_22 is held
    at the fixed value `sigma22` since the single-equation noise prior is
    improper and the p-scaling of the bias does not depend on it.

        SB_naive = gamma' Sigma_X beta / (Sigma_22 + gamma' Sigma_X gamma)

    model "bdml": Sigma drawn from Inverse-Wishart(nu0, sigma0) and gamma
    from its normal prior.

        SB_bdml = Sigma_12 / (Sigma_22 + gamma' Sigma_X gamma)

    sigma_x_spec: None for Sigma_X = I, else the length-p diagonal of Sigma_X.
    """
    if draws < 1000:
        raise ValueError(f"draws must be >= 1000, got {draws}")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if sigma_x_spec is not None:
        sigma_x_spec = np.asarray(sigma_x_spec, dtype=float)
        if sigma_x_spec.shape != (p,) or np.any(sigma_x_spec <= 0):
            raise ValueError("sigma_x_spec must be a length-p positive vector")
    tau_gamma = float(p) if tau_gamma is None else tau_gamma
    if tau_gamma <= 0:
        raise ValueError(f"tau_gamma must be > 0, got {tau_gamma}")
    rng = np.random.default_rng(seed)
    gamma = rng.standard_normal((draws, p)) / np.sqrt(tau_gamma)
    quad = _gamma_quad(gamma, sigma_x_spec)

    if model == "naive":
        tau_beta = float(p) if tau_beta is None else tau_beta
        if tau_beta <= 0:
            raise ValueError(f"tau_beta must be > 0, got {tau_beta}")
        if sigma22 <= 0:
            raise ValueError(f"sigma22 must be > 0, got {sigma22}")
        beta = rng.standard_normal((draws, p)) / np.sqrt(tau_beta)
        if sigma_x_spec is None:
            num = np.einsum("ij,ij->i", gamma, beta)
        else:
            num = np.einsum("ij,j,ij->i", gamma, sigma_x_spec, beta)
        return num / (sigma22 + quad)
    if model == "bdml":
        sigma0 = Cov2(1.0, 0.0, 1.0) if sigma0 is None else sigma0
        sig = sample_invwishart2(nu0, sigma0, rng, size=draws)
        return sig[:, 1] / (sig[:, 2] + quad)
    raise ValueError(f"unknown model {model!r}")


def sb_dispersion_slope(p_grid, dispersions):
    """Log-log least-squares slope of dispersion against p, with its SE."""
    p_grid = np.asarray(p_grid, dtype=float)
    dispersions = np.asarray(dispersions, dtype=float)
    if p_grid.shape != dispersions.shape or p_grid.size < 2:
        raise ValueError("need matching grids of length >= 2")
    res = scipy.stats.linregress(np.log(p_grid), np.log(dispersions))
    return float(res.slope), float(res.stderr)


def prior_snr_r2(tau: float, p: int, noise_var: float, mu1: float):
    """Large-p signal-to-noise ratio and R-squared of a ridge prior.

    With coefficient precision tau, regressor second-moment mean mu1, and
    noise variance, the signal variance of x'coef concentrates at
    tau^{-1} p mu1, giving

        snr = tau^{-1} p mu1 / noise_var,   r2 = snr / (1 + snr).
    """
    if tau <= 0 or p < 1 or noise_var <= 0 or mu1 <= 0:
        raise ValueError("need tau > 0, p >= 1, noise_var > 0, mu1 > 0")
    snr = (p / tau) * mu1 / noise_var
    return snr, snr / (1.0 + snr)
