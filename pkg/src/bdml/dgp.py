"""Simulation data generator.

Each replication draws fresh control regressors X ~ Normal_p(0, I), errors
(eps, v) ~ Normal with diagonal covariance diag(sigma_eps^2, 1), and a fresh
coefficient vector beta ~ Normal_p(mu_beta, sigma_beta2 I); the treatment
coefficient vector gamma and the causal effect alpha stay fixed across
replications.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model_core import Dataset, StructuralParams


@dataclass(frozen=True)
class SimDesign:
    n: int
    p: int
    alpha: float
    gamma: np.ndarray
    mu_beta: np.ndarray
    sigma_beta2: float
    sigma_eps: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        object.__setattr__(self, "mu_beta", np.asarray(self.mu_beta, dtype=float))
        if self.n <= 0 or self.p <= 0:
            raise ValueError("n and p must be positive")
        if self.sigma_eps <= 0:
            raise ValueError(f"sigma_eps must be > 0, got {self.sigma_eps}")
        if self.sigma_beta2 < 0:
            raise ValueError(f"sigma_beta2 must be >= 0, got {self.sigma_beta2}")
        if self.gamma.shape != (self.p,) or self.mu_beta.shape != (self.p,):
            raise ValueError("gamma and mu_beta must have length p")

    def with_seed(self, seed: int) -> "SimDesign":
        return replace(self, seed=int(seed))


def default_design(sigma_eps: float, n: int = 200, p: int = 100, seed: int = 0) -> SimDesign:
    """Benchmark design: alpha=2, gamma = 1/sqrt(p) in every coordinate,
    mu_beta = -gamma/2, sigma_beta2 = 1/p."""
    gamma = np.full(p, 1.0 / np.sqrt(p))
    return SimDesign(
        n=n,
        p=p,
        alpha=2.0,
        gamma=gamma,
        mu_beta=-gamma / 2.0,
        sigma_beta2=1.0 / p,
        sigma_eps=float(sigma_eps),
        seed=seed,
    )


def generate(design: SimDesign, rng: np.random.Generator | None = None):
    """Draw one replication; returns (Dataset, StructuralParams).

    The returned StructuralParams carry the realized beta for this
    replication. Data are generated un-centered (X, eps, v are mean zero in
    population); estimators are expected to center at ingestion.
    """
    if rng is None:
        rng = np.random.default_rng(design.seed)
    n, p = design.n, design.p
    x = rng.standard_normal((n, p))
    eps = design.sigma_eps * rng.standard_normal(n)
    v = rng.standard_normal(n)
    if design.sigma_beta2 > 0:
        beta = design.mu_beta + np.sqrt(design.sigma_beta2) * rng.standard_normal(p)
    else:
        beta = design.mu_beta.copy()
    d = x @ design.gamma + v
    y = design.alpha * d + x @ beta + eps
    truth = StructuralParams(
        alpha=design.alpha,
        beta=beta,
        gamma=design.gamma,
        sigma_eps2=design.sigma_eps ** 2,
        sigma_v2=1.0,
    )
    return Dataset(y=y, d=d, x=x), truth
