"""Domain types for the partially linear model and its reduced form.

The structural model is

    y_i = alpha * d_i + x_i' beta + eps_i
    d_i = x_i' gamma + v_i

with Cov(eps, v) = 0. Substituting the treatment equation into the outcome
equation gives a bivariate regression of (y, d) on x whose error covariance
Sigma determines the causal coefficient: alpha = Cov(u, v) / Var(v).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Diagonal jitter threshold below which a Cholesky failure means "not PD".
PD_JITTER = 1e-10


class NotPositiveDefiniteError(ValueError):
    """Raised when a covariance matrix fails the Cholesky PD check."""


@dataclass(frozen=True)
class Cov2:
    """2x2 symmetric positive definite covariance of the reduced-form errors (u, v)."""

    s11: float
    s12: float
    s22: float

    def __post_init__(self):
        if not (self.s11 > 0 and self.s22 > 0):
            raise NotPositiveDefiniteError(
                f"diagonal must be positive, got s11={self.s11}, s22={self.s22}"
            )
        if self.s11 * self.s22 - self.s12 ** 2 <= PD_JITTER * self.s11 * self.s22:
            raise NotPositiveDefiniteError(
                f"covariance not positive definite: det={self.det()}"
            )

    def det(self) -> float:
        return self.s11 * self.s22 - self.s12 ** 2

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Cov2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected 2x2 matrix, got shape {m.shape}")
        if not np.isclose(m[0, 1], m[1, 0], rtol=1e-8, atol=1e-12):
            raise ValueError("matrix is not symmetric")
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))


@dataclass(frozen=True)
class StructuralParams:
    """Parameters (alpha, beta, gamma, sigma_eps2, sigma_v2) of the structural model."""

    alpha: float
    beta: np.ndarray
    gamma: np.ndarray
    sigma_eps2: float
    sigma_v2: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        if self.sigma_eps2 <= 0:
            raise ValueError(f"sigma_eps2 must be > 0, got {self.sigma_eps2}")
        if self.sigma_v2 <= 0:
            raise ValueError(f"sigma_v2 must be > 0, got {self.sigma_v2}")
        if self.beta.shape != self.gamma.shape or self.beta.ndim != 1:
            raise ValueError("beta and gamma must be 1-d vectors of equal length")


@dataclass(frozen=True)
class ReducedForm:
    """Bivariate reduced-form parameterization (delta, gamma, Sigma)."""

    delta: np.ndarray
    gamma: np.ndarray
    sigma: Cov2

    def __post_init__(self):
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        if self.delta.shape != self.gamma.shape or self.delta.ndim != 1:
            raise ValueError("delta and gamma must be 1-d vectors of equal length")


@dataclass(frozen=True)
class Dataset:
    """Observed sample (y, d, x). All estimators assume mean-centered data."""

    y: np.ndarray
    d: np.ndarray
    x: np.ndarray
    centered: bool = field(default=False)

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.y.ndim != 1 or self.d.ndim != 1 or self.x.ndim != 2:
            raise ValueError("y, d must be vectors and x a matrix")
        n = self.y.shape[0]
        if self.d.shape[0] != n or self.x.shape[0] != n:
            raise ValueError(
                f"inconsistent sample sizes: y={self.y.shape[0]}, "
                f"d={self.d.shape[0]}, x rows={self.x.shape[0]}"
            )

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def center(self) -> "Dataset":
        """Return a copy with y, d and each column of x de-meaned."""
        return Dataset(
            y=self.y - self.y.mean(),
            d=self.d - self.d.mean(),
            x=self.x - self.x.mean(axis=0),
            centered=True,
        )


def structural_to_reduced(sp: StructuralParams) -> ReducedForm:
    """Map structural parameters to the reduced form.

    delta = alpha * gamma + beta and the error covariance is
    [[sigma_eps2 + alpha^2 sigma_v2, alpha sigma_v2], [alpha sigma_v2, sigma_v2]].
    """
    sigma = Cov2(
        s11=sp.sigma_eps2 + sp.alpha ** 2 * sp.sigma_v2,
        s12=sp.alpha * sp.sigma_v2,
        s22=sp.sigma_v2,
    )
    return ReducedForm(delta=sp.alpha * sp.gamma + sp.beta, gamma=sp.gamma, sigma=sigma)


def alpha_from_sigma(sigma: Cov2) -> float:
    """Recover the causal coefficient from the error covariance: s12 / s22."""
    if sigma.s22 <= 0:
        raise ValueError(f"s22 must be > 0, got {sigma.s22}")
    return sigma.s12 / sigma.s22


def reduced_to_structural(rf: ReducedForm) -> StructuralParams:
    """Invert structural_to_reduced. Positive definiteness of Sigma guarantees
    the implied sigma_eps2 = s11 - s12^2/s22 is positive."""
    alpha = alpha_from_sigma(rf.sigma)
    sigma_eps2 = rf.sigma.s11 - rf.sigma.s12 ** 2 / rf.sigma.s22
    return StructuralParams(
        alpha=alpha,
        beta=rf.delta - alpha * rf.gamma,
        gamma=rf.gamma,
        sigma_eps2=sigma_eps2,
        sigma_v2=rf.sigma.s22,
    )
