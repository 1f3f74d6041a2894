"""Conjugate Gibbs sampler for the bivariate seemingly unrelated regression.

Model: W = X B + E with rows of E iid Normal_2(0, Sigma), W = [y, d],
B = [delta, gamma]. Prior: Sigma ~ Inverse-Wishart(nu0, Sigma0),
delta ~ Normal_p(0, I/tau_delta), gamma ~ Normal_p(0, I/tau_gamma), and
optionally Inverse-Gamma hyperpriors on the coefficient variances
1/tau_delta, 1/tau_gamma. The causal coefficient is read off every retained
Sigma draw as alpha = s12 / s22.

Conditionals:
  vec(B) | Sigma ~ Normal(Vn [vec(X'W Sigma^{-1})], Vn),
      Vn = [Sigma^{-1} (x) X'X + diag(tau_delta I, tau_gamma I)]^{-1}
  Sigma | B ~ Inverse-Wishart(nu0 + n, Sigma0 + (W - XB)'(W - XB))

Implementation note: with isotropic prior precisions the 2p x 2p conditional
precision block-diagonalizes in the eigenbasis of X'X into p independent
2 x 2 systems, so each sweep costs O(p) after one eigendecomposition per
dataset. This replaces a dense 2p x 2p Cholesky per sweep with the exact
same conditional distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model_core import Cov2, Dataset

JITTER = 1e-8


@dataclass(frozen=True)
class SurPrior:
    """Conjugate prior for the bivariate SUR model.

    sigma0=None resolves, at fit time, to the diagonal of the empirical
    variances of (y, d). tau_delta/tau_gamma are the fixed prior precisions;
    when hierarchical is set they are only the initial values and the
    coefficient variances get Inverse-Gamma(hyper_shape, hyper_rate)
    hyperpriors.
    """

    nu0: float = 4.0
    sigma0: Cov2 | None = None
    tau_delta: float = 1.0 / 25.0
    tau_gamma: float = 1.0 / 25.0
    hierarchical: bool = False
    hyper_shape: float = 2.0
    # rate 0.5 calibrated so the hierarchical variant, under the
    # Inverse-Wishart error-covariance prior, reproduces the benchmark
    # coverage/RMSE/width profile; rate 2.0 under-shrinks here
    hyper_rate: float = 0.5

    def __post_init__(self):
        if self.nu0 <= 1:
            raise ValueError(f"nu0 must be > 1, got {self.nu0}")
        # tau = 0 is the flat limit, accepted for the conditional-draw
        # operations (it needs a full-rank design).
        if self.tau_delta < 0 or self.tau_gamma < 0:
            raise ValueError("prior precisions must be >= 0")
        if self.hierarchical and (self.hyper_shape <= 0 or self.hyper_rate <= 0):
            raise ValueError("hyperprior shape and rate must be > 0")

    def resolve_sigma0(self, data: Dataset) -> Cov2:
        if self.sigma0 is not None:
            return self.sigma0
        return Cov2(float(np.var(data.y)), 0.0, float(np.var(data.d)))


@dataclass
class SurDraws:
    """Retained Gibbs draws. sigma rows are (s11, s12, s22); alpha is the
    per-draw transform s12/s22; b is (iters, p, 2) when retained."""

    sigma: np.ndarray
    alpha: np.ndarray
    b: np.ndarray | None
    precisions: np.ndarray | None   # (iters, 2) = (tau_delta, tau_gamma) draws
    iters: int
    burnin: int
    seed: int | None = None


def sample_invwishart2(nu: float, scale: np.ndarray, rng: np.random.Generator,
                       size: int | None = None) -> np.ndarray:
    """Inverse-Wishart draws for 2x2 scale matrices via the Bartlett
    decomposition of the inverted scale. Returns (..., 3) rows (s11, s12, s22).
    """
    if nu <= 1:
        raise ValueError(f"degrees of freedom must exceed 1, got {nu}")
    if isinstance(scale, Cov2):
        s11, s12, s22 = scale.s11, scale.s12, scale.s22
    else:
        s11, s12, s22 = float(scale[0, 0]), float(scale[0, 1]), float(scale[1, 1])
    det = s11 * s22 - s12 * s12
    if det <= 0 or s11 <= 0:
        raise np.linalg.LinAlgError("scale matrix not positive definite")
    # Cholesky of scale^{-1} = [[s22, -s12], [-s12, s11]] / det
    l11 = np.sqrt(s22 / det)
    l21 = -s12 / det / l11
    l22 = np.sqrt(s11 / det - l21 * l21)

    m = 1 if size is None else size
    a11 = np.sqrt(rng.chisquare(nu, m))
    a22 = np.sqrt(rng.chisquare(nu - 1.0, m))
    a21 = rng.standard_normal(m)
    # T = L A, lower triangular; Wishart draw is T T', the IW draw its inverse.
    t11 = l11 * a11
    t21 = l21 * a11 + l22 * a21
    t22 = l22 * a22
    w11 = t11 * t11
    w12 = t11 * t21
    w22 = t21 * t21 + t22 * t22
    dw = w11 * w22 - w12 * w12
    out = np.stack([w22 / dw, -w12 / dw, w11 / dw], axis=-1)
    return out[0] if size is None else out


class _SurFactor:
    """Per-dataset precomputation: eigenbasis of X'X and rotated cross-products."""

    def __init__(self, data: Dataset):
        if not data.centered:
            data = data.center()
        self.n, self.p = data.n, data.p
        x = data.x
        w = np.column_stack([data.y, data.d])
        xtx = x.T @ x
        self.evals, self.q = scipy.linalg.eigh(xtx, check_finite=False)
        self.evals = np.clip(self.evals, 0.0, None)
        self.c = self.q.T @ (x.T @ w)          # p x 2, rotated X'W
        self.wtw = w.T @ w

    def draw_b_rotated(self, sigma: np.ndarray, tau_d: float, tau_g: float,
                       z: np.ndarray) -> np.ndarray:
        """One draw of Q'B from the conditional given Sigma (2x2 array).

        z is a (p, 2) array of standard normals. Raises LinAlgError if some
        2x2 block is not PD after jitter.
        """
        s11, s12, s22 = sigma[0, 0], sigma[0, 1], sigma[1, 1]
        det = s11 * s22 - s12 * s12
        if det <= 0:
            raise np.linalg.LinAlgError("sigma draw not positive definite")
        i11, i12, i22 = s22 / det, -s12 / det, s11 / det
        lam = self.evals
        m11 = lam * i11 + tau_d
        m12 = lam * i12
        m22 = lam * i22 + tau_g
        rhs1 = self.c[:, 0] * i11 + self.c[:, 1] * i12
        rhs2 = self.c[:, 0] * i12 + self.c[:, 1] * i22
        l11sq = m11
        l22sq_num = m22 * l11sq - m12 * m12
        if not (np.all(l11sq > 0) and np.all(l22sq_num > 0)):
            l11sq = m11 + JITTER
            l22sq_num = (m22 + JITTER) * l11sq - m12 * m12
            if not (np.all(l11sq > 0) and np.all(l22sq_num > 0)):
                raise np.linalg.LinAlgError(
                    "conditional coefficient precision not PD after jitter"
                )
        l11 = np.sqrt(l11sq)
        l21 = m12 / l11
        l22 = np.sqrt(l22sq_num / l11sq)
        # mean: forward/back substitution through each 2x2 block
        u1 = rhs1 / l11
        u2 = (rhs2 - l21 * u1) / l22
        mean2 = u2 / l22
        mean1 = (u1 - l21 * mean2) / l11
        # draw: solve L' x = z
        x2 = z[:, 1] / l22
        x1 = (z[:, 0] - l21 * x2) / l11
        return np.column_stack([mean1 + x1, mean2 + x2])

    def residual_sscp(self, b_rot: np.ndarray) -> np.ndarray:
        """(W - XB)'(W - XB) computed in the rotated basis."""
        btc = b_rot.T @ self.c
        sscp = self.wtw - btc - btc.T + (b_rot * self.evals[:, None]).T @ b_rot
        return 0.5 * (sscp + sscp.T)


def cond_b_given_sigma(data: Dataset, sigma: Cov2, prior: SurPrior,
                       rng: np.random.Generator) -> np.ndarray:
    """One exact draw of the p x 2 coefficient matrix [delta, gamma] given Sigma."""
    factor = _SurFactor(data)
    if (prior.tau_delta == 0 or prior.tau_gamma == 0) and np.any(
        factor.evals <= factor.evals.max() * 1e-12
    ):
        raise np.linalg.LinAlgError(
            "flat prior limit requires a full-rank design (n > p)"
        )
    z = rng.standard_normal((factor.p, 2))
    b_rot = factor.draw_b_rotated(
        sigma.as_matrix(), prior.tau_delta, prior.tau_gamma, z
    )
    return factor.q @ b_rot


def cond_sigma_given_b(data: Dataset, b: np.ndarray, prior: SurPrior,
                       rng: np.random.Generator) -> Cov2:
    """One exact Inverse-Wishart draw of Sigma given the coefficient matrix."""
    if not data.centered:
        data = data.center()
    w = np.column_stack([data.y, data.d])
    resid = w - data.x @ b
    scale = prior.resolve_sigma0(data).as_matrix() + resid.T @ resid
    s = sample_invwishart2(prior.nu0 + data.n, scale, rng)
    return Cov2(s[0], s[1], s[2])


def bdml_fit(data: Dataset, prior: SurPrior | None = None, iters: int = 5000,
             burnin: int = 1000, seed: int = 0,
             store_coef: bool = True) -> SurDraws:
    """Run the full Gibbs sampler and attach the alpha series."""
    if prior is None:
        prior = SurPrior()
    if iters <= burnin or burnin < 0:
        raise ValueError(f"need iters > burnin >= 0, got {iters}, {burnin}")
    if not data.centered:
        data = data.center()
    factor = _SurFactor(data)
    n, p = factor.n, factor.p
    sigma0 = prior.resolve_sigma0(data).as_matrix()
    nu_n = prior.nu0 + n
    rng = np.random.default_rng(seed)

    sigma = np.array([[float(np.var(data.y)), 0.0], [0.0, float(np.var(data.d))]])
    tau_d, tau_g = prior.tau_delta, prior.tau_gamma
    if prior.hierarchical:
        tau_d = prior.hyper_shape / prior.hyper_rate
        tau_g = prior.hyper_shape / prior.hyper_rate

    keep = iters - burnin
    sig_out = np.empty((keep, 3))
    b_out = np.empty((keep, p, 2)) if store_coef else None
    prec_out = np.empty((keep, 2)) if prior.hierarchical else None

    for it in range(iters):
        z = rng.standard_normal((p, 2))
        b_rot = factor.draw_b_rotated(sigma, tau_d, tau_g, z)
        scale = sigma0 + factor.residual_sscp(b_rot)
        s = sample_invwishart2(nu_n, scale, rng)
        sigma = np.array([[s[0], s[1]], [s[1], s[2]]])
        if prior.hierarchical:
            nd2 = float(b_rot[:, 0] @ b_rot[:, 0])
            ng2 = float(b_rot[:, 1] @ b_rot[:, 1])
            var_d = (prior.hyper_rate + nd2 / 2.0) / rng.gamma(prior.hyper_shape + p / 2.0)
            var_g = (prior.hyper_rate + ng2 / 2.0) / rng.gamma(prior.hyper_shape + p / 2.0)
            tau_d, tau_g = 1.0 / var_d, 1.0 / var_g
        if it >= burnin:
            j = it - burnin
            sig_out[j] = s
            if b_out is not None:
                b_out[j] = b_rot
            if prec_out is not None:
                prec_out[j] = (tau_d, tau_g)

    if b_out is not None:
        # rotate all retained coefficient draws back in one pass
        b_out = np.einsum("ij,tjk->tik", factor.q, b_out, optimize=True)
    alpha = sig_out[:, 1] / sig_out[:, 2]
    return SurDraws(sigma=sig_out, alpha=alpha, b=b_out, precisions=prec_out,
                    iters=iters, burnin=burnin, seed=seed)


def alpha_summary(draws: SurDraws, level: float = 0.95):
    """Posterior mean and equal-tailed credible interval for alpha.

    Quantiles use the default linear interpolation rule of numpy.quantile.
    """
    if not 0 < level < 1:
        raise ValueError(f"level must be in (0, 1), got {level}")
    a = draws.alpha
    if a.size == 0:
        raise ValueError("no retained draws")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(a, [tail, 1.0 - tail])
    return float(a.mean()), (float(lo), float(hi))


def export_draws_csv(draws: SurDraws, path, coef_indices=()) -> None:
    """Write retained draws to CSV: alpha, s11, s12, s22 and optional
    coefficient columns (delta_j, gamma_j for each requested index j)."""
    import csv

    header = ["alpha", "s11", "s12", "s22"]
    for j in coef_indices:
        header += [f"delta_{j}", f"gamma_{j}"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(draws.alpha.shape[0]):
            row = [draws.alpha[t], *draws.sigma[t]]
            for j in coef_indices:
                if draws.b is None:
                    raise ValueError("coefficient draws were not retained")
                row += [draws.b[t, j, 0], draws.b[t, j, 1]]
            writer.writerow([repr(float(v)) for v in row])
