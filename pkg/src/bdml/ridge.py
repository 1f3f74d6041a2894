"""Closed-form ridge estimator with an unpenalized treatment coefficient.

Solves the penalized normal equations

    [[d'd, d'X], [X'd, X'X + lam*I]] [a, b]' = [d'y, X'y]'

and provides the exact conditional bias and variance of the treatment
coefficient, plus the top blocks of the inverse penalized Gram matrix.
Notation: rho_hat' = (d'd)^{-1} d'X, xi_hat = (I - P_d) X, R = xi_hat' xi_hat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class RankDeficientError(np.linalg.LinAlgError):
    """Unpenalized solve requested on a rank-deficient system."""


@dataclass(frozen=True)
class RidgeAudit:
    alpha_hat: float
    bias: float
    variance: float
    lam: float
    rho_hat: np.ndarray
    r_matrix: np.ndarray


def _check_d(d: np.ndarray) -> None:
    if float(d @ d) <= 0.0:
        raise ValueError("treatment vector has zero variance")


def _rho_and_r(x: np.ndarray, d: np.ndarray):
    """rho_hat and R = X'(I - P_d)X via one rank-1 projection (no n x n matrix)."""
    dtd = float(d @ d)
    rho = (x.T @ d) / dtd
    xi = x - np.outer(d, rho)
    return rho, xi.T @ xi, dtd


def ridge_point(data, lam: float) -> float:
    """Treatment coefficient of the penalized normal equations.

    lam = 0 requires a full-rank joint design (p + 1 <= n); otherwise a
    RankDeficientError is raised naming the deficiency.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    y, d, x = data.y, data.d, data.x
    _check_d(d)
    n, p = x.shape
    if lam == 0 and p + 1 > n:
        raise RankDeficientError(
            f"lambda=0 with p+1={p + 1} > n={n}: no unique unpenalized solution"
        )
    gram = np.empty((p + 1, p + 1))
    gram[0, 0] = d @ d
    gram[0, 1:] = gram[1:, 0] = x.T @ d
    gram[1:, 1:] = x.T @ x
    gram[1:, 1:][np.diag_indices(p)] += lam
    rhs = np.concatenate(([d @ y], x.T @ y))
    try:
        coef = scipy.linalg.solve(gram, rhs, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError(
            f"penalized Gram matrix singular at lambda={lam}: {exc}"
        ) from exc
    return float(coef[0])


def ridge_bias(x: np.ndarray, d: np.ndarray, beta: np.ndarray, lam: float,
               sigma_eps2: float):
    """Exact conditional bias and variance of the ridge treatment coefficient.

    bias = rho' [I - (R + lam I)^{-1} R] beta
    var  = sigma_eps2 [ (d'd)^{-1} + rho' (R+lam I)^{-1} R (R+lam I)^{-1} rho ]
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    beta = np.asarray(beta, dtype=float)
    _check_d(d)
    rho, r, dtd = _rho_and_r(x, d)
    p = x.shape[1]
    s = r + lam * np.eye(p)
    sinv_r = scipy.linalg.solve(s, r, assume_a="pos")
    bias = float(rho @ (beta - sinv_r @ beta))
    sinv_rho = scipy.linalg.solve(s, rho, assume_a="pos")
    variance = sigma_eps2 * (1.0 / dtd + float(sinv_rho @ r @ sinv_rho))
    return bias, variance


def ridge_audit(data, beta: np.ndarray, lam: float, sigma_eps2: float) -> RidgeAudit:
    """Point estimate plus exact conditional bias/variance for one dataset."""
    rho, r, _ = _rho_and_r(data.x, data.d)
    bias, variance = ridge_bias(data.x, data.d, beta, lam, sigma_eps2)
    return RidgeAudit(
        alpha_hat=ridge_point(data, lam),
        bias=bias,
        variance=variance,
        lam=lam,
        rho_hat=rho,
        r_matrix=r,
    )


def partitioned_blocks(x: np.ndarray, d: np.ndarray, lam: float):
    """Top blocks (m11, m12) of the inverse penalized Gram matrix.

    m12 = -rho' (R + lam I)^{-1} and m11 = (d'd)^{-1} - m12 rho, satisfying
    [m11, m12] [[d'd, d'X], [X'd, X'X]] = [1, rho' + m12 R].
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    _check_d(d)
    rho, r, dtd = _rho_and_r(x, d)
    p = x.shape[1]
    s = r + lam * np.eye(p)
    try:
        m12 = -scipy.linalg.solve(s, rho, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError(f"S = R + lambda*I singular: {exc}") from exc
    m11 = 1.0 / dtd - float(m12 @ rho)
    return m11, m12
