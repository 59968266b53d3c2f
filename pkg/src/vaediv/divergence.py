"""Closed-form KL divergences and the averaged symmetric divergence.

The comparison statistic for a pair of output distributions x, y of
dimension d is

    (KL(x, y) + KL(y, x)) / (2 d)

which is symmetric and invariant to the number of coordinates. For the
Gaussian family the per-direction KL has the usual closed form; the
diagonal case divides the squared mean difference by the *second*
distribution's variances, consistent with the full-covariance formula.
For the Bernoulli family the symmetric sum collapses to
sum (q_i - p_i) (log q_i - log p_i + log(1 - p_i) - log(1 - q_i)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .vae import BernoulliVec, DiagGaussian


@dataclass
class FullGaussian:
    """Gaussian with a full symmetric positive-definite covariance."""

    mu: np.ndarray
    cov: np.ndarray

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


def _cholesky(cov: np.ndarray, label: str) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"{label} covariance must be a square matrix")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
        raise ValueError(f"{label} covariance is not symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{label} covariance is not positive-definite") from exc


def kl_gaussian_full(a: FullGaussian, b: FullGaussian) -> float:
    """KL(N(mu1, S1) || N(mu2, S2)) via Cholesky factors (no explicit inverses).

    1/2 [ log|S2| - log|S1| - d + tr(S2^-1 S1) + (mu2-mu1)^T S2^-1 (mu2-mu1) ]
    """
    mu1 = np.asarray(a.mu, dtype=np.float64)
    mu2 = np.asarray(b.mu, dtype=np.float64)
    if mu1.shape != mu2.shape:
        raise ValueError("dimension mismatch between the two Gaussians")
    d = mu1.shape[0]
    l1 = _cholesky(a.cov, "first")
    l2 = _cholesky(b.cov, "second")
    logdet1 = 2.0 * np.sum(np.log(np.diag(l1)))
    logdet2 = 2.0 * np.sum(np.log(np.diag(l2)))
    # tr(S2^-1 S1) = ||L2^-1 L1||_F^2
    m = solve_triangular(l2, l1, lower=True)
    trace = np.sum(m ** 2)
    w = solve_triangular(l2, mu2 - mu1, lower=True)
    maha = np.sum(w ** 2)
    return float(0.5 * (logdet2 - logdet1 - d + trace + maha))


def kl_gaussian_diag(a: DiagGaussian, b: DiagGaussian) -> float:
    """Diagonal-covariance specialization of the Gaussian KL, in log space."""
    if a.mu.shape != b.mu.shape:
        raise ValueError("dimension mismatch between the two Gaussians")
    d = a.mu.shape[0]
    log_ratio = np.log(b.sigma) - np.log(a.sigma)
    var_ratio = np.exp(2.0 * (np.log(a.sigma) - np.log(b.sigma)))
    maha = (b.mu - a.mu) ** 2 / b.sigma ** 2
    return float(0.5 * (2.0 * np.sum(log_ratio) - d + np.sum(var_ratio) + np.sum(maha)))


def sym_kl_bernoulli(p: BernoulliVec, q: BernoulliVec) -> float:
    """KL(Ber(p)||Ber(q)) + KL(Ber(q)||Ber(p)) summed over independent coordinates."""
    pv = np.asarray(p.p, dtype=np.float64)
    qv = np.asarray(q.p, dtype=np.float64)
    if pv.shape != qv.shape:
        raise ValueError("dimension mismatch between the two Bernoulli vectors")
    return float(np.sum((qv - pv) * (np.log(qv) - np.log(pv) + np.log1p(-pv) - np.log1p(-qv))))


def avg_sym_divergence(x, y) -> float:
    """Symmetric KL averaged over both directions and normalized by 2 * dimension."""
    if isinstance(x, DiagGaussian) and isinstance(y, DiagGaussian):
        sym = kl_gaussian_diag(x, y) + kl_gaussian_diag(y, x)
    elif isinstance(x, FullGaussian) and isinstance(y, FullGaussian):
        sym = kl_gaussian_full(x, y) + kl_gaussian_full(y, x)
    elif isinstance(x, BernoulliVec) and isinstance(y, BernoulliVec):
        sym = sym_kl_bernoulli(x, y)
    else:
        raise TypeError(f"family mismatch: {type(x).__name__} vs {type(y).__name__}")
    return sym / (2.0 * x.dim)


def bernoulli_baseline(p_scalar: float, q_scalar: float, d: int = 1) -> float:
    """Averaged symmetric divergence between the constant vectors (p,...,p) and (q,...,q).

    Independent of d: the per-coordinate sum cancels against the dimension
    normalization.
    """
    if not (0.0 < p_scalar < 1.0 and 0.0 < q_scalar < 1.0):
        raise ValueError("baseline probabilities must lie in (0, 1)")
    if d < 1:
        raise ValueError("d must be >= 1")
    p = BernoulliVec(np.full(d, p_scalar))
    q = BernoulliVec(np.full(d, q_scalar))
    return avg_sym_divergence(p, q)
