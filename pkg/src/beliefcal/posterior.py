"""Exact Gaussian posterior of Bayesian linear regression under a belief.

Weights get a zero-mean Gaussian prior whose *precision* is
``lambda * diag(weight_profile)``; labels are observed with noise ``sigma``.
Decisions threshold the predictive score ``mu(x) + beta * sd(x)`` at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, special

from .data import Dataset

LOG_PROB_FLOOR = -5.0
CDF_CLAMP = 8.0
INTERCEPT = "(intercept)"
# prior precision multiplier on the bias weight; leaves it effectively unpenalized
INTERCEPT_PROFILE = 1e-6


@dataclass(frozen=True)
class Belief:
    sigma: float
    lam: float
    weight_profile: np.ndarray
    beta: float = 0.0

    def __post_init__(self):
        profile = np.asarray(self.weight_profile, dtype=float)
        object.__setattr__(self, "weight_profile", profile)
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if profile.ndim != 1 or not np.all(profile > 0):
            raise ValueError("weight profile entries must be positive")

    @property
    def prior_precision(self) -> np.ndarray:
        return self.lam * self.weight_profile

    @property
    def key(self) -> tuple:
        return (self.sigma, self.lam, self.beta)


@dataclass(frozen=True)
class Posterior:
    w_post: np.ndarray
    precision: np.ndarray
    chol: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def d(self) -> int:
        return self.w_post.shape[0]

    def covariance_quadratic(self, Z: np.ndarray) -> np.ndarray:
        """Row-wise ``z^T A^{-1} z`` via one triangular solve."""
        V = forward_rows(self.chol, np.atleast_2d(Z))
        return rowdot(V, V)

    def covariance_apply(self, Z: np.ndarray) -> np.ndarray:
        """Row-wise ``A^{-1} z``."""
        return backward_rows(self.chol, forward_rows(self.chol, np.atleast_2d(Z)))


# Row-at-a-time kernels: each row's result is independent of how many rows are
# passed and in which order, unlike blocked BLAS calls.


def rowdot(U, V):
    return np.sum(U * V, axis=-1)


def forward_rows(L, Z):
    """Solve L v = z for every row z of Z."""
    V = np.empty_like(Z, dtype=float)
    for i in range(L.shape[0]):
        V[:, i] = (Z[:, i] - rowdot(V[:, :i], L[i, :i])) / L[i, i]
    return V


def backward_rows(L, V):
    """Solve L^T u = v for every row v of V."""
    d = L.shape[0]
    U = np.empty_like(V, dtype=float)
    for i in range(d - 1, -1, -1):
        U[:, i] = (V[:, i] - rowdot(U[:, i + 1:], L[i + 1:, i])) / L[i, i]
    return U


@dataclass(frozen=True)
class PredictiveScore:
    mu: float
    sd: float
    z: float


def add_intercept(ds: Dataset) -> Dataset:
    """Append a constant bias column (non-actionable)."""
    if INTERCEPT in ds.feature_names:
        return ds
    X = np.hstack([ds.X, np.ones((ds.n, 1))])
    return replace(
        ds,
        X=X,
        feature_names=list(ds.feature_names) + [INTERCEPT],
        actionable=np.append(ds.actionable, False),
    )


def intercept_mask(feature_names) -> np.ndarray:
    return np.array([name == INTERCEPT for name in feature_names])


def fit_posterior(ds: Dataset, b: Belief) -> Posterior:
    X, y = ds.X, ds.y
    d = X.shape[1]
    if d < 1:
        raise ValueError("need at least one feature")
    if b.weight_profile.shape != (d,):
        raise ValueError(f"weight profile has length {b.weight_profile.shape[0]}, expected {d}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite data")
    # canonical row order keeps the Gram sums independent of input order
    order = np.lexsort(np.column_stack([X, y]).T[::-1]) if len(y) > 1 else np.arange(len(y))
    X, y = X[order], y[order]
    s2 = 1.0 / (b.sigma * b.sigma)
    A = s2 * (X.T @ X) + np.diag(b.prior_precision)
    A = 0.5 * (A + A.T)
    try:
        L = linalg.cholesky(A, lower=True, check_finite=False)
    except linalg.LinAlgError as err:
        raise RuntimeError(f"posterior precision not positive definite: {err}") from None
    rhs = s2 * (X.T @ y)
    w = linalg.cho_solve((L, True), rhs, check_finite=False)
    vals, vecs = linalg.eigh(A, check_finite=False)
    if not np.all(vals > 0):
        raise RuntimeError("posterior precision has nonpositive eigenvalues")
    for arr in (w, A, L, vals, vecs):
        arr.setflags(write=False)
    return Posterior(w, A, L, vals, vecs)


def predictive_scores(p: Posterior, X: np.ndarray):
    """Vectorised (mu, sd, z) for the rows of X; z = 0 where sd == 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu = rowdot(X, p.w_post)
    sd = np.sqrt(p.covariance_quadratic(X))
    z = np.divide(mu, sd, out=np.zeros_like(mu), where=sd > 0)
    return mu, sd, z


def predictive_score(p: Posterior, x) -> PredictiveScore:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    mu, sd, z = predictive_scores(p, x[None, :])
    mu, sd, z = float(mu[0]), float(sd[0]), float(z[0])
    if sd == 0.0 and mu != 0.0:
        raise ArithmeticError("degenerate predictive standard deviation")
    return PredictiveScore(mu, sd, z)


def normal_cdf(t):
    """Standard normal CDF, arguments clamped to [-8, 8].

    Delegates to the Cephes ``ndtr`` rational erf/erfc approximations
    (relative error ~1e-16 on the clamped range).
    """
    return special.ndtr(np.clip(t, -CDF_CLAMP, CDF_CLAMP))


def positive_probability(s: PredictiveScore, beta: float = 0.0) -> float:
    return float(normal_cdf(s.z + beta))


def decide(s: PredictiveScore, beta: float = 0.0) -> int:
    return 1 if s.mu + beta * s.sd >= 0 else -1


def decisions(mu: np.ndarray, sd: np.ndarray, beta: float = 0.0) -> np.ndarray:
    return np.where(mu + beta * sd >= 0, 1.0, -1.0)


def row_log_probs(y: np.ndarray, z: np.ndarray, beta: float = 0.0) -> np.ndarray:
    """Per-row ``log Phi(y (z + beta))`` floored at -5."""
    with np.errstate(divide="ignore"):
        logp = np.log(normal_cdf(y * (z + beta)))
    return np.maximum(logp, LOG_PROB_FLOOR)


def mean_neg_log_prob(logp: np.ndarray) -> float:
    return -math.fsum(logp) / len(logp)


def capped_log_prob(ds: Dataset, p: Posterior, beta: float = 0.0) -> float:
    if ds.n < 1:
        raise ValueError("need at least one row")
    _, _, z = predictive_scores(p, ds.X)
    return mean_neg_log_prob(row_log_probs(ds.y, z, beta))
