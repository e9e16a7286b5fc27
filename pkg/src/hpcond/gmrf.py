"""Hierarchical Gaussian Markov random field prior on the log-conductivity.

The knot vector ``(u_0, ..., u_n)`` gets the tridiagonal second-difference
precision ``A_hat = tridiag(-1, 2, -1) / tau**2``. Because ``u_0`` is known,
the prior actually used is the conditional law of ``u = (u_1..u_n)`` given
``u_0``. ``sigma2`` is the field's *standard deviation* scale: the conditional
law is ``N(mu, sigma2**2 * Sigma)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InputError

__all__ = [
    "GmrfConditional",
    "HyperPrior",
    "build_precision",
    "condition_on_first",
    "log_gamma_prior",
    "log_h",
    "normalizer_log_Z0",
    "sample_conditional",
]


def build_precision(n, tau):
    """Dense ``(n+1) x (n+1)`` matrix ``tridiag(-1, 2, -1) / tau**2``."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if not tau > 0:
        raise InputError(f"tau must be positive, got {tau}")
    m = n + 1
    a = 2.0 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)
    return a / tau**2


@dataclass(frozen=True)
class GmrfConditional:
    """Gaussian law of ``u_1..u_n`` given ``u_0``.

    Attributes
    ----------
    A : ndarray
        Conditional precision (inverse of ``Sigma``).
    Sigma : ndarray
        Schur-complement covariance.
    mu_base : ndarray
        Regression of ``u_1..u_n`` on ``u_0``; the mean is ``u0 * mu_base``.
    chol : ndarray
        Lower Cholesky factor of ``Sigma``.
    """

    n: int
    A: np.ndarray
    Sigma: np.ndarray
    mu_base: np.ndarray
    chol: np.ndarray
    u0: float = 0.0

    @property
    def mu(self):
        return self.u0 * self.mu_base

    @property
    def log_det_sigma(self):
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))


def condition_on_first(A_hat, u0):
    """Condition the GMRF with precision ``A_hat`` on its first entry ``u0``."""
    A_hat = np.asarray(A_hat, dtype=np.float64)
    if A_hat.ndim != 2 or A_hat.shape[0] != A_hat.shape[1] or A_hat.shape[0] < 2:
        raise InputError("A_hat must be a square matrix of size >= 2")
    if not np.allclose(A_hat, A_hat.T, rtol=0.0, atol=1e-12 * np.abs(A_hat).max()):
        raise InputError("A_hat must be symmetric")
    try:
        np.linalg.cholesky(A_hat)
    except np.linalg.LinAlgError as exc:
        raise InputError("A_hat must be positive definite") from exc
    S = np.linalg.inv(A_hat)
    S = 0.5 * (S + S.T)
    s11 = S[0, 0]
    s21 = S[1:, 0]
    sigma = S[1:, 1:] - np.outer(s21, s21) / s11
    sigma = 0.5 * (sigma + sigma.T)
    A = np.linalg.inv(sigma)
    A = 0.5 * (A + A.T)
    chol = np.linalg.cholesky(sigma)
    for arr in (A, sigma, chol):
        arr.setflags(write=False)
    mu_base = s21 / s11
    mu_base.setflags(write=False)
    return GmrfConditional(n=sigma.shape[0], A=A, Sigma=sigma, mu_base=mu_base, chol=chol, u0=float(u0))


def _check_sigma2(sigma2):
    if not np.all(np.asarray(sigma2) > 0):
        raise InputError(f"sigma2 must be positive, got {sigma2}")


def log_h(u, sigma2, gmrf):
    """Unnormalised log density ``-(u - mu)' A (u - mu) / (2 sigma2**2)``.

    ``u`` may be a single vector or a stack of row vectors.
    """
    _check_sigma2(sigma2)
    d = np.asarray(u, dtype=np.float64) - gmrf.mu
    q = np.einsum("...i,ij,...j->...", d, gmrf.A, d)
    return -0.5 * q / sigma2**2


def normalizer_log_Z0(sigma2, gmrf):
    """``log((2 pi)**(n/2) * sigma2**n * det(Sigma)**(1/2))``."""
    _check_sigma2(sigma2)
    n = gmrf.n
    return 0.5 * n * np.log(2.0 * np.pi) + n * np.log(sigma2) + 0.5 * gmrf.log_det_sigma


def sample_conditional(sigma2, gmrf, rng, size=None):
    """Draw from ``N(mu, sigma2**2 * Sigma)``."""
    _check_sigma2(sigma2)
    if size is None:
        z = rng.standard_normal(gmrf.n)
        return gmrf.mu + sigma2 * (gmrf.chol @ z)
    z = rng.standard_normal((size, gmrf.n))
    return gmrf.mu + sigma2 * (z @ gmrf.chol.T)


@dataclass(frozen=True)
class HyperPrior:
    """Gamma(shape ``a``, scale ``b``) prior on ``sigma2``."""

    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InputError(f"Gamma hyperparameters must be positive, got a={self.a}, b={self.b}")


def log_gamma_prior(sigma2, hyper):
    _check_sigma2(sigma2)
    a, b = hyper.a, hyper.b
    return (a - 1.0) * np.log(sigma2) - sigma2 / b - gammaln(a) - a * np.log(b)
