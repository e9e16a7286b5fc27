"""The t-walk proposal (walk, traverse, hop and blow moves on a pair of points).

The sampler keeps two points ``x`` and ``xp``. Each proposal moves one of
them, using the other as the pivot, and only on a random subset ``phi`` of
coordinates. The returned log ratio is ``log q(reverse) - log q(forward)``
for the moving point, so a Metropolis-Hastings acceptance on the product
space is ``target ratio + log_ratio``.

A pair must differ in every coordinate; proposals that land on the pivot in
any coordinate get ``log_ratio = -inf``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DegeneratePair",
    "Proposal",
    "TwalkParams",
    "blow_move",
    "hop_move",
    "log_walk_density",
    "sample_beta",
    "sample_walk_z",
    "traverse_move",
    "twalk_propose",
    "walk_move",
]

WALK, TRAVERSE, HOP, BLOW = "walk", "traverse", "hop", "blow"
KERNELS = (WALK, TRAVERSE, HOP, BLOW)
_LOG_2PI = np.log(2.0 * np.pi)


class DegeneratePair(ValueError):
    """The two points coincide in at least one coordinate; redraw the pair."""


@dataclass(frozen=True)
class TwalkParams:
    walk_a: float = 1.5
    traverse_a: float = 6.0
    n1: int = 4  # expected number of coordinates moved per proposal
    probs: tuple = (0.4918, 0.4918, 0.0082, 0.0082)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (4,) or np.any(p < 0) or not np.isclose(p.sum(), 1.0):
            raise ValueError(f"kernel probabilities must be 4 non-negative numbers summing to 1, got {self.probs}")
        if not self.walk_a > 0 or not self.traverse_a > 1:
            raise ValueError("need walk_a > 0 and traverse_a > 1")

    def pphi(self, dim):
        return min(dim, self.n1) / dim


class Proposal(NamedTuple):
    y: np.ndarray
    log_ratio: float
    which: int  # 0: x moved with xp as pivot; 1: xp moved with x as pivot
    kernel: str


def sample_walk_z(u, a):
    """Inverse-CDF draw from ``g(z) ~ 1/sqrt(1+z)`` on ``[-a/(1+a), a]``."""
    return (a / (1.0 + a)) * (a * u**2 + 2.0 * u - 1.0)


def log_walk_density(y, x, xp, phi, a):
    """Log density of the walk move from ``x`` (pivot ``xp``) to ``y``.

    Returns ``-inf`` outside the support or if unselected coordinates moved.
    """
    y, x, xp = (np.asarray(v, dtype=float) for v in (y, x, xp))
    if np.any(y[~phi] != x[~phi]):
        return -np.inf
    d = x[phi] - xp[phi]
    z = (y[phi] - x[phi]) / d
    if np.any(z < -a / (1.0 + a)) or np.any(z > a):
        return -np.inf
    # normaliser of (1+z)^(-1/2) on the support is 2 (sqrt(1+a) - 1/sqrt(1+a))
    log_c = np.log(2.0 * (np.sqrt(1.0 + a) - 1.0 / np.sqrt(1.0 + a)))
    return float(np.sum(-0.5 * np.log1p(z) - log_c - np.log(np.abs(d))))


def walk_move(x, xp, z, phi):
    y = x.copy()
    y[phi] = x[phi] + (x[phi] - xp[phi]) * z[phi]
    return y


def sample_beta(u_branch, u, a):
    """Draw from ``f(beta) ~ beta**a`` on (0, 1) and ``beta**-a`` on (1, inf)."""
    if u_branch < (a - 1.0) / (2.0 * a):
        return u ** (1.0 / (a + 1.0))
    return u ** (1.0 / (1.0 - a))


def traverse_move(x, xp, beta, phi):
    y = x.copy()
    y[phi] = xp[phi] + beta * (xp[phi] - x[phi])
    return y


def _pivot_scale(x, xp, phi):
    return float(np.max(np.abs(xp[phi] - x[phi])))


def _log_normal(v, centre, scale):
    k = v.size
    return -0.5 * k * _LOG_2PI - k * np.log(scale) - 0.5 * float(np.sum((v - centre) ** 2)) / scale**2


def hop_move(x, xp, z, phi):
    """Gaussian jump centred at ``x`` with scale ``max|xp - x| / 3``.

    Returns ``(y, log_ratio)``.
    """
    s = _pivot_scale(x, xp, phi) / 3.0
    y = x.copy()
    y[phi] = x[phi] + s * z[phi]
    s_rev = _pivot_scale(y, xp, phi) / 3.0
    if s_rev == 0.0:
        return y, -np.inf
    log_ratio = _log_normal(x[phi], y[phi], s_rev) - _log_normal(y[phi], x[phi], s)
    return y, log_ratio


def blow_move(x, xp, z, phi):
    """Gaussian jump centred at the pivot ``xp`` with scale ``max|xp - x|``.

    Returns ``(y, log_ratio)``.
    """
    s = _pivot_scale(x, xp, phi)
    y = x.copy()
    y[phi] = xp[phi] + s * z[phi]
    s_rev = _pivot_scale(y, xp, phi)
    if s_rev == 0.0:
        return y, -np.inf
    log_ratio = _log_normal(x[phi], xp[phi], s_rev) - _log_normal(y[phi], xp[phi], s)
    return y, log_ratio


def twalk_propose(x, xp, rng, params=None):
    """Draw one t-walk proposal for the pair ``(x, xp)``.

    The random stream is consumed in a fixed order (side, kernel, subset,
    kernel draws) so that equal seeds give equal proposals regardless of the
    point values.
    """
    params = params or TwalkParams()
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.shape != xp.shape or x.ndim != 1:
        raise ValueError("pair points must be 1-D vectors of equal length")
    if np.any(x == xp):
        raise DegeneratePair("t-walk points must differ in every coordinate")
    dim = x.size
    which = 0 if rng.random() < 0.5 else 1
    kernel = KERNELS[int(np.searchsorted(np.cumsum(params.probs), rng.random(), side="right").clip(0, 3))]
    phi = rng.random(dim) < params.pphi(dim)
    moving, pivot = (x, xp) if which == 0 else (xp, x)
    nphi = int(phi.sum())

    if kernel == WALK:
        z = sample_walk_z(rng.random(dim), params.walk_a)
        y = walk_move(moving, pivot, z, phi)
        log_ratio = 0.0
    elif kernel == TRAVERSE:
        beta = sample_beta(rng.random(), rng.random(), params.traverse_a)
        y = traverse_move(moving, pivot, beta, phi)
        log_ratio = (nphi - 2) * np.log(beta) if nphi > 0 else 0.0
    elif kernel == HOP:
        z = rng.standard_normal(dim)
        if nphi == 0:
            y, log_ratio = moving.copy(), 0.0
        else:
            y, log_ratio = hop_move(moving, pivot, z, phi)
    else:
        z = rng.standard_normal(dim)
        if nphi == 0:
            y, log_ratio = moving.copy(), 0.0
        else:
            y, log_ratio = blow_move(moving, pivot, z, phi)

    if np.any(y == pivot) or not np.all(np.isfinite(y)):
        log_ratio = -np.inf
    return Proposal(y, float(log_ratio), which, kernel)
