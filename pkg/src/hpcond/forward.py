"""Radial heat diffusion under linear compression.

Solves, on the disk of radius ``R`` with radially symmetric data,

    rho*Cp * T_t = k(t) * (T_rr + T_r / r) + alpha*beta * T,   0 < r < R
    k(t) * T_r = h * (Te - T)                                   at r = R
    T(r, 0) = T0

on a uniform grid that includes ``r = 0`` and ``r = R``. The origin uses the
symmetric limit ``2 T_rr`` through a reflected ghost node, the Robin condition
eliminates an outer ghost node with a centred difference, and time stepping is
Crank-Nicolson with ``k`` taken at both ends of each step. Every step is one
tridiagonal solve (see :mod:`hpcond._kernels`).
"""

from dataclasses import asdict, dataclass, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .conductivity import ConductivityKnots
from .errors import InputError, NumericalError

__all__ = [
    "ForwardModel",
    "ObservationSpec",
    "PdeConfig",
    "TemperatureField",
    "default_pde",
    "forward_map",
    "observe",
    "radial_operator",
    "solve",
]


@dataclass(frozen=True)
class PdeConfig:
    """Physical constants (SI units) and discretisation of the direct problem."""

    alpha: float
    rho: float
    Cp: float
    h: float
    R: float
    T0: float
    Te: float
    beta: float
    t_f: float
    Nr: int = 102
    Nt: int = 350

    def __post_init__(self):
        if self.Nr < 3:
            raise InputError(f"Nr must be >= 3, got {self.Nr}")
        if self.Nt < 1:
            raise InputError(f"Nt must be >= 1, got {self.Nt}")
        for name in ("rho", "Cp", "R", "T0", "Te", "t_f"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
        # alpha, beta and h may be zero for the equilibrium and insulated checks.
        for name in ("alpha", "beta", "h"):
            if not getattr(self, name) >= 0:
                raise InputError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def dr(self):
        return self.R / (self.Nr - 1)

    @property
    def dt(self):
        return self.t_f / self.Nt

    @property
    def r_grid(self):
        return np.linspace(0.0, self.R, self.Nr)

    @property
    def t_grid(self):
        return np.linspace(0.0, self.t_f, self.Nt + 1)

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


def default_pde(**overrides):
    """Tylose parameter set used by both synthetic examples."""
    base = dict(
        alpha=4.217e-4,
        rho=1000.6,
        Cp=3780.0,
        h=28.0,
        R=0.045,
        T0=295.0,
        Te=295.0,
        beta=120.0 / 61.0 * 1e6,
        t_f=1000.0,
        Nr=102,
        Nt=350,
    )
    base.update(overrides)
    return PdeConfig(**base)


@dataclass(frozen=True)
class TemperatureField:
    values: np.ndarray  # (Nt + 1, Nr), Kelvin
    r_grid: np.ndarray
    t_grid: np.ndarray


@lru_cache(maxsize=32)
def radial_operator(nr, R):
    """Tridiagonal ``T_rr + T_r / r`` with the symmetric origin row.

    The outer row carries only the ghost-eliminated diffusion part
    ``2 (T[-2] - T[-1]) / dr**2``; the Robin terms are added by the caller.
    Returned arrays are read-only.
    """
    dr = R / (nr - 1)
    inv = 1.0 / dr**2
    lo = np.zeros(nr)
    di = np.full(nr, -2.0 * inv)
    up = np.zeros(nr)
    j = np.arange(1, nr - 1)
    lo[1:-1] = (1.0 - 0.5 / j) * inv
    up[1:-1] = (1.0 + 0.5 / j) * inv
    di[0] = -4.0 * inv
    up[0] = 4.0 * inv
    lo[-1] = 2.0 * inv
    for a in (lo, di, up):
        a.setflags(write=False)
    return lo, di, up


def _robin_terms(cfg):
    coef = cfg.h * (2.0 / cfg.dr + 1.0 / cfg.R)
    return coef, coef * cfg.Te


def _march(kvals, cfg, march):
    kvals = np.asarray(kvals, dtype=np.float64)
    if kvals.shape != (cfg.Nt + 1,):
        raise InputError(f"expected {cfg.Nt + 1} conductivity values, got shape {kvals.shape}")
    if not np.all(np.isfinite(kvals)) or np.any(kvals <= 0.0):
        raise InputError("conductivity must be finite and strictly positive at every time node")
    lo, di, up = radial_operator(cfg.Nr, cfg.R)
    robin, forcing = _robin_terms(cfg)
    values, ok = march(
        kvals, lo, di, up, robin, forcing, cfg.rho * cfg.Cp, cfg.alpha * cfg.beta, cfg.dt, cfg.T0, cfg.Nt
    )
    if not ok:
        raise NumericalError("singular or non-finite tridiagonal system in Crank-Nicolson step")
    return values


def solve(k, cfg, backend=None):
    """Solve the direct problem.

    Parameters
    ----------
    k : callable or array_like
        Conductivity as a vectorised function of time, or its values on
        ``cfg.t_grid``.
    cfg : PdeConfig
    backend : {None, "numba", "numpy"}
        Kernel override; ``None`` uses the import-time default.

    Returns
    -------
    TemperatureField
    """
    t_grid = cfg.t_grid
    kvals = np.asarray(k(t_grid) if callable(k) else k, dtype=np.float64)
    if kvals.ndim == 0:
        kvals = np.full(t_grid.shape, float(kvals))
    march = {None: _kernels.march, "numba": _kernels.march_numba, "numpy": _kernels.march_numpy}[backend]
    values = _march(kvals, cfg, march)
    return TemperatureField(values, cfg.r_grid, t_grid)


def _radius_indices(r_grid, radii):
    idx = []
    tol = 1e-9 * max(r_grid[-1], 1.0)
    for r in np.atleast_1d(radii):
        hit = np.flatnonzero(np.abs(r_grid - r) <= tol)
        if hit.size == 0:
            raise InputError(f"radius {r} is not a grid node")
        idx.append(int(hit[0]))
    return np.array(idx, dtype=np.intp)


def _time_weights(t_grid, times):
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    span = t_grid[-1] - t_grid[0]
    if np.any(times < t_grid[0] - 1e-12 * span) or np.any(times > t_grid[-1] + 1e-12 * span):
        raise InputError(f"observation times must lie in [{t_grid[0]}, {t_grid[-1]}]")
    times = np.clip(times, t_grid[0], t_grid[-1])
    hi = np.clip(np.searchsorted(t_grid, times, side="right"), 1, len(t_grid) - 1)
    lo = hi - 1
    w = (times - t_grid[lo]) / (t_grid[hi] - t_grid[lo])
    # Snap to exact grid nodes so on-grid observations are not blended.
    w[np.isclose(w, 0.0, atol=1e-9)] = 0.0
    w[np.isclose(w, 1.0, atol=1e-9)] = 1.0
    return lo, hi, w


def observe(field, radii, times):
    """Temperatures at ``radii`` x ``times``, shape ``(len(radii), len(times))``.

    Radii must be grid nodes; times between solver steps are linearly
    interpolated.
    """
    ridx = _radius_indices(field.r_grid, radii)
    lo, hi, w = _time_weights(field.t_grid, times)
    v = field.values[:, ridx]
    return ((1.0 - w)[:, None] * v[lo] + w[:, None] * v[hi]).T


@dataclass(frozen=True)
class ObservationSpec:
    radii: tuple
    times: tuple

    @classmethod
    def default(cls, cfg, n):
        """Centre and boundary at the knot times ``t_1..t_n``."""
        tau = cfg.t_f / n
        return cls((0.0, cfg.R), tuple(float(j * tau) for j in range(1, n + 1)))

    @property
    def shape(self):
        return len(self.radii), len(self.times)


def forward_map(knots, cfg, obs, backend=None):
    """Temperatures predicted at ``obs`` for the piecewise-linear conductivity."""
    if not np.isclose(knots.t_f, cfg.t_f):
        raise InputError("knots and PDE config disagree on t_f")
    kvals = np.exp(np.interp(cfg.t_grid, knots.times, knots.u))
    field = solve(kvals, cfg, backend=backend)
    return observe(field, obs.radii, obs.times)


class ForwardModel:
    """Forward map with grid, operator and observation weights precomputed.

    Calling the instance with a full knot vector ``u_0..u_n`` returns the
    predicted observations; this is what the sampler evaluates every step.
    """

    def __init__(self, cfg, obs, n):
        self.cfg = cfg
        self.obs = obs
        self.n = n
        self.t_grid = cfg.t_grid
        self.knot_times = np.arange(n + 1) * (cfg.t_f / n)
        self._ridx = _radius_indices(cfg.r_grid, obs.radii)
        self._lo, self._hi, self._w = _time_weights(self.t_grid, obs.times)

    def kvals(self, u):
        return np.exp(np.interp(self.t_grid, self.knot_times, u))

    def field(self, u):
        return _march(self.kvals(u), self.cfg, _kernels.march)

    def __call__(self, u):
        v = self.field(u)[:, self._ridx]
        w = self._w[:, None]
        return ((1.0 - w) * v[self._lo] + w * v[self._hi]).T

    def knots(self, u):
        return ConductivityKnots(u, self.cfg.t_f)
