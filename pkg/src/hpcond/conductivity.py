"""Piecewise-linear log-conductivity and the uniqueness constraint set.

The conductivity is written ``k(t) = exp(u(t))`` with ``u`` the piecewise
linear interpolant of knot values ``u_0..u_n`` on a uniform grid over
``[0, t_f]``. A knot vector is admissible when

* the integral of ``k`` over ``[0, t_f]`` stays within the diffusion budget
  ``rho * Cp * (R - r0)**2 / 4``,
* the weak (Simpson) form of ``du/dt <= f(t)`` holds at every interior knot,
* no knot falls below the known initial value ``u_0``.

Local analyticity of ``k`` has no discrete counterpart and is not checked.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "ConductivityKnots",
    "ConstraintConfig",
    "DD_EPS",
    "check_h4",
    "check_h5",
    "eval_k",
    "eval_u",
    "growth_bound_f",
    "growth_rate",
    "h4_budget",
    "h4_integral",
    "h5_margins",
    "in_Q",
    "knots_from_function",
    "violations",
]

DD_EPS = 1e-8


@dataclass(frozen=True)
class ConductivityKnots:
    """Log-conductivity knot values on ``t_j = j * t_f / n``, ``j = 0..n``."""

    u: np.ndarray
    t_f: float
    n: int = field(init=False)
    tau: float = field(init=False)

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64).ravel()
        if u.size < 2:
            raise InputError("need at least two knots (n >= 1)")
        if not self.t_f > 0:
            raise InputError(f"t_f must be positive, got {self.t_f}")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "t_f", float(self.t_f))
        object.__setattr__(self, "n", u.size - 1)
        object.__setattr__(self, "tau", self.t_f / self.n)

    @property
    def u0(self):
        return float(self.u[0])

    @property
    def times(self):
        return np.arange(self.n + 1) * self.tau

    def with_free(self, free):
        """Return knots sharing ``u_0`` with ``free`` as ``u_1..u_n``."""
        return ConductivityKnots(np.concatenate(([self.u[0]], free)), self.t_f)


@dataclass(frozen=True)
class ConstraintConfig:
    rho: float
    Cp: float
    alpha: float
    beta: float
    R: float
    r0: float
    k0: float

    def __post_init__(self):
        for name in ("rho", "Cp", "alpha", "beta", "R", "k0"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.r0 < self.R:
            raise InputError(f"need 0 <= r0 < R, got r0={self.r0}, R={self.R}")


def knots_from_function(k, n, t_f):
    """Sample ``log(k(t_j))`` at the ``n + 1`` uniform knots."""
    t = np.arange(n + 1) * (t_f / n)
    return ConductivityKnots(np.log(np.asarray(k(t), dtype=np.float64)), t_f)


def eval_u(knots, t):
    """Piecewise-linear interpolant of the knot values at time(s) ``t``."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0.0) or np.any(t_arr > knots.t_f):
        raise InputError(f"t must lie in [0, {knots.t_f}]")
    out = np.interp(t_arr, knots.times, knots.u)
    return float(out) if out.ndim == 0 else out


def eval_k(knots, t):
    return np.exp(eval_u(knots, t))


def h4_budget(cfg):
    return cfg.rho * cfg.Cp * (cfg.R - cfg.r0) ** 2 / 4.0


def h4_integral(knots):
    """Exact integral of ``exp(u(t))`` for the piecewise-linear ``u``."""
    u = knots.u
    d = np.diff(u)
    small = np.abs(d) < DD_EPS
    dd = np.empty_like(d)
    dd[small] = np.exp(u[:-1][small]) * (1.0 + 0.5 * d[small])
    big = ~small
    dd[big] = np.exp(u[:-1][big]) * np.expm1(d[big]) / d[big]
    return knots.tau * float(np.sum(dd))


def check_h4(knots, cfg):
    return bool(h4_integral(knots) <= h4_budget(cfg))


def growth_rate(cfg):
    """Heating rate ``alpha * beta / (rho * Cp)`` in 1/s."""
    return cfg.alpha * cfg.beta / (cfg.rho * cfg.Cp)


def growth_bound_f(t, cfg):
    """Upper bound on ``du/dt``: ``c / (exp(c t) - 1)`` with ``c = growth_rate``."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(~(t_arr > 0.0)):
        raise InputError("growth bound is only defined for t > 0")
    c = growth_rate(cfg)
    out = c / np.expm1(c * t_arr)
    return float(out) if out.ndim == 0 else out


def h5_margins(knots, cfg):
    """RHS minus LHS of the Simpson-weak growth constraint at ``i = 1..n-1``.

    A knot vector satisfies the constraint iff every margin is ``>= 0``.
    """
    if knots.n < 2:
        return np.empty(0)
    t = knots.times
    tau = knots.tau
    u = knots.u
    ti = t[1:-1]
    rhs = (tau / 3.0) * (
        growth_bound_f(ti - 0.5 * tau, cfg) + growth_bound_f(ti, cfg) + growth_bound_f(ti + 0.5 * tau, cfg)
    )
    lhs = 0.5 * (u[2:] - u[:-2])
    return rhs - lhs


def check_h5(knots, cfg):
    return bool(np.all(h5_margins(knots, cfg) >= 0.0))


def violations(knots, cfg):
    """Names of the violated constraints (empty list if the knots are in Q)."""
    out = []
    if not np.all(np.isfinite(knots.u)):
        return ["finite"]
    if np.any(knots.u[1:] < knots.u[0]):
        out.append("lower_bound")
    if not check_h4(knots, cfg):
        out.append("H4")
    if not check_h5(knots, cfg):
        out.append("H5")
    return out


def in_Q(knots, cfg):
    u = knots.u
    if not np.all(np.isfinite(u)) or np.any(u[1:] < u[0]):
        return False
    return check_h4(knots, cfg) and check_h5(knots, cfg)
