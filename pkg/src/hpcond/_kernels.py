"""Hot loops for the radial Crank-Nicolson march.

Two interchangeable backends are provided:

* ``numba``: the whole time march (right-hand side assembly plus a Thomas
  sweep per step) compiled with ``@njit``.
* ``numpy``: a Python time loop that assembles each step with vectorised
  numpy and solves it with LAPACK's banded solver.

The backend is chosen at import time. Setting ``HPCOND_DISABLE_NUMBA=1`` in
the environment (or running without numba installed) selects the numpy path.
Both are always importable by name so they can be compared directly.
"""

import os

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "march",
    "march_numba",
    "march_numpy",
    "thomas",
    "thomas_numba",
    "thomas_numpy",
]

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        return lambda f: f

_DISABLED = os.environ.get("HPCOND_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


@njit(cache=True)
def _thomas_nb(lower, diag, upper, rhs):
    # lower[0] and upper[-1] are ignored.
    n = rhs.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    piv = diag[0]
    if piv == 0.0 or not np.isfinite(piv):
        return x, False
    cp[0] = upper[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i] * cp[i - 1]
        if piv == 0.0 or not np.isfinite(piv):
            return x, False
        cp[i] = upper[i] / piv if i < n - 1 else 0.0
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / piv
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x, True


@njit(cache=True)
def _march_nb(kvals, lap_lo, lap_di, lap_up, robin, forcing, cap, source, dt, t0, nt):
    nr = lap_di.shape[0]
    field = np.empty((nt + 1, nr))
    for j in range(nr):
        field[0, j] = t0
    lo = np.empty(nr)
    di = np.empty(nr)
    up = np.empty(nr)
    rhs = np.empty(nr)
    c = cap / dt
    for m in range(nt):
        k0 = kvals[m]
        k1 = kvals[m + 1]
        prev = field[m]
        for j in range(nr):
            acc = 0.0
            if j > 0:
                acc += lap_lo[j] * (prev[j - 1] - prev[j])
            if j < nr - 1:
                acc += lap_up[j] * (prev[j + 1] - prev[j])
            rhs[j] = source * prev[j] + 0.5 * (k0 + k1) * acc
            lo[j] = -0.5 * k1 * lap_lo[j]
            di[j] = c - 0.5 * source - 0.5 * k1 * lap_di[j]
            up[j] = -0.5 * k1 * lap_up[j]
        rhs[nr - 1] += forcing - robin * prev[nr - 1]
        di[nr - 1] += 0.5 * robin
        sol, ok = _thomas_nb(lo, di, up, rhs)
        if not ok:
            return field, False
        for j in range(nr):
            if not np.isfinite(sol[j]):
                return field, False
            field[m + 1, j] = prev[j] + sol[j]
    return field, True


def thomas_numba(lower, diag, upper, rhs):
    """Solve a tridiagonal system with the compiled Thomas sweep.

    Returns ``(x, ok)``; ``ok`` is False when a zero or non-finite pivot is hit.
    """
    return _thomas_nb(
        np.ascontiguousarray(lower, dtype=np.float64),
        np.ascontiguousarray(diag, dtype=np.float64),
        np.ascontiguousarray(upper, dtype=np.float64),
        np.ascontiguousarray(rhs, dtype=np.float64),
    )


def thomas_numpy(lower, diag, upper, rhs):
    """Solve a tridiagonal system with LAPACK (``scipy.linalg.solve_banded``)."""
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        x = solve_banded((1, 1), ab, np.asarray(rhs, dtype=np.float64), check_finite=False)
    except (LinAlgError, ValueError):
        return np.full(n, np.nan), False
    return x, bool(np.all(np.isfinite(x)))


def march_numba(kvals, lap_lo, lap_di, lap_up, robin, forcing, cap, source, dt, t0, nt):
    """Compiled Crank-Nicolson march. See :func:`march_numpy` for arguments."""
    return _march_nb(
        np.ascontiguousarray(kvals, dtype=np.float64),
        np.ascontiguousarray(lap_lo, dtype=np.float64),
        np.ascontiguousarray(lap_di, dtype=np.float64),
        np.ascontiguousarray(lap_up, dtype=np.float64),
        float(robin),
        float(forcing),
        float(cap),
        float(source),
        float(dt),
        float(t0),
        int(nt),
    )


def march_numpy(kvals, lap_lo, lap_di, lap_up, robin, forcing, cap, source, dt, t0, nt):
    """Crank-Nicolson march with numpy assembly and a banded LAPACK solve.

    Advances ``cap * dT/dt = k(t) * L T + source * T`` where ``L`` is the
    tridiagonal operator ``(lap_lo, lap_di, lap_up)`` and the last node
    carries the Robin terms ``-robin * T + forcing``.

    Each step solves for the increment ``T[m+1] - T[m]``, and ``L T`` is
    applied in difference form, which assumes the rows of ``L`` sum to
    zero. A steady state therefore gives an exactly zero right-hand side and
    stays bit-for-bit constant.

    Parameters
    ----------
    kvals : ndarray, shape (nt + 1,)
        Conductivity at every time node.
    lap_lo, lap_di, lap_up : ndarray, shape (nr,)
        Sub-, main and super-diagonal of ``L``; ``lap_lo[0]`` and
        ``lap_up[-1]`` are unused.
    robin, forcing : float
        Robin diagonal coefficient and constant forcing at the outer node.
    cap, source : float
        Volumetric heat capacity and linear source coefficient.
    dt : float
        Time step.
    t0 : float
        Uniform initial value.
    nt : int
        Number of steps.

    Returns
    -------
    field : ndarray, shape (nt + 1, nr)
    ok : bool
        False if a step produced a singular or non-finite system.
    """
    kvals = np.asarray(kvals, dtype=np.float64)
    lap_lo = np.asarray(lap_lo, dtype=np.float64)
    lap_di = np.asarray(lap_di, dtype=np.float64)
    lap_up = np.asarray(lap_up, dtype=np.float64)
    nr = lap_di.shape[0]
    field = np.empty((nt + 1, nr))
    field[0] = t0
    c = cap / dt
    ab = np.zeros((3, nr))
    for m in range(nt):
        k0, k1 = kvals[m], kvals[m + 1]
        prev = field[m]
        dprev = np.diff(prev)
        acc = np.zeros(nr)
        acc[1:] -= lap_lo[1:] * dprev
        acc[:-1] += lap_up[:-1] * dprev
        rhs = source * prev + 0.5 * (k0 + k1) * acc
        rhs[-1] += forcing - robin * prev[-1]
        ab[0, 1:] = -0.5 * k1 * lap_up[:-1]
        ab[1] = c - 0.5 * source - 0.5 * k1 * lap_di
        ab[1, -1] += 0.5 * robin
        ab[2, :-1] = -0.5 * k1 * lap_lo[1:]
        try:
            sol = solve_banded((1, 1), ab, rhs, check_finite=False)
        except (LinAlgError, ValueError):
            return field, False
        if not np.all(np.isfinite(sol)):
            return field, False
        field[m + 1] = prev + sol
    return field, True


if HAS_NUMBA and not _DISABLED:
    BACKEND = "numba"
    march = march_numba
    thomas = thomas_numba
else:
    BACKEND = "numpy"
    march = march_numpy
    thomas = thomas_numpy
