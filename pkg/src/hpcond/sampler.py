"""Posterior sampling for the knot values and the prior scale.

The state is ``theta = (u_1..u_n, sigma2)``. Proposals come from the t-walk
acting on ``(u, log sigma2)``; the log-Jacobian ``log sigma2' - log sigma2``
is added to every acceptance ratio.

Two transition rules share that proposal:

* :func:`sve_step` -- single-variable exchange. The prior normaliser
  ``Z0(sigma2)`` is never evaluated: an auxiliary draw ``x`` from the
  conditional prior at the proposed ``sigma2'`` supplies the unbiased
  estimate ``h(x, sigma2) / h(x, sigma2')`` of ``Z0(sigma2) / Z0(sigma2')``.
* :func:`mh_step_reference` -- plain Metropolis-Hastings with the closed-form
  ``Z0``, kept as an oracle for the exchange rule.

Both reject any proposal outside the constraint set before solving the PDE.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import gmrf as _gmrf
from .conductivity import ConductivityKnots, in_Q, violations
from .errors import HpcondError, InputError
from .forward import ForwardModel, ObservationSpec
from .twalk import TwalkParams, twalk_propose

log = logging.getLogger(__name__)

__all__ = [
    "ChainRecord",
    "ChainState",
    "Dataset",
    "PosteriorModel",
    "effective_sample_size",
    "estimators",
    "initial_pair",
    "k_quantile_bands",
    "log_likelihood",
    "mh_step_reference",
    "run_chain",
    "sve_step",
]


@dataclass(frozen=True)
class Dataset:
    """Noisy temperatures ``values[i, j]`` at ``radii[i]`` and ``times[j]``."""

    radii: tuple
    times: tuple
    values: np.ndarray
    sigma1: float

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if values.shape != (len(self.radii), len(self.times)):
            raise InputError(f"values shape {values.shape} does not match radii x times")
        if not self.sigma1 > 0:
            raise InputError(f"sigma1 must be positive, got {self.sigma1}")
        if not np.all(np.isfinite(values)):
            raise InputError("dataset values must be finite")
        if np.any(np.diff(self.times) <= 0):
            raise InputError("observation times must be strictly increasing")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def obs(self):
        return ObservationSpec(self.radii, self.times)


@dataclass(frozen=True)
class ChainState:
    u: np.ndarray  # free knots u_1..u_n
    sigma2: float
    cached_loglik: float
    cached_logh: float

    @property
    def vector(self):
        return np.append(self.u, np.log(self.sigma2))

    @property
    def theta(self):
        return np.append(self.u, self.sigma2)


def log_likelihood(u, dataset, forward):
    """Gaussian log likelihood without its constant; ``u`` is the full knot vector."""
    resid = dataset.values - forward(u)
    return -0.5 * float(np.sum(resid * resid)) / dataset.sigma1**2


class PosteriorModel:
    """Everything a transition needs: forward map, prior, constraints and data."""

    def __init__(self, pde, constraints, dataset, n, hyper=None):
        self.pde = pde
        self.constraints = constraints
        self.dataset = dataset
        self.n = n
        self.t_f = pde.t_f
        self.u0 = float(np.log(constraints.k0))
        self.hyper = hyper or _gmrf.HyperPrior()
        self.forward = ForwardModel(pde, dataset.obs, n)
        a_hat = _gmrf.build_precision(n, pde.t_f / n)
        self.gmrf = _gmrf.condition_on_first(a_hat, self.u0)

    def full(self, u):
        return np.concatenate(([self.u0], u))

    def knots(self, u):
        return ConductivityKnots(self.full(u), self.t_f)

    def in_q(self, u):
        return in_Q(self.knots(u), self.constraints)

    def loglik(self, u):
        return log_likelihood(self.full(u), self.dataset, self.forward)

    def predict(self, u):
        return self.forward(self.full(u))

    def state(self, u, sigma2):
        u = np.asarray(u, dtype=np.float64)
        return ChainState(u, float(sigma2), self.loglik(u), float(_gmrf.log_h(u, sigma2, self.gmrf)))

    def log_posterior(self, state):
        """Normalised log posterior (up to the data-only constant)."""
        return (
            state.cached_loglik
            + state.cached_logh
            - _gmrf.normalizer_log_Z0(state.sigma2, self.gmrf)
            + _gmrf.log_gamma_prior(state.sigma2, self.hyper)
        )


def initial_pair(model):
    """Deterministic starting pair, both points inside the constraint set.

    The first point is ``u = u_0`` everywhere with ``sigma2 = 1``; the t-walk
    also needs a second point differing in every coordinate, taken as a gentle
    ramp above ``u_0`` with ``sigma2 = 1/2``.
    """
    n = model.n
    x = model.state(np.full(n, model.u0), 1.0)
    xp = model.state(model.u0 + 0.05 * np.arange(1, n + 1) / n, 0.5)
    for s in (x, xp):
        if not model.in_q(s.u):
            bad = ", ".join(violations(model.knots(s.u), model.constraints))
            raise InputError(f"initial point violates constraint(s): {bad}")
    return x, xp


def _propose(pair, model, rng, params):
    """Common part of both transitions.

    Returns ``None`` for an outright rejection, else
    ``(which, u', sigma2', loglik', log_q_ratio + log_jacobian)``.
    """
    x, xp = pair
    prop = twalk_propose(x.vector, xp.vector, rng, params)
    if not np.isfinite(prop.log_ratio):
        return prop.which, None
    u_new = prop.y[:-1]
    s_new = prop.y[-1]
    sigma2_new = float(np.exp(s_new))
    if not (np.isfinite(sigma2_new) and sigma2_new > 0) or not model.in_q(u_new):
        return prop.which, None
    try:
        ll = model.loglik(u_new)
    except HpcondError as exc:
        log.warning("forward solve failed on proposal, rejecting: %s", exc)
        return prop.which, None
    old = pair[prop.which]
    log_jac = s_new - np.log(old.sigma2)
    return prop.which, (u_new, sigma2_new, ll, prop.log_ratio + log_jac)


def _finish(pair, which, new_state, log_alpha, rng):
    accepted = bool(np.log(rng.random()) < log_alpha)
    if not accepted:
        return pair, False
    out = list(pair)
    out[which] = new_state
    return tuple(out), True


def sve_step(pair, model, rng, params=None):
    """One single-variable-exchange transition of the t-walk pair.

    Returns ``(pair, accepted)``.
    """
    which, prop = _propose(pair, model, rng, params)
    if prop is None:
        return pair, False
    u_new, sigma2_new, ll_new, log_q = prop
    old = pair[which]
    g = model.gmrf
    logh_new = float(_gmrf.log_h(u_new, sigma2_new, g))
    aux = _gmrf.sample_conditional(sigma2_new, g, rng)
    log_alpha = (
        ll_new
        - old.cached_loglik
        + logh_new
        - old.cached_logh
        + _gmrf.log_gamma_prior(sigma2_new, model.hyper)
        - _gmrf.log_gamma_prior(old.sigma2, model.hyper)
        + _gmrf.log_h(aux, old.sigma2, g)
        - _gmrf.log_h(aux, sigma2_new, g)
        + log_q
    )
    new_state = ChainState(np.asarray(u_new), sigma2_new, ll_new, logh_new)
    return _finish(pair, which, new_state, log_alpha, rng)


def mh_log_target(u, sigma2, loglik, model):
    """Unnormalised log posterior density in ``(u, sigma2)`` coordinates."""
    g = model.gmrf
    return (
        loglik
        + _gmrf.log_h(u, sigma2, g)
        - _gmrf.normalizer_log_Z0(sigma2, g)
        + _gmrf.log_gamma_prior(sigma2, model.hyper)
    )


def mh_step_reference(pair, model, rng, params=None):
    """Standard Metropolis-Hastings transition with the closed-form prior normaliser."""
    which, prop = _propose(pair, model, rng, params)
    if prop is None:
        return pair, False
    u_new, sigma2_new, ll_new, log_q = prop
    old = pair[which]
    log_alpha = (
        mh_log_target(u_new, sigma2_new, ll_new, model)
        - mh_log_target(old.u, old.sigma2, old.cached_loglik, model)
        + log_q
    )
    new_state = ChainState(np.asarray(u_new), sigma2_new, ll_new, float(_gmrf.log_h(u_new, sigma2_new, model.gmrf)))
    return _finish(pair, which, new_state, log_alpha, rng)


@dataclass
class ChainRecord:
    """Thinned output of :func:`run_chain`.

    The t-walk target is the product of two copies of the posterior, so both
    points of the pair are posterior draws. ``samples[i]`` and
    ``pivot_samples[i]`` hold ``(u_1..u_n, sigma2)`` of the first and second
    point after ``steps[i]`` transitions; row 0 is the initial pair.
    """

    samples: np.ndarray
    log_posterior_trace: np.ndarray
    steps: np.ndarray
    acceptance_count: int
    n_steps: int
    burn_in: int
    thinning: int
    u0: float
    t_f: float
    pivot_samples: np.ndarray = None
    pivot_trace: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.pivot_samples is None:
            self.pivot_samples = self.samples[:0]
            self.pivot_trace = self.log_posterior_trace[:0]

    @property
    def n(self):
        return self.samples.shape[1] - 1

    @property
    def acceptance_rate(self):
        return self.acceptance_count / self.n_steps if self.n_steps else 0.0

    def _mask(self):
        keep = self.steps >= self.burn_in
        return keep if keep.any() else np.ones_like(keep)

    def post_burn_in(self, both=True):
        """Post-burn-in rows, both pair points stacked unless ``both=False``."""
        keep = self._mask()
        rows = self.samples[keep]
        if both and len(self.pivot_samples):
            rows = np.vstack([rows, self.pivot_samples[keep]])
        return rows

    def all_samples(self):
        """Every stored row of both points with its log posterior."""
        if len(self.pivot_samples):
            return (
                np.vstack([self.samples, self.pivot_samples]),
                np.concatenate([self.log_posterior_trace, self.pivot_trace]),
            )
        return self.samples, self.log_posterior_trace

    def ess(self, column=-1):
        """Effective sample size of one column, summed over the two points."""
        keep = self._mask()
        total = effective_sample_size(self.samples[keep, column])
        if len(self.pivot_samples):
            total += effective_sample_size(self.pivot_samples[keep, column])
        return total

    @property
    def knot_times(self):
        return np.arange(self.n + 1) * (self.t_f / self.n)


_STEPS = {"sve": sve_step, "mh": mh_step_reference}


def run_chain(init, n_steps, model, rng, thinning=10, burn_in=None, method="sve", params=None, progress=None):
    """Run ``n_steps`` transitions and return a :class:`ChainRecord`.

    Parameters
    ----------
    init : ChainState or pair of ChainState or None
        Starting point. A single state is paired with the second point of
        :func:`initial_pair`; ``None`` uses :func:`initial_pair` entirely.
    n_steps : int
    model : PosteriorModel
    rng : numpy.random.Generator
    thinning : int
        Keep every ``thinning``-th state.
    burn_in : int, optional
        Transitions discarded by the estimators; defaults to ``n_steps // 5``.
    method : {"sve", "mh"}
    params : TwalkParams, optional
    progress : callable, optional
        Called as ``progress(step)`` every 1000 steps.
    """
    if n_steps < 0 or thinning < 1:
        raise InputError("n_steps must be >= 0 and thinning >= 1")
    step = _STEPS[method]
    params = params or TwalkParams()
    burn_in = n_steps // 5 if burn_in is None else int(burn_in)
    if init is None:
        pair = initial_pair(model)
    elif isinstance(init, ChainState):
        pair = (init, initial_pair(model)[1])
    else:
        pair = tuple(init)
    for s in pair:
        if not model.in_q(s.u):
            bad = ", ".join(violations(model.knots(s.u), model.constraints))
            raise InputError(f"initial state violates constraint(s): {bad}")
    if np.any(pair[0].vector == pair[1].vector):
        raise InputError("initial pair must differ in every coordinate")

    n_keep = n_steps // thinning + 1
    samples = np.empty((2, n_keep, model.n + 1))
    trace = np.empty((2, n_keep))
    steps = np.empty(n_keep, dtype=np.int64)

    def store(row, m):
        for j in (0, 1):
            samples[j, row] = pair[j].theta
            trace[j, row] = model.log_posterior(pair[j])
        steps[row] = m

    store(0, 0)
    accepted = 0
    row = 1
    for m in range(1, n_steps + 1):
        pair, acc = step(pair, model, rng, params)
        accepted += acc
        if m % thinning == 0:
            store(row, m)
            row += 1
        if progress is not None and m % 1000 == 0:
            progress(m)
    return ChainRecord(
        samples=samples[0, :row],
        log_posterior_trace=trace[0, :row],
        steps=steps[:row],
        acceptance_count=int(accepted),
        n_steps=int(n_steps),
        burn_in=burn_in,
        thinning=int(thinning),
        u0=model.u0,
        t_f=model.t_f,
        pivot_samples=samples[1, :row],
        pivot_trace=trace[1, :row],
        extra={"final_pair": pair},
    )


def estimators(record):
    """Return ``(theta_map, theta_cm)``, each ``(u_1..u_n, sigma2)``.

    ``theta_map`` is the stored sample (either point) with the largest
    normalised log posterior; ``theta_cm`` the mean of the post-burn-in
    samples.
    """
    if record.samples.shape[0] == 0:
        raise InputError("empty chain record")
    rows, lp = record.all_samples()
    theta_map = rows[int(np.argmax(lp))].copy()
    theta_cm = record.post_burn_in().mean(axis=0)
    return theta_map, theta_cm


def k_quantile_bands(record, q=(2.5, 50.0, 97.5)):
    """Pointwise quantiles of ``k = exp(u)`` at every knot (``k_0`` included).

    Returns an array of shape ``(len(q), n + 1)``.
    """
    rows = record.post_burn_in()
    k = np.exp(np.column_stack([np.full(len(rows), record.u0), rows[:, :-1]]))
    return np.percentile(k, q, axis=0)


def effective_sample_size(x):
    """Autocorrelation-based ESS with Geyer's initial positive sequence."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 4:
        return float(n)
    d = x - x.mean()
    var = d @ d / n
    if var == 0.0:
        return float(n)
    f = np.fft.rfft(d, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    s = 0.0
    for k in range(0, n - 1, 2):
        pair = acf[k] + acf[k + 1]
        if pair <= 0:
            break
        s += pair
    tau = max(2.0 * s - 1.0, 1.0)
    return n / tau
