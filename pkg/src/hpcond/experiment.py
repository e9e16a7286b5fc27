"""Synthetic scenarios, noisy datasets and forward uncertainty propagation."""

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .conductivity import ConstraintConfig, knots_from_function
from .forward import ObservationSpec, PdeConfig, default_pde, observe, solve
from .errors import InputError
from .rng import make_rng
from .sampler import Dataset

log = logging.getLogger(__name__)

__all__ = [
    "PERTURBATION_LAWS",
    "PropagationResult",
    "Scenario",
    "TRUTHS",
    "generate_data",
    "get_scenario",
    "nondecreasing_after",
    "propagate_uncertainty",
    "true_k_example1",
    "true_k_example2",
]

DATA_REFINEMENT = 100


def true_k_example1(t):
    """Smooth saturating rise from 0.45 towards pi/2 + 0.45."""
    return np.arctan(np.asarray(t, dtype=np.float64) / 30.0) + 0.45


def true_k_example2(t):
    """Sigmoidal rise centred at 450 s."""
    return 0.5 * (np.arctan((np.asarray(t, dtype=np.float64) - 450.0) / 150.0) + 3.5)


TRUTHS = {"example1": true_k_example1, "example2": true_k_example2}


@dataclass(frozen=True)
class Scenario:
    name: str
    truth: str
    pde: PdeConfig
    n: int = 10
    snr: float = 1e3
    r0: float = 0.0
    hyper_a: float = 1.0
    hyper_b: float = 1.0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.truth not in TRUTHS:
            raise InputError(f"unknown truth {self.truth!r}; choose from {sorted(TRUTHS)}")
        if self.n < 1:
            raise InputError(f"n must be >= 1, got {self.n}")
        if not self.snr > 0:
            raise InputError(f"snr must be positive, got {self.snr}")

    @property
    def true_k(self):
        return TRUTHS[self.truth]

    @property
    def constraints(self):
        p = self.pde
        return ConstraintConfig(
            rho=p.rho, Cp=p.Cp, alpha=p.alpha, beta=p.beta, R=p.R, r0=self.r0, k0=float(self.true_k(0.0))
        )

    @property
    def obs(self):
        return ObservationSpec.default(self.pde, self.n)

    def true_knots(self):
        return knots_from_function(self.true_k, self.n, self.pde.t_f)

    def to_dict(self):
        return {
            "name": self.name,
            "truth": self.truth,
            "pde": self.pde.to_dict(),
            "n": self.n,
            "snr": self.snr,
            "r0": self.r0,
            "hyper_a": self.hyper_a,
            "hyper_b": self.hyper_b,
        }

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def get_scenario(name, **pde_overrides):
    """Built-in scenarios ``example1`` and ``example2`` on the default physical setup."""
    if name not in TRUTHS:
        raise InputError(f"unknown scenario {name!r}; choose from {sorted(TRUTHS)}")
    return Scenario(name=name, truth=name, pde=default_pde(**pde_overrides))


def generate_data(scenario, rng, noise=True):
    """Synthetic observations from a solve 100x finer in time.

    ``sigma1`` is the mean of the whole fine space-time field divided by the
    SNR. With ``noise=False`` the exact fine-grid values are returned (the
    reported ``sigma1`` is unchanged).
    """
    fine = scenario.pde.replace(Nt=scenario.pde.Nt * DATA_REFINEMENT)
    field_ = solve(scenario.true_k, fine)
    obs = scenario.obs
    clean = observe(field_, obs.radii, obs.times)
    sigma1 = float(np.mean(field_.values)) / scenario.snr
    values = clean + sigma1 * rng.standard_normal(clean.shape) if noise else clean
    return Dataset(obs.radii, obs.times, values, sigma1)


@dataclass
class PropagationResult:
    """Ensemble temperature variance versus time, one row per SNR."""

    t_grid: np.ndarray
    snr_list: tuple
    var_center: np.ndarray  # (len(snr_list), Nt + 1)
    var_boundary: np.ndarray
    k_samples: np.ndarray  # (len(snr_list), ensemble_size, Nt + 1)
    redraws: int = 0


PERTURBATION_LAWS = ("knots", "nodes")


def _draw_k(scenario, k_nodes, scale, law, rng):
    t_grid = scenario.pde.t_grid
    if law == "nodes":
        return k_nodes + scale * rng.standard_normal(k_nodes.shape)
    if law == "knots":
        n = scenario.n
        tk = np.arange(n + 1) * (scenario.pde.t_f / n)
        kk = scenario.true_k(tk)
        kk[1:] += scale * rng.standard_normal(n)
        return np.interp(t_grid, tk, kk)
    raise InputError(f"unknown perturbation law {law!r}; choose from {PERTURBATION_LAWS}")


def propagate_uncertainty(scenario, ensemble_size, snr_list, seed, law="knots", noise=True, max_redraws=100):
    """Push white-noise conductivity perturbations through the forward solver.

    For each SNR, member ``i`` adds iid ``N(0, (mean(k) / SNR)**2)`` noise to
    ``k`` either at the conductivity knots ``t_1..t_n`` (``law="knots"``,
    ``k(0)`` kept at its known value, piecewise-linear in between) or at every
    solver time node (``law="nodes"``). ``mean(k)`` is taken over the solver
    time grid. Member streams are keyed by ``(seed, snr index, member)`` so
    the result does not depend on evaluation order. Members with a
    non-positive conductivity are redrawn.
    """
    if ensemble_size < 1:
        raise InputError("ensemble_size must be >= 1")
    if law not in PERTURBATION_LAWS:
        raise InputError(f"unknown perturbation law {law!r}; choose from {PERTURBATION_LAWS}")
    if ensemble_size == 1:
        log.warning("ensemble of one member: variance curves are identically zero")
    pde = scenario.pde
    t_grid = pde.t_grid
    k_nodes = scenario.true_k(t_grid)
    kmean = float(np.mean(k_nodes))
    ridx = (0, pde.Nr - 1)
    var_c = np.zeros((len(snr_list), t_grid.size))
    var_b = np.zeros_like(var_c)
    k_all = np.empty((len(snr_list), ensemble_size, t_grid.size))
    redraws = 0
    for s, snr in enumerate(snr_list):
        temps = np.empty((ensemble_size, t_grid.size, 2))
        scale = kmean / snr
        for i in range(ensemble_size):
            rng = make_rng(seed, s, i)
            kp = _draw_k(scenario, k_nodes, scale, law, rng) if noise else k_nodes.copy()
            tries = 0
            while np.any(kp <= 0.0):
                tries += 1
                redraws += 1
                if tries > max_redraws:
                    raise InputError(f"could not draw a positive conductivity at SNR {snr}")
                log.warning("member %d at SNR %g has k <= 0, redrawing", i, snr)
                kp = _draw_k(scenario, k_nodes, scale, law, rng)
            k_all[s, i] = kp
            temps[i] = solve(kp, pde).values[:, ridx]
        if ensemble_size > 1:
            v = temps.var(axis=0, ddof=1)
            var_c[s], var_b[s] = v[:, 0], v[:, 1]
    return PropagationResult(t_grid, tuple(snr_list), var_c, var_b, k_all, redraws)


def nondecreasing_after(curve, t_grid, t_min=50.0, rel_tol=1e-3):
    """True if ``curve`` never drops by more than ``rel_tol * curve[-1]`` for ``t >= t_min``."""
    c = np.asarray(curve)[np.asarray(t_grid) >= t_min]
    if c.size < 2:
        return True
    return bool(np.all(np.diff(c) >= -rel_tol * abs(c[-1])))
