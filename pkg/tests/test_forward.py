import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import j0, j1

from hpcond.conductivity import knots_from_function
from hpcond.errors import InputError
from hpcond.forward import (
    ForwardModel,
    ObservationSpec,
    PdeConfig,
    default_pde,
    forward_map,
    observe,
    radial_operator,
    solve,
)


def insulated_exact(cfg, t):
    return cfg.T0 * np.exp(cfg.alpha * cfg.beta * t / (cfg.rho * cfg.Cp))


def bessel_series(cfg, k, r, t, terms=60):
    """Cooling of a long cylinder, constant k, no source, Robin boundary."""
    bi = cfg.h * cfg.R / k
    roots = []
    for m in range(terms):
        # one root of lam J1(lam) - Bi J0(lam) between consecutive zeros of J0 / J1
        a = max(m * np.pi, 1e-9)
        b = (m + 1) * np.pi
        g = lambda lam: lam * j1(lam) - bi * j0(lam)
        grid = np.linspace(a, b, 200)
        vals = g(grid)
        idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
        for i in idx:
            roots.append(brentq(g, grid[i], grid[i + 1]))
    lam = np.unique(np.round(np.array(roots), 12))[:terms]
    coef = 2.0 * bi / ((lam**2 + bi**2) * j0(lam))
    kappa = k / (cfg.rho * cfg.Cp)
    s = np.sum(coef[:, None] * j0(np.outer(lam, r / cfg.R)) * np.exp(-(lam[:, None] ** 2) * kappa * t / cfg.R**2), axis=0)
    return cfg.Te + (cfg.T0 - cfg.Te) * s


def test_default_pde_constants():
    cfg = default_pde()
    assert (cfg.Nr, cfg.Nt) == (102, 350)
    assert cfg.beta == pytest.approx(120.0 / 61.0 * 1e6)
    assert cfg.r_grid[0] == 0.0 and cfg.r_grid[-1] == pytest.approx(cfg.R)
    assert cfg.t_grid.size == 351


@pytest.mark.parametrize(
    "bad",
    [dict(Nr=2), dict(Nt=0), dict(rho=0.0), dict(R=-1.0), dict(h=-1.0), dict(alpha=float("nan")), dict(t_f=0.0)],
)
def test_invalid_config_rejected(bad):
    with pytest.raises(InputError):
        default_pde(**bad)


def test_radial_operator_annihilates_constants():
    lo, di, up = radial_operator(20, 0.045)
    ones = np.ones(20)
    lap = di * ones
    lap[1:] += lo[1:] * ones[:-1]
    lap[:-1] += up[:-1] * ones[1:]
    np.testing.assert_allclose(lap, 0.0, atol=1e-6)


def test_radial_operator_is_exact_on_r_squared():
    # Laplacian of r**2 in 2-D polar form is 4 everywhere (ghost-free interior rows).
    nr, R = 30, 0.045
    lo, di, up = radial_operator(nr, R)
    r = np.linspace(0, R, nr)
    f = r**2
    lap = di * f
    lap[1:] += lo[1:] * f[:-1]
    lap[:-1] += up[:-1] * f[1:]
    np.testing.assert_allclose(lap[:-1], 4.0, rtol=1e-9)


def test_insulated_field_matches_exponential_growth():
    cfg = default_pde(h=0.0)
    field = solve(lambda t: np.arctan(t / 30.0) + 0.45, cfg)
    exact = insulated_exact(cfg, cfg.t_grid)[:, None]
    assert np.max(np.abs(field.values - exact) / exact) < 1e-5


def test_equilibrium_without_source():
    cfg = default_pde(alpha=0.0)
    field = solve(lambda t: np.arctan(t / 30.0) + 0.45, cfg)
    assert np.all(field.values == 295.0)


def test_robin_cooling_matches_bessel_series():
    cfg = default_pde(alpha=0.0, T0=320.0, Te=295.0, Nr=102, Nt=700)
    k = 0.8
    field = solve(lambda t: np.full_like(t, k), cfg)
    for t_idx in (175, 700):
        t = cfg.t_grid[t_idx]
        exact = bessel_series(cfg, k, cfg.r_grid, t)
        err = np.max(np.abs(field.values[t_idx] - exact)) / (cfg.T0 - cfg.Te)
        assert err < 2e-4, (t, err)


def test_robin_cooling_converges_at_second_order():
    k = 0.8
    errs = []
    for nr, nt in ((26, 100), (51, 200), (101, 400)):
        cfg = default_pde(alpha=0.0, T0=320.0, Te=295.0, Nr=nr, Nt=nt)
        field = solve(lambda t: np.full_like(t, k), cfg)
        errs.append(np.max(np.abs(field.values[-1] - bessel_series(cfg, k, cfg.r_grid, cfg.t_f))))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.0) & (ratios < 5.0)), ratios


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(0.1, 10.0), seed=st.integers(0, 2**32 - 1))
def test_solution_is_linear_in_temperature_data(scale, seed):
    cfg = default_pde(Nr=12, Nt=30, T0=300.0, Te=290.0)
    k = np.random.default_rng(seed).uniform(0.3, 3.0, cfg.Nt + 1)
    base = solve(k, cfg).values
    scaled = solve(k, cfg.replace(T0=300.0 * scale, Te=290.0 * scale)).values
    np.testing.assert_allclose(scaled, scale * base, rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_backends_agree_on_random_conductivity(seed):
    cfg = default_pde(Nr=15, Nt=40)
    k = np.random.default_rng(seed).uniform(0.2, 4.0, cfg.Nt + 1)
    a = solve(k, cfg, backend="numba").values
    b = solve(k, cfg, backend="numpy").values
    np.testing.assert_allclose(a, b, rtol=1e-11)


@pytest.mark.parametrize("k", [0.0, -1.0, np.nan])
def test_non_positive_conductivity_rejected(k):
    cfg = default_pde(Nr=10, Nt=10)
    with pytest.raises(InputError):
        solve(np.full(cfg.Nt + 1, k), cfg)


def test_wrong_conductivity_length_rejected():
    cfg = default_pde(Nr=10, Nt=10)
    with pytest.raises(InputError):
        solve(np.ones(5), cfg)


def test_observe_shape_and_interpolation():
    cfg = default_pde(Nr=11, Nt=10, t_f=10.0)
    values = np.add.outer(2.0 * cfg.t_grid, cfg.r_grid)  # linear in time
    from hpcond.forward import TemperatureField

    field = TemperatureField(values, cfg.r_grid, cfg.t_grid)
    out = observe(field, (0.0, cfg.R), (0.5, 3.0, 9.25))
    assert out.shape == (2, 3)
    np.testing.assert_allclose(out[0], [1.0, 6.0, 18.5])
    np.testing.assert_allclose(out[1], np.array([1.0, 6.0, 18.5]) + cfg.R)


def test_observe_rejects_off_grid_radius_and_time():
    cfg = default_pde(Nr=11, Nt=10)
    field = solve(lambda t: np.ones_like(t), cfg)
    with pytest.raises(InputError):
        observe(field, (0.001,), (10.0,))
    with pytest.raises(InputError):
        observe(field, (0.0,), (cfg.t_f * 2,))


def test_default_observations_are_centre_and_boundary_at_knots():
    cfg = default_pde()
    obs = ObservationSpec.default(cfg, 10)
    assert obs.radii == (0.0, cfg.R)
    np.testing.assert_allclose(obs.times, np.arange(1, 11) * 100.0)
    assert obs.shape == (2, 10)


def test_forward_model_matches_forward_map(example1):
    cfg = example1.pde
    obs = ObservationSpec.default(cfg, 10)
    knots = knots_from_function(example1.true_k, 10, cfg.t_f)
    fm = ForwardModel(cfg, obs, 10)
    np.testing.assert_allclose(fm(knots.u), forward_map(knots, cfg, obs), rtol=0, atol=1e-12)


def test_forward_map_rejects_mismatched_horizon(example1):
    knots = knots_from_function(example1.true_k, 10, 500.0)
    with pytest.raises(InputError):
        forward_map(knots, example1.pde, ObservationSpec.default(example1.pde, 10))


def test_pde_config_round_trips_through_dict():
    cfg = default_pde(Nt=20)
    assert PdeConfig(**cfg.to_dict()) == cfg
