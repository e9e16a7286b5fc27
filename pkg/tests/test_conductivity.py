import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hpcond.conductivity import (
    DD_EPS,
    ConductivityKnots,
    ConstraintConfig,
    check_h4,
    check_h5,
    eval_k,
    eval_u,
    growth_bound_f,
    growth_rate,
    h4_budget,
    h4_integral,
    h5_margins,
    in_Q,
    knots_from_function,
    violations,
)
from hpcond.errors import InputError


@pytest.fixture
def cc(example1):
    return example1.constraints


def test_default_budget(cc):
    # rho * Cp * R**2 / 4 with r0 = 0
    assert h4_budget(cc) == pytest.approx(1000.6 * 3780.0 * 0.045**2 / 4.0, rel=1e-14)
    assert h4_budget(cc) == pytest.approx(1914.77, abs=0.01)


def test_growth_rate_value(cc):
    assert growth_rate(cc) == pytest.approx(4.217e-4 * 120e6 / 61.0 / (1000.6 * 3780.0), rel=1e-14)


def test_knots_are_uniform_and_read_only():
    kn = ConductivityKnots([0.0, 1.0, 2.0], 10.0)
    assert kn.n == 2 and kn.tau == 5.0
    np.testing.assert_array_equal(kn.times, [0.0, 5.0, 10.0])
    with pytest.raises(ValueError):
        kn.u[0] = 3.0


@pytest.mark.parametrize("u, t_f", [([1.0], 10.0), ([0.0, 1.0], 0.0)])
def test_knots_validation(u, t_f):
    with pytest.raises(InputError):
        ConductivityKnots(u, t_f)


def test_eval_u_interpolates_and_rejects_outside():
    kn = ConductivityKnots([0.0, 2.0, 1.0], 2.0)
    assert eval_u(kn, 0.5) == pytest.approx(1.0)
    assert eval_u(kn, 1.5) == pytest.approx(1.5)
    np.testing.assert_allclose(eval_k(kn, [0.0, 1.0]), np.exp([0.0, 2.0]))
    with pytest.raises(InputError):
        eval_u(kn, 2.5)
    with pytest.raises(InputError):
        eval_u(kn, -0.1)


def test_h4_integral_of_constant_profile():
    kn = ConductivityKnots(np.full(11, np.log(2.0)), 1000.0)
    assert h4_integral(kn) == pytest.approx(2000.0, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    u=st.lists(st.floats(-3.0, 3.0), min_size=2, max_size=12),
    t_f=st.floats(1.0, 2000.0),
)
def test_h4_integral_matches_quadrature(u, t_f):
    kn = ConductivityKnots(u, t_f)
    ref = sum(
        quad(lambda t: np.exp(np.interp(t, kn.times, kn.u)), a, b, epsabs=0, epsrel=1e-12)[0]
        for a, b in zip(kn.times[:-1], kn.times[1:])
    )
    assert h4_integral(kn) == pytest.approx(ref, rel=1e-9)


def test_h4_small_difference_branch_is_continuous():
    t_f = 10.0
    for d in (0.5 * DD_EPS, 2.0 * DD_EPS):
        kn = ConductivityKnots([0.3, 0.3 + d], t_f)
        exact = t_f * np.exp(0.3) * np.expm1(d) / d
        assert h4_integral(kn) == pytest.approx(exact, rel=1e-14)


def test_growth_bound_rejects_non_positive_time(cc):
    with pytest.raises(InputError):
        growth_bound_f(0.0, cc)
    assert growth_bound_f(1.0, cc) == pytest.approx(1.0, rel=1e-3)  # ~1/t for small c t


def test_example_truths_are_admissible(example1, example2):
    for sc in (example1, example2):
        kn = sc.true_knots()
        assert in_Q(kn, sc.constraints)
        assert violations(kn, sc.constraints) == []
        assert np.all(h5_margins(kn, sc.constraints) > 0)


def test_example1_integrals(example1, cc):
    kn = example1.true_knots()
    # exact integral of arctan(t/30) + 0.45 over [0, 1000]
    x = 1000.0 / 30.0
    continuous = 30.0 * (x * np.arctan(x) - 0.5 * np.log1p(x * x)) + 0.45 * 1000.0
    assert continuous == pytest.approx(1885.6, abs=0.05)
    assert quad(example1.true_k, 0, 1000, limit=200)[0] == pytest.approx(continuous, rel=1e-10)
    # the piecewise-linear-in-log interpolant with 10 knots undershoots the smooth curve
    assert h4_integral(kn) < continuous
    assert h4_integral(kn) <= h4_budget(cc)


def test_constant_two_fails_h4(cc):
    kn = ConductivityKnots(np.full(11, np.log(2.0)), 1000.0)
    assert not check_h4(kn, cc)
    assert "H4" in violations(kn, cc)
    assert not in_Q(kn, cc)


def test_jump_profile_fails_h5(cc):
    u = np.full(11, np.log(0.45))
    u[5:] = np.log(1.5)
    kn = ConductivityKnots(u, 1000.0)
    assert check_h4(kn, cc)
    assert not check_h5(kn, cc)
    assert violations(kn, cc) == ["H5"]


def test_lower_bound_violation_named(cc):
    u = np.full(11, np.log(0.45))
    u[3] = np.log(0.3)
    assert "lower_bound" in violations(ConductivityKnots(u, 1000.0), cc)


def test_non_finite_knots_rejected(cc):
    u = np.full(11, np.log(0.45))
    u[2] = np.nan
    kn = ConductivityKnots(u, 1000.0)
    assert violations(kn, cc) == ["finite"]
    assert not in_Q(kn, cc)


def test_h5_vacuous_for_single_interval(cc):
    kn = ConductivityKnots([np.log(0.45), np.log(0.9)], 1000.0)
    assert h5_margins(kn, cc).size == 0
    assert check_h5(kn, cc)


def test_h5_margin_formula(cc):
    # independent Simpson evaluation of the weak growth bound at one knot
    kn = knots_from_function(lambda t: np.arctan(t / 30.0) + 0.45, 10, 1000.0)
    c = growth_rate(cc)
    f = lambda t: c / np.expm1(c * t)
    i, tau = 3, 100.0
    ti = i * tau
    rhs = tau / 3.0 * (f(ti - tau / 2) + f(ti) + f(ti + tau / 2))
    lhs = 0.5 * (kn.u[i + 1] - kn.u[i - 1])
    assert h5_margins(kn, cc)[i - 1] == pytest.approx(rhs - lhs, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 0.5), min_size=10, max_size=10))
def test_in_q_agrees_with_violations(incs):
    u = np.log(0.45) + np.cumsum(np.r_[0.0, incs])
    kn = ConductivityKnots(u, 1000.0)
    cfg = ConstraintConfig(rho=1000.6, Cp=3780.0, alpha=4.217e-4, beta=120e6 / 61.0, R=0.045, r0=0.0, k0=0.45)
    assert in_Q(kn, cfg) == (violations(kn, cfg) == [])


@pytest.mark.parametrize("bad", [dict(rho=0.0), dict(R=-1.0), dict(r0=0.05), dict(k0=0.0)])
def test_constraint_config_validation(bad):
    base = dict(rho=1000.6, Cp=3780.0, alpha=4.217e-4, beta=120e6 / 61.0, R=0.045, r0=0.0, k0=0.45)
    base.update(bad)
    with pytest.raises(InputError):
        ConstraintConfig(**base)
