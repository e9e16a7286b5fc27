import logging

import numpy as np
import pytest

from hpcond.errors import InputError
from hpcond.experiment import (
    Scenario,
    generate_data,
    get_scenario,
    nondecreasing_after,
    propagate_uncertainty,
    true_k_example1,
    true_k_example2,
)
from hpcond.forward import default_pde, observe, solve
from hpcond.rng import make_rng


def test_example1_truth_values():
    assert true_k_example1(0.0) == pytest.approx(0.45)
    assert true_k_example1(30.0) == pytest.approx(np.pi / 4 + 0.45)
    assert true_k_example1(30.0) == pytest.approx(1.23540, abs=1e-5)
    assert abs(true_k_example1(1e6) - (np.pi / 2 + 0.45)) < 1e-4


def test_example2_truth_values():
    assert true_k_example2(450.0) == pytest.approx(1.75)
    assert true_k_example2(600.0) == pytest.approx(0.5 * (np.pi / 4 + 3.5))
    assert true_k_example2(600.0) == pytest.approx(2.14270, abs=1e-5)
    assert true_k_example2(0.0) == pytest.approx(0.5 * (3.5 - np.arctan(3.0)), rel=1e-14)
    # 1.12549 as commonly quoted is 0.5 * (3.5 - 1.24905) = 1.125475 rounded up
    assert true_k_example2(0.0) == pytest.approx(1.12549, abs=2e-5)


def test_scenario_constraints_share_constants(example1, example2):
    for sc in (example1, example2):
        c = sc.constraints
        assert c.k0 == pytest.approx(float(sc.true_k(0.0)))
        for name in ("rho", "Cp", "alpha", "beta", "R"):
            assert getattr(c, name) == getattr(sc.pde, name)


def test_scenario_validation_and_hash():
    pde = default_pde()
    with pytest.raises(InputError):
        Scenario("x", "nope", pde)
    with pytest.raises(InputError):
        Scenario("x", "example1", pde, n=0)
    with pytest.raises(InputError):
        Scenario("x", "example1", pde, snr=0.0)
    with pytest.raises(InputError):
        get_scenario("nope")
    a = Scenario("x", "example1", pde)
    assert a.hash() == Scenario("x", "example1", default_pde()).hash()
    assert a.hash() != Scenario("x", "example1", pde, snr=10.0).hash()
    assert a.hash() != Scenario("x", "example1", pde.replace(Nt=351)).hash()


def test_generate_data_sigma1_and_shape(example1, example1_data):
    ds = example1_data
    assert ds.values.shape == (2, 10)
    fine = solve(example1.true_k, example1.pde.replace(Nt=35000))
    assert ds.sigma1 == pytest.approx(fine.values.mean() / 1e3, rel=1e-12)
    assert 0.29 < ds.sigma1 < 0.40
    lo, hi = example1.pde.T0 - 5 * ds.sigma1, fine.values.max() + 5 * ds.sigma1
    assert np.all((ds.values >= lo) & (ds.values <= hi))


def test_generate_data_noiseless_is_fine_truth(example1):
    ds = generate_data(example1, make_rng(0), noise=False)
    fine = solve(example1.true_k, example1.pde.replace(Nt=35000))
    truth = observe(fine, ds.radii, ds.times)
    np.testing.assert_array_equal(ds.values - truth, 0.0)


def test_generate_data_deterministic(toy_scenario):
    a = generate_data(toy_scenario, make_rng(4, 0))
    b = generate_data(toy_scenario, make_rng(4, 0))
    np.testing.assert_array_equal(a.values, b.values)
    c = generate_data(toy_scenario, make_rng(5, 0))
    assert not np.array_equal(a.values, c.values)


def test_pl_interpolation_error_is_below_noise(example1, example1_data):
    # discretising k on 10 knots shifts the observations by well under sigma1
    from hpcond.forward import ObservationSpec, forward_map

    clean = generate_data(example1, make_rng(0), noise=False)
    pred = forward_map(example1.true_knots(), example1.pde, ObservationSpec.default(example1.pde, 10))
    assert np.max(np.abs(pred - clean.values)) < 0.1 < example1_data.sigma1


def _coarse():
    return get_scenario("example1", Nr=22, Nt=100)


def test_propagation_without_noise_is_zero():
    res = propagate_uncertainty(_coarse(), 5, (10.0,), seed=1, noise=False)
    assert np.all(res.var_center == 0.0) and np.all(res.var_boundary == 0.0)


@pytest.mark.parametrize("law", ["knots", "nodes"])
def test_propagation_basic_properties(law):
    res = propagate_uncertainty(_coarse(), 20, (10.0, 1e3), seed=2, law=law)
    assert res.var_center.shape == (2, 101)
    assert res.k_samples.shape == (2, 20, 101)
    np.testing.assert_array_equal(res.var_center[:, 0], 0.0)
    np.testing.assert_array_equal(res.var_boundary[:, 0], 0.0)
    late = res.t_grid >= 50.0  # earlier values are at roundoff level
    assert np.all(res.var_center[0, late] > res.var_center[1, late])
    again = propagate_uncertainty(_coarse(), 20, (10.0, 1e3), seed=2, law=law)
    np.testing.assert_array_equal(res.var_center, again.var_center)


def test_propagation_knot_law_keeps_k0():
    sc = _coarse()
    res = propagate_uncertainty(sc, 10, (10.0,), seed=3, law="knots")
    np.testing.assert_allclose(res.k_samples[0, :, 0], sc.true_k(0.0))


def test_propagation_redraws_non_positive(caplog):
    with caplog.at_level(logging.WARNING, logger="hpcond.experiment"):
        res = propagate_uncertainty(_coarse(), 10, (0.7,), seed=0, law="knots")
    assert res.redraws > 0
    assert np.all(res.k_samples > 0)
    assert "redrawing" in caplog.text


def test_propagation_single_member_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="hpcond.experiment"):
        res = propagate_uncertainty(_coarse(), 1, (10.0,), seed=0)
    assert np.all(res.var_center == 0.0)
    assert "identically zero" in caplog.text


def test_propagation_rejects_bad_input():
    with pytest.raises(InputError):
        propagate_uncertainty(_coarse(), 0, (10.0,), seed=0)
    with pytest.raises(InputError):
        propagate_uncertainty(_coarse(), 3, (10.0,), seed=0, law="pink")


def test_nondecreasing_after():
    t = np.linspace(0, 100, 101)
    assert nondecreasing_after(t**2, t)
    dip = t.copy()
    dip[80] -= 5.0
    assert not nondecreasing_after(dip, t)
    early = t.copy()
    early[10] -= 5.0  # before t_min
    assert nondecreasing_after(early, t)
    tiny = t.copy()
    tiny[80] -= 0.5 * 1e-3 * 100  # within rel_tol of the final value
    assert nondecreasing_after(tiny, t)
