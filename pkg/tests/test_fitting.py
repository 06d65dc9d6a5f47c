import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whittaker_packets.errors import DomainError, RankDeficient
from whittaker_packets.fitting import (
    DEFAULT_LIFETIME_PAIRS,
    calibrate_lifetime_constant,
    calibrate_spread_constant,
    fit_power_law,
    leave_one_out,
)
from whittaker_packets.observables import predicted_lifetime, predicted_spread


def synthetic(c, p, xs, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    ys = c * np.asarray(xs) ** p * np.exp(noise * rng.standard_normal(len(xs)))
    return np.column_stack([xs, ys])


def test_exact_power_law_recovered():
    fit = fit_power_law(synthetic(2.471, -0.5, np.geomspace(1e-3, 6.6, 6)))
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    assert fit.coefficient == pytest.approx(2.471, rel=1e-12)
    assert fit.residual_rms < 1e-12


def test_fixed_exponent_uses_geometric_mean():
    s = synthetic(0.136, -0.5, [1.0, 2.0, 4.0, 8.0], noise=0.05, seed=3)
    fit = fit_power_law(s, fixed_exponent=-0.5)
    expected = math.exp(np.mean(np.log(s[:, 1]) + 0.5 * np.log(s[:, 0])))
    assert fit.coefficient == pytest.approx(expected, rel=1e-13)
    assert fit.exponent == -0.5 and fit.exponent_fixed


def test_noisy_fit_is_within_noise():
    fit = fit_power_law(synthetic(2.471, -0.5, np.geomspace(1e-5, 1e-3, 20), noise=0.01, seed=7))
    assert fit.exponent == pytest.approx(-0.5, abs=0.03)
    assert fit.coefficient == pytest.approx(2.471, rel=0.1)
    assert 0.003 < fit.residual_rms < 0.03


@settings(max_examples=40, deadline=None)
@given(
    c=st.floats(1e-3, 1e3),
    p=st.floats(-3.0, 3.0),
    lo=st.floats(-6.0, 2.0),
    span=st.floats(0.5, 6.0),
)
def test_power_law_roundtrip(c, p, lo, span):
    xs = np.logspace(lo, lo + span, 7)
    fit = fit_power_law(synthetic(c, p, xs))
    assert fit.exponent == pytest.approx(p, abs=1e-9)
    assert fit.coefficient == pytest.approx(c, rel=1e-8)
    np.testing.assert_allclose(fit.predict(xs), c * xs**p, rtol=1e-8)


def test_rank_deficient():
    with pytest.raises(RankDeficient):
        fit_power_law([[1.0, 2.0]] * 4)


def test_fixed_exponent_allows_equal_x():
    fit = fit_power_law([[1.0, 2.0]] * 4, fixed_exponent=-0.5)
    assert fit.coefficient == pytest.approx(2.0)


@pytest.mark.parametrize(
    "samples",
    [
        [[1.0, 1.0], [2.0, 0.5], [3.0, 0.3]],
        [[1.0, 1.0], [2.0, -0.5], [3.0, 0.3], [4.0, 0.2]],
        [[0.0, 1.0], [2.0, 0.5], [3.0, 0.3], [4.0, 0.2]],
        [[1.0, np.nan], [2.0, 0.5], [3.0, 0.3], [4.0, 0.2]],
        [1.0, 2.0, 3.0, 4.0],
    ],
)
def test_invalid_samples(samples):
    with pytest.raises(DomainError):
        fit_power_law(samples)


def test_leave_one_out_stable_on_exact_data():
    fit = fit_power_law(synthetic(0.136, -0.5, np.geomspace(1e-7, 1e2, 6)), fixed_exponent=-0.5)
    np.testing.assert_allclose(leave_one_out(fit), 0.136, rtol=1e-12)


def test_leave_one_out_free_exponent():
    s = synthetic(3.0, -0.5, np.geomspace(1e-4, 1.0, 6), noise=0.02, seed=1)
    loo = leave_one_out(fit_power_law(s))
    assert loo.shape == (6,)
    assert np.all(np.abs(loo / 3.0 - 1.0) < 0.2)


def test_calibrate_from_precomputed_samples():
    dE = np.array([1e-3, 1e-2, 1e-1, 1.0, 6.6])
    spread = np.column_stack([dE, [predicted_spread(d) for d in dE]])
    assert calibrate_spread_constant(samples=spread).coefficient == pytest.approx(2.471, rel=1e-12)
    free = calibrate_spread_constant(samples=spread, free_exponent=True)
    assert free.exponent == pytest.approx(-0.5, abs=1e-12)

    life = np.array([(E * d, predicted_lifetime(E, d)) for E, d in DEFAULT_LIFETIME_PAIRS])
    assert calibrate_lifetime_constant(samples=life).coefficient == pytest.approx(0.136, rel=1e-12)


def test_as_dict_keys():
    d = fit_power_law(synthetic(1.0, -0.5, [1, 2, 3, 4])).as_dict()
    assert set(d) == {"constant", "exponent", "exponent_fixed", "residual_rms", "sample_count", "samples"}
    assert d["sample_count"] == 4 and len(d["samples"]) == 4
