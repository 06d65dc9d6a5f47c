import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from whittaker_packets import DomainError, Momentum, QuadratureNonConvergence, QuadratureSpec
from whittaker_packets.constants import CONSTANTS
from whittaker_packets.specfun import (
    asymptotic_mode,
    gamma_pair,
    log_gamma_pair,
    mode_matrix,
    mode_prefactor,
    whittaker_mode,
    whittaker_mode_derivative,
    whittaker_mode_time,
)

from oracles import brute_force_mode_integral, lanczos_gamma, mode_derivative_mp, mode_mp

KAPPA_GRID = (0.05, 0.1356, 0.5, 1.917, 5.0)
DIRECT = QuadratureSpec(endpoint_transform="none")


# -- gamma pair and prefactor --------------------------------------------


def test_gamma_pair_limit_at_zero():
    assert gamma_pair(0.0) == 1.0
    assert log_gamma_pair(0.0) == 0.0


@pytest.mark.parametrize("y", [1e-9, 0.1, 1.0, 3.7, 10.0])
def test_gamma_pair_matches_lanczos_product(y):
    ref = (lanczos_gamma(1 + 1j * y) * lanczos_gamma(1 - 1j * y)).real
    assert gamma_pair(y) == pytest.approx(ref, rel=1e-13)


def test_gamma_pair_value_at_one():
    assert gamma_pair(1.0) == pytest.approx(math.pi / math.sinh(math.pi), rel=1e-15)
    assert gamma_pair(1.0) == pytest.approx(0.27203, abs=5e-6)


def test_gamma_pair_vectorised_and_even():
    y = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    g = gamma_pair(y)
    assert g.shape == y.shape
    assert np.allclose(g, g[::-1], rtol=0, atol=0)


def test_log_gamma_pair_survives_huge_argument():
    y = 500.0
    assert log_gamma_pair(y) == pytest.approx(math.log(math.pi * y) - math.pi * y + math.log(2.0), rel=1e-14)


@pytest.mark.parametrize("kappa", np.geomspace(0.05, 5.0, 13))
def test_prefactor_forms_agree(kappa):
    a = mode_prefactor(kappa, "csch")
    b = mode_prefactor(kappa, "gamma")
    assert a.real == 0.0 and b.real == 0.0
    assert abs(a - b) <= 1e-12 * abs(a)


def test_prefactor_at_half_matches_lanczos():
    k = 0.5
    y = 1.0 / (2 * k)
    ref = 2j * k / (lanczos_gamma(1 - 1j * y) * lanczos_gamma(1 + 1j * y))
    assert abs(mode_prefactor(k) - ref) <= 1e-12 * abs(ref)


def test_prefactor_rejects_unknown_form():
    with pytest.raises(DomainError):
        mode_prefactor(1.0, "bessel")


# -- mode values -----------------------------------------------------------


@pytest.mark.parametrize("kappa", KAPPA_GRID)
def test_value_at_origin(kappa):
    w0 = whittaker_mode(kappa, 0.0)
    assert abs(w0 - 2j * kappa) <= 1e-8 * 2 * kappa


@pytest.mark.parametrize("kappa,x", [(0.05, 3.0), (0.1356, 10.0), (0.5, 0.7), (1.917, 50.0), (5.0, 12.3), (0.01, 40.0)])
def test_against_mpmath_kummer(kappa, x):
    ref = mode_mp(kappa, x)
    got = whittaker_mode(kappa, x)
    assert abs(got - ref) <= 1e-10 * max(abs(ref), 2 * kappa * 1e-2)


def test_brute_force_integral_representation():
    # midpoint rule on the raw integral; only ~1e-4 accurate but fully independent
    for kappa, x in [(1.0, 3.0), (0.5, 10.0)]:
        ref = brute_force_mode_integral(kappa, x)
        assert abs(whittaker_mode(kappa, x) - ref) < 2e-4 * abs(ref)


@pytest.mark.parametrize("kappa", [0.5, 1.0, 1.917])
def test_direct_route_agrees_with_contour_route(kappa):
    x = np.array([0.0, 0.3, 4.0, 17.0])
    a = whittaker_mode(kappa, x)
    b = whittaker_mode(kappa, x, DIRECT)
    assert np.max(np.abs(a - b)) <= 1e-9 * 2 * kappa


def test_direct_route_refuses_tiny_kappa():
    with pytest.raises(QuadratureNonConvergence):
        whittaker_mode(1.5e-3, 1.0, DIRECT)


def test_purely_imaginary_grid():
    x = np.linspace(0.0, 200.0, 200)
    for kappa in np.linspace(0.05, 5.0, 100):
        w = whittaker_mode(kappa, x)
        assert np.max(np.abs(w.real)) <= 1e-8 * np.max(np.abs(w.imag))


@settings(max_examples=40, deadline=None)
@given(kappa=st.floats(1e-3, 10.0), x=st.floats(0.0, 500.0))
def test_purely_imaginary_property(kappa, x):
    w = whittaker_mode(kappa, x)
    assert abs(w.real) <= 1e-8 * max(abs(w.imag), 2 * kappa)


@pytest.mark.parametrize("kappa", KAPPA_GRID)
def test_radial_ode_residual(kappa):
    h = 1e-3
    x = np.linspace(0.1, 100.0, 400)

    def u(xx):
        return xx * whittaker_mode(kappa, xx).imag

    upp = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h)
    res = upp + (1.0 / x + kappa**2) * u(x)
    scale = np.max(np.abs((1.0 / x + kappa**2) * u(x)))
    assert np.max(np.abs(res)) <= 1e-4 * scale


def test_radial_ode_at_reference_point():
    kappa, x, h = 1.917, 50.0, 1e-3
    u = [xx * whittaker_mode(kappa, xx) for xx in (x - h, x, x + h)]
    res = (u[2] - 2 * u[1] + u[0]) / h**2 + (1 / x + kappa**2) * u[1]
    assert abs(res) <= 1e-4 * kappa**2 * max(abs(u[1]), 1.0)


def test_time_dependence():
    k, x = 0.1356, 10.0
    w0 = whittaker_mode(k, x)
    assert whittaker_mode_time(k, x, 0.0) == w0
    for t in (0.3, 7.0, 123.0):
        assert abs(whittaker_mode_time(k, x, t)) == pytest.approx(abs(w0), rel=1e-14)
    half = math.pi / (CONSTANTS.omega0 * k * k)
    assert abs(whittaker_mode_time(k, x, half) + w0) <= 1e-12 * abs(w0)


# -- derivative ------------------------------------------------------------


def test_derivative_against_central_difference():
    k, x, h = 0.1356, 5.0, 1e-4
    fd = (whittaker_mode(k, x + h) - whittaker_mode(k, x - h)) / (2 * h)
    d = whittaker_mode_derivative(k, x)
    assert abs(d - fd) <= 1e-6 * abs(d)


@pytest.mark.parametrize("kappa,x", [(0.1356, 2.0), (1.917, 30.0), (0.05, 15.0)])
def test_derivative_against_mpmath(kappa, x):
    ref = mode_derivative_mp(kappa, x)
    assert abs(whittaker_mode_derivative(kappa, x) - ref) <= 1e-9 * max(abs(ref), kappa**2)


def test_derivative_purely_imaginary():
    x = np.linspace(0.0, 150.0, 301)
    for kappa in KAPPA_GRID:
        d = whittaker_mode_derivative(kappa, x)
        assert np.max(np.abs(d.real)) <= 1e-8 * np.max(np.abs(d.imag))


def _zeros(f, a, b, n=4001):
    xs = np.linspace(a, b, n)
    v = f(xs)
    return np.array([brentq(f, p, q, xtol=1e-12) for p, q, fp, fq in zip(xs[:-1], xs[1:], v[:-1], v[1:]) if fp * fq < 0])


def test_derivative_wavelength_at_large_x():
    k = 1.917
    z = _zeros(lambda xx: whittaker_mode_derivative(k, xx).imag, 400.0, 500.0)
    assert np.mean(np.diff(z)) == pytest.approx(math.pi / k, rel=0.02)


# -- asymptotics -------------------------------------------------------------


def test_asymptotic_magnitude_law():
    for k in (0.2, 1.0, 3.0):
        x = 100.0 * max(1.0, 1.0 / k) * 1.5
        assert abs(asymptotic_mode(k, 2 * x)) / abs(asymptotic_mode(k, x)) == pytest.approx(0.5, rel=1e-14)


def test_asymptotic_guard():
    with pytest.raises(DomainError):
        asymptotic_mode(0.5, 150.0)
    asymptotic_mode(0.5, 200.0)


def test_asymptotic_phase_gradient():
    k, x, h = 0.8, 500.0, 1e-4
    ph = np.unwrap(np.angle(asymptotic_mode(k, np.array([x - h, x + h]))))
    assert (ph[1] - ph[0]) / (2 * h) == pytest.approx(k + 1 / (2 * k * x), rel=1e-7)


@pytest.fixture(scope="module")
def far_zeros():
    k = 1.0
    return k, _zeros(lambda xx: whittaker_mode(k, xx).imag, 200.0, 400.0)


def test_zero_spacing_far_field(far_zeros):
    k, z = far_zeros
    d = np.diff(z)
    assert np.all(np.abs(d / (math.pi / k) - 1) < 0.02)


def test_coulomb_phase_increment(far_zeros):
    k, z = far_zeros
    inc = k * np.diff(z) + np.log(z[1:] / z[:-1]) / (2 * k)
    assert np.max(np.abs(inc - math.pi)) < 1e-3


@pytest.mark.parametrize("kappa", KAPPA_GRID)
def test_zero_spacing_over_kappa_grid(kappa):
    # the Coulomb correction to the spacing is about 1/(2 kappa**2 x)
    a = 100.0 * max(1.0, 1.0 / kappa, 1.0 / kappa**2)
    b = a + 12 * math.pi / kappa
    z = _zeros(lambda xx: whittaker_mode(kappa, xx).imag, a, b, n=2001)
    assert np.mean(np.diff(z)) == pytest.approx(math.pi / kappa, rel=0.02)


# -- tolerances, domain, determinism ----------------------------------------


def test_domain_errors():
    with pytest.raises(DomainError):
        whittaker_mode(1.0, -0.1)
    with pytest.raises(DomainError):
        whittaker_mode(5e-4, 1.0)
    with pytest.raises(DomainError):
        whittaker_mode(float("nan"), 1.0)
    with pytest.raises(DomainError):
        Momentum(-1.0)


@pytest.mark.parametrize("kw", [{"rel_tol": 0.0}, {"abs_tol": 1.0}, {"max_subdivisions": 4}, {"endpoint_transform": "tanh"}])
def test_quadrature_spec_validation(kw):
    with pytest.raises(DomainError):
        QuadratureSpec(**kw)


def test_tighter_tolerance_stays_within_error_estimate():
    x = np.linspace(0.0, 80.0, 41)
    for k in (0.05, 0.5, 3.0):
        loose = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-8)
        v, e = whittaker_mode(k, x, loose, return_error=True)
        tight = whittaker_mode(k, x, loose.tightened(0.5))
        assert np.all(np.abs(v - tight) <= e + 1e-15)


def test_return_error_shapes():
    v, e = whittaker_mode(0.3, 4.0, return_error=True)
    assert isinstance(v, complex) and isinstance(e, float)
    v, e = whittaker_mode(0.3, np.ones((2, 3)), return_error=True)
    assert v.shape == e.shape == (2, 3)


def test_small_kappa_supported():
    x = np.array([0.0, 1.0, 50.0])
    w = whittaker_mode(1e-3, x)
    assert abs(w[0] - 2e-3j) < 1e-11
    assert abs(w[2] - mode_mp(1e-3, 50.0, dps=40)) < 1e-10 * abs(w[2])


def test_mode_matrix_independent_of_threads_and_order():
    ks = np.array([0.12, 0.5, 2.0, 0.3])
    x = np.linspace(0, 40, 57)
    a = mode_matrix(ks, x)
    b = mode_matrix(ks, x, threads=4)
    c = mode_matrix(ks[::-1], x)[::-1]
    assert np.array_equal(a, b) and np.array_equal(a, c)
    assert np.array_equal(a[1], whittaker_mode(0.5, x))
