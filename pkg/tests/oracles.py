"""Independent reference implementations used only by the tests.

None of these share code with the package: the mode comes from mpmath's
confluent hypergeometric function, the complex gamma from a Lanczos series,
and derivatives from finite differences.
"""

from __future__ import annotations

import cmath
import math

import mpmath as mp
import numpy as np

# Lanczos coefficients, g = 7, n = 9
_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(z: complex) -> complex:
    """Complex gamma function by the Lanczos approximation (~1e-15)."""
    z = complex(z)
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * lanczos_gamma(1.0 - z))
    z -= 1.0
    a = _LANCZOS[0]
    t = z + _LANCZOS_G + 0.5
    for i in range(1, len(_LANCZOS)):
        a += _LANCZOS[i] / (z + i)
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * cmath.exp(-t) * a


def mode_mp(kappa: float, x: float, dps: int = 30) -> complex:
    """w_κ(x) = 2iκ e^{-iκx} 1F1(1 + i/2κ; 2; 2iκx) in extended precision."""
    with mp.workdps(dps):
        k = mp.mpf(kappa)
        val = 2j * k * mp.exp(-1j * k * x) * mp.hyp1f1(1 + 1j / (2 * k), 2, 2j * k * x)
        return complex(val)


def mode_derivative_mp(kappa: float, x: float, dps: int = 30) -> complex:
    """dw_κ/dx by mpmath numerical differentiation."""
    with mp.workdps(dps):
        k = mp.mpf(kappa)

        def f(xx):
            return 2j * k * mp.exp(-1j * k * xx) * mp.hyp1f1(1 + 1j / (2 * k), 2, 2j * k * xx)

        return complex(mp.diff(f, mp.mpf(x)))


def central_second_difference(f, x, h):
    """(f(x+h) - 2f(x) + f(x-h)) / h**2, vectorised over ``x``."""
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def hydrogen_radial_mp(n: int, r: float) -> float:
    """R_{n1}(r) from the explicit Laguerre polynomial in mpmath."""
    rho = mp.mpf(2) * r / n
    norm = mp.sqrt((mp.mpf(2) / n) ** 3 * mp.factorial(n - 2) / (2 * n * mp.factorial(n + 1)))
    return float(norm * mp.exp(-rho / 2) * rho * mp.laguerre(n - 2, 3, rho))


def matrix_element_mp(n: int, kappa: float, r_max: float | None = None) -> complex:
    """∫ r² R_{n1}(r) ∂_r w_κ(2r) dr by mpmath quadrature."""
    mp.mp.dps = 20
    k = mp.mpf(kappa)

    def w(x):
        return 2j * k * mp.exp(-1j * k * x) * mp.hyp1f1(1 + 1j / (2 * k), 2, 2j * k * x)

    def integrand(r):
        rho = 2 * r / n
        norm = mp.sqrt((mp.mpf(2) / n) ** 3 * mp.factorial(n - 2) / (2 * n * mp.factorial(n + 1)))
        radial = norm * mp.exp(-rho / 2) * rho * mp.laguerre(n - 2, 3, rho)
        return r * r * radial * 2 * mp.diff(w, 2 * r)

    r_max = 40.0 * n * n / 2 + 60 if r_max is None else r_max
    return complex(mp.quad(integrand, mp.linspace(0, r_max, 40)))


def brute_force_mode_integral(kappa: float, x: float, n: int = 200_000) -> complex:
    """Midpoint rule for the real-axis integral representation.

    Only usable for moderate ``y = 1/2κ`` where the cancellation is mild.
    """
    y = 0.5 / kappa
    s = (np.arange(n) + 0.5) / n
    f = np.exp(1j * kappa * x * (2.0 * s - 1.0) + 1j * y * np.log(s / (1.0 - s)))
    pref = 2j * kappa / (lanczos_gamma(1 - 1j * y) * lanczos_gamma(1 + 1j * y))
    return complex(pref * f.mean())
