"""Whittaker continuum modes of the hydrogen atom (l = 0).

The mode of dimensionless momentum ``kappa`` is

    w(x) = 4i kappa**2 sinh(pi y) / pi * exp(-i kappa x)
           * integral_0^1 exp(2i kappa x s) (s / (1 - s))**(i y) ds,

with ``y = 1 / (2 kappa)`` and ``x = 2 r / a0``.  ``u = x w`` solves
``u'' + (1/x + kappa**2) u = 0`` and ``w(0) = 2i kappa``.

Evaluation
----------
The log-phase factor oscillates without bound at both endpoints.  The
substitution ``s = 1 / (1 + exp(-v))`` turns the integral into

    integral over the real line of
    exp(i kappa x tanh(v/2)) exp(i y v) / (4 cosh(v/2)**2) dv.

The integrand is analytic in the strip ``0 <= Im v < pi`` and bounded there
for ``x >= 0``, so the contour is moved to ``Im v = c`` close to ``pi``.
This removes the ``exp(-pi y)`` cancellation which otherwise destroys all
significant digits for small ``kappa``: the prefactor ``sinh(pi y)`` is
compensated analytically by ``exp(-y c)``.  On the shifted line the
trapezoidal rule converges geometrically; it is refined by step halving
with nested nodes until the estimated error meets the tolerance.

A plain adaptive Gauss-Kronrod route on the original variable is kept
(``endpoint_transform="none"``).  It cannot resolve small ``kappa`` because of
the cancellation, but for ``kappa`` of order one it is an independent check.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .constants import CONSTANTS, KAPPA_MIN, Momentum
from .errors import DomainError, QuadratureNonConvergence

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "gamma_pair",
    "log_gamma_pair",
    "mode_prefactor",
    "whittaker_mode",
    "whittaker_mode_time",
    "whittaker_mode_derivative",
    "asymptotic_mode",
    "mode_matrix",
]

_EPS = np.finfo(float).eps
# bound on complex elements held in one block of the mode sum
_BLOCK = 1 << 21


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the mode quadrature.

    Attributes
    ----------
    rel_tol : float
        Relative tolerance on each returned value.
    abs_tol : float
        Absolute tolerance, relative to the natural mode scale ``2 kappa``
        (``2 kappa**2`` for the derivative).  Governs points near zeros.
    max_subdivisions : int
        Maximum number of refinements: step halvings for the trapezoidal
        route, bisection depth for the Gauss-Kronrod route.
    endpoint_transform : {"double_exponential", "none"}
        ``"double_exponential"`` selects the exponential endpoint map with
        the shifted contour; ``"none"`` integrates directly in ``s``.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 48
    endpoint_transform: Literal["double_exponential", "none"] = "double_exponential"

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise DomainError(f"{name} must lie in (0, 1), got {v!r}")
        if int(self.max_subdivisions) < 8:
            raise DomainError("max_subdivisions must be at least 8")
        if self.endpoint_transform not in ("double_exponential", "none"):
            raise DomainError(f"unknown endpoint_transform {self.endpoint_transform!r}")

    def tightened(self, factor: float = 0.5) -> "QuadratureSpec":
        """Copy with both tolerances scaled by ``factor``."""
        return QuadratureSpec(
            self.rel_tol * factor,
            self.abs_tol * factor,
            self.max_subdivisions,
            self.endpoint_transform,
        )


DEFAULT_QUAD = QuadratureSpec()


def _as_kappa(kappa) -> float:
    k = kappa.kappa if isinstance(kappa, Momentum) else float(kappa)
    if not math.isfinite(k) or k < KAPPA_MIN:
        raise DomainError(f"kappa must be finite and >= {KAPPA_MIN}, got {k!r}")
    return k


def _as_radius(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0):
        raise DomainError("x must be finite and non-negative")
    return x


def _log_sinh(z: float) -> float:
    # log(sinh(z)) for z > 0 without overflow
    return z + math.log1p(-math.exp(-2.0 * z)) - math.log(2.0)


def gamma_pair(y):
    """Return Γ(1 + iy) Γ(1 - iy) = πy / sinh(πy).

    Parameters
    ----------
    y : float or array_like
        Real argument.  The removable singularity at ``y = 0`` evaluates to 1.
    """
    y = np.asarray(y, dtype=float)
    z = np.pi * np.abs(y)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        small = z < 1e-8
        e = np.exp(-z)
        out = 2.0 * z * e / (-np.expm1(-2.0 * z))
        out = np.where(small, 1.0 - z * z / 6.0, out)
    return out[()] if out.ndim == 0 else out


def log_gamma_pair(y: float) -> float:
    """Natural log of :func:`gamma_pair`, finite for any real ``y``."""
    z = math.pi * abs(float(y))
    if z < 1e-8:
        return -z * z / 6.0
    return math.log(z) - _log_sinh(z)


def mode_prefactor(kappa, form: Literal["csch", "gamma"] = "csch") -> complex:
    """Prefactor of the integral representation of the mode.

    ``"csch"`` evaluates ``4i κ² / (π csch(π/2κ))``; ``"gamma"`` evaluates
    ``2iκ / (Γ(1 - i/2κ) Γ(1 + i/2κ))``.  Both are computed in log space and
    agree identically; they are kept separate so the identity can be tested.
    """
    k = _as_kappa(kappa)
    y = 0.5 / k
    if form == "csch":
        log_mag = math.log(4.0 * k * k / math.pi) + _log_sinh(math.pi * y)
    elif form == "gamma":
        log_mag = math.log(2.0 * k) - log_gamma_pair(y)
    else:
        raise DomainError(f"unknown prefactor form {form!r}")
    return 1j * math.exp(log_mag)


# --------------------------------------------------------------------------
# shifted-contour trapezoidal rule


@dataclass(frozen=True)
class _ContourRule:
    kappa: float
    y: float
    shift: float  # imaginary part c of the contour
    step: float  # step of the finest level expected to be needed
    half_range: float
    log_scale: float

    @classmethod
    @lru_cache(maxsize=4096)
    def build(cls, kappa: float, eps: float, x_max: float) -> "_ContourRule":
        y = 0.5 / kappa
        delta = min(2.0, 5.0 / y)
        c = math.pi - delta
        ln_eps = math.log(1.0 / eps)
        step = math.pi * delta / (ln_eps + 1.5 * y * delta)
        # tail of the integrand decays like exp(y delta - |v|)
        half_range = y * delta + ln_eps + math.log1p(kappa * x_max) + 5.0
        log_scale = (
            math.log(4.0 * kappa * kappa / math.pi) + _log_sinh(math.pi * y) - y * c
        )
        return cls(kappa, y, c, step, half_range, log_scale)

    @lru_cache(maxsize=2048)
    def nodes(self, level: int, coarse_step: float):
        """Abscissae added at ``level`` (level 0 holds the full coarse grid)."""
        m = int(math.ceil(self.half_range / coarse_step))
        if level == 0:
            a = coarse_step * np.arange(-m, m + 1, dtype=float)
        else:
            h = coarse_step / 2**level
            j = m * 2 ** (level - 1)
            a = h * (2.0 * np.arange(-j, j, dtype=float) + 1.0)
        v = a + 1j * self.shift
        weight = np.exp(1j * self.y * a) / (4.0 * np.cosh(0.5 * v) ** 2)
        tau = np.tanh(0.5 * v)
        tau.setflags(write=False)
        weight.setflags(write=False)
        return tau, weight


def _block_sums(kappa, x, tau, weight, derivative):
    """Σ_j weight_j exp(iκ x τ_j) (times iκτ_j) together with Σ |…|."""
    s = np.empty(x.shape, dtype=complex)
    r = np.empty(x.shape, dtype=float)
    wt = weight * (1j * kappa * tau) if derivative else weight
    aw = np.abs(wt)
    rows = max(1, _BLOCK // max(1, tau.size))
    for i in range(0, x.size, rows):
        ph = np.exp((1j * kappa) * np.multiply.outer(x[i : i + rows], tau))
        s[i : i + rows] = ph @ wt
        r[i : i + rows] = np.abs(ph) @ aw
    return s, r


def _mode_contour(kappa, x, quad, derivative):
    tol = min(quad.rel_tol, quad.abs_tol)
    x_max = float(x.max()) if x.size else 0.0
    # node sets depend on x only through a power-of-two bucket of x_max
    bucket = 2.0 ** math.ceil(math.log2(max(x_max, 1.0)))
    rule = _ContourRule.build(kappa, 0.01 * tol, bucket)
    coarse = 2.0 * rule.step
    scale = np.exp(rule.log_scale)
    ref = 2.0 * kappa * (kappa if derivative else 1.0)
    tail = 0.01 * tol * ref

    tau, weight = rule.nodes(0, coarse)
    s, r = _block_sums(kappa, x, tau, weight, derivative)
    total, mag = s * coarse, r * coarse
    err = np.full(x.shape, np.inf)
    for level in range(1, int(quad.max_subdivisions) + 1):
        h = coarse / 2**level
        tau, weight = rule.nodes(level, coarse)
        s, r = _block_sums(kappa, x, tau, weight, derivative)
        new = 0.5 * total + h * s
        mag = 0.5 * mag + h * r
        diff = np.abs(new - total)
        total = new
        # geometric convergence: the error of the finer level is about the
        # square of the relative change, unless the change is still large
        rel = diff / np.maximum(mag, np.finfo(float).tiny)
        trunc = np.where(rel < 1e-3, 10.0 * diff * rel, diff) * scale
        floor = 16.0 * _EPS * mag * scale
        # the range was cut where the tail falls below 0.01 tol
        err = trunc + floor + tail
        value = 1j * scale * total
        target = np.maximum(quad.rel_tol * np.abs(value), quad.abs_tol * ref)
        if np.all(err <= target):
            return value, err
        if np.all((err <= target) | (trunc <= floor)):
            # remaining points are limited by cancellation; refining cannot help
            break
    raise QuadratureNonConvergence(
        f"mode quadrature at kappa={kappa:g} did not converge",
        float(np.max(err / (ref + 0.0))),
    )


# --------------------------------------------------------------------------
# direct adaptive Gauss-Kronrod route

# Gauss-Kronrod 7-15 abscissae and weights
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_GK_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_GK_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_W = np.zeros(15)
_G_W[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, a, b):
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    fx = f(c + h * _GK_X)
    k = h * (fx @ _GK_W)
    g = h * (fx @ _G_W)
    return k, abs(k - g)


def _integrate_gk(f, panels, tol, max_depth):
    heap, total, err = [], 0.0 + 0.0j, 0.0
    for a, b in zip(panels[:-1], panels[1:]):
        k, e = _gk15(f, a, b)
        total += k
        err += e
        heapq.heappush(heap, (-e, a, b, k, 0))
    while heap and err > tol:
        neg_e, a, b, k, depth = heapq.heappop(heap)
        if depth >= max_depth:
            # unresolvable endpoint oscillation; its bound stays in err
            continue
        m = 0.5 * (a + b)
        k1, e1 = _gk15(f, a, m)
        k2, e2 = _gk15(f, m, b)
        total += k1 + k2 - k
        err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, a, m, k1, depth + 1))
        heapq.heappush(heap, (-e2, m, b, k2, depth + 1))
    return total, err


def _mode_direct(kappa, x, quad, derivative):
    y = 0.5 / kappa
    if math.pi * y > 600.0:
        # the real-axis integral cancels to ~exp(-pi y); no precision left
        raise QuadratureNonConvergence(f"direct quadrature cannot resolve kappa={kappa:g}")
    pref = mode_prefactor(kappa)
    ref = 2.0 * kappa * (kappa if derivative else 1.0)
    tol = quad.abs_tol * ref / abs(pref)
    out = np.empty(x.shape, dtype=complex)
    err = np.empty(x.shape, dtype=float)
    for i, xi in enumerate(x.flat):
        def f(s, xi=xi):
            with np.errstate(divide="ignore", invalid="ignore"):
                ph = np.exp(1j * kappa * xi * (2.0 * s - 1.0) + 1j * y * np.log(s / (1.0 - s)))
            return ph * (1j * kappa * (2.0 * s - 1.0)) if derivative else ph

        n_panels = 1 + int(math.ceil(kappa * xi / math.pi))
        panels = np.linspace(0.0, 1.0, n_panels + 1)
        val, e = _integrate_gk(f, panels, tol, int(quad.max_subdivisions))
        out.flat[i] = pref * val
        err.flat[i] = abs(pref) * e
    target = np.maximum(quad.rel_tol * np.abs(out), quad.abs_tol * ref)
    if np.any(err > target):
        raise QuadratureNonConvergence(
            f"direct quadrature at kappa={kappa:g} did not converge",
            float(np.max(err / ref)),
        )
    return out, err


def _evaluate(kappa, x, quad, derivative):
    k = _as_kappa(kappa)
    xa = _as_radius(x)
    quad = DEFAULT_QUAD if quad is None else quad
    flat = np.ascontiguousarray(xa.ravel())
    if quad.endpoint_transform == "none":
        v, e = _mode_direct(k, flat, quad, derivative)
    else:
        v, e = _mode_contour(k, flat, quad, derivative)
    return v.reshape(xa.shape), e.reshape(xa.shape)


def _finish(values, errors, shape_source, return_error):
    if np.ndim(shape_source) == 0:
        values, errors = complex(values), float(errors)
    return (values, errors) if return_error else values


def whittaker_mode(kappa, x, quad: QuadratureSpec | None = None, *, return_error=False):
    """Evaluate the continuum mode w_κ(x, 0).

    Parameters
    ----------
    kappa : float or Momentum
        Dimensionless momentum, at least ``1e-3``.
    x : float or array_like
        Dimensionless radius ``2 r / a0``, non-negative.
    quad : QuadratureSpec, optional
        Tolerances; :data:`DEFAULT_QUAD` if omitted.
    return_error : bool
        Also return the absolute error estimate of each value.

    Returns
    -------
    complex or numpy.ndarray
        Mode values, purely imaginary up to the quadrature error.

    Raises
    ------
    DomainError
        For ``x < 0`` or ``kappa < 1e-3``.
    QuadratureNonConvergence
        If the refinement budget is exhausted.
    """
    v, e = _evaluate(kappa, x, quad, derivative=False)
    return _finish(v, e, x, return_error)


def whittaker_mode_derivative(kappa, x, quad: QuadratureSpec | None = None, *, return_error=False):
    """Evaluate ∂w_κ/∂x by differentiating under the integral sign.

    Multiply by ``2 / a0`` to obtain the radial derivative.
    """
    v, e = _evaluate(kappa, x, quad, derivative=True)
    return _finish(v, e, x, return_error)


def whittaker_mode_time(kappa, x, t, quad: QuadratureSpec | None = None):
    """Time-dependent mode w_κ(x, 0) exp(-i ω₀ κ² t) with ``t`` in fs."""
    k = _as_kappa(kappa)
    return whittaker_mode(k, x, quad) * np.exp(-1j * CONSTANTS.omega0 * k * k * t)


def asymptotic_mode(kappa, x):
    """Large-radius form exp(iκx) exp(i ln(x) / 2κ) / x.

    Only valid for ``x >= 100 max(1, 1/κ)``; smaller radii raise
    :class:`DomainError`.
    """
    k = _as_kappa(kappa)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 100.0 * max(1.0, 1.0 / k)):
        raise DomainError("asymptotic form requested below its validity guard")
    out = np.exp(1j * k * xa + 0.5j * np.log(xa) / k) / xa
    return complex(out) if out.ndim == 0 else out


def mode_matrix(kappas, x, quad: QuadratureSpec | None = None, *, derivative=False, threads: int = 1):
    """Modes (or their x-derivatives) for several momenta on a common grid.

    Returns an array of shape ``(len(kappas), len(x))``.  Rows are
    independent, so the result does not depend on ``threads``.
    """
    kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    fn = whittaker_mode_derivative if derivative else whittaker_mode

    def row(k):
        return fn(k, x, quad)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as ex:
            rows = list(ex.map(row, kappas))
    else:
        rows = [row(k) for k in kappas]
    return np.vstack(rows) if rows else np.empty((0, x.size), dtype=complex)
