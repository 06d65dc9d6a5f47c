"""Gaussian superpositions of continuum modes.

The packet is

    Psi(r, t) = N * integral exp(-(kappa - mu)**2 / (2 sigma**2)) w_kappa(x, t) dkappa

over the whole real line, with ``x = 2 r / a0``.  Since ``w_{-kappa} = -w_kappa``
identically, the negative half folds onto ``kappa > 0`` with the weight
``G(kappa) - G(-kappa)``; the fold is negligible for narrow packets and
exact for broad ones.

The kappa integral runs over the window ``mu +- W sigma`` (clipped at
``kappa = 1e-3``) with a fixed Gauss-Legendre rule.  ``N`` follows from the
continuum orthogonality ``integral u_k u_k' dx = (2 pi / C0(k)**2) delta(k - k')``
of ``u = x w``, where ``C0**2 = 2 pi y / (1 - exp(-2 pi y))``, so no radial
cutoff enters the normalization.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .constants import CONSTANTS, KAPPA_MIN
from .errors import DomainError
from .specfun import DEFAULT_QUAD, QuadratureSpec, mode_matrix

__all__ = [
    "PacketParams",
    "RadialGrid",
    "RadialField",
    "WhittakerPacket",
    "map_energy_params",
    "build_packet",
    "gaussian_dynamics",
    "norm_radius",
    "get_packet",
]

DEFAULT_WINDOW = 5.0
DEFAULT_NODES = 129


@dataclass(frozen=True)
class PacketParams:
    """Parameters of a Gaussian continuum packet.

    Attributes
    ----------
    energy_E : float
        Mean energy in eV.
    spread_dE : float
        Energy spread in eV.
    mu : float
        Mean momentum, ``E = 2 E_h mu**2``.
    sigma : float
        Momentum spread, ``dE = 2 E_h sigma**2``.
    norm_N : float or None
        Normalization in a0**-1.5, filled in once a packet is built.
    """

    energy_E: float
    spread_dE: float
    mu: float
    sigma: float
    norm_N: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def map_energy_params(E: float, dE: float, *, allow_broad: bool = False) -> PacketParams:
    """Convert (E, ΔE) in eV into packet parameters.

    ``mu = sqrt(E / 2E_h)`` and ``sigma = sqrt(dE / 2E_h)``: the spread is
    mapped with the same quadratic energy law as the mean.

    Parameters
    ----------
    E, dE : float
        Mean energy and spread in eV.
    allow_broad : bool
        Accept ``sigma >= mu / 3``.  The packet then draws significant
        weight from the folded half of the momentum line.

    Raises
    ------
    DomainError
        If ``E <= 0``, ``dE <= 0`` or, unless ``allow_broad``, ``sigma >= mu/3``.
    """
    E, dE = float(E), float(dE)
    if not (math.isfinite(E) and E > 0.0):
        raise DomainError(f"energy must be positive, got {E!r}")
    if not (math.isfinite(dE) and dE > 0.0):
        raise DomainError(f"energy spread must be positive, got {dE!r}")
    two_eh = 2.0 * CONSTANTS.hartree
    mu = math.sqrt(E / two_eh)
    sigma = math.sqrt(dE / two_eh)
    if sigma >= mu / 3.0 and not allow_broad:
        raise DomainError(
            f"spread too large: sigma={sigma:.4g} >= mu/3={mu / 3:.4g} "
            "(pass allow_broad=True to fold the momentum line)"
        )
    return PacketParams(E, dE, mu, sigma)


def gaussian_dynamics(params: PacketParams, t):
    """Centre and width (x units) of the free Gaussian approximation.

    ``mu_x = 2 mu omega0 t`` and ``sigma_x**2 = 1/sigma**2 + 4 sigma**2 omega0**2 t**2``
    with ``t`` in fs.
    """
    w = CONSTANTS.omega0
    t = np.asarray(t, dtype=float)
    mu_x = 2.0 * params.mu * w * t
    sigma_x = np.sqrt(1.0 / params.sigma**2 + 4.0 * params.sigma**2 * w**2 * t**2)
    if t.ndim == 0:
        return float(mu_x), float(sigma_x)
    return mu_x, sigma_x


def norm_radius(params: PacketParams) -> float:
    """Radius in a0 that holds the packet at t = 0: max(5 σ_x(0) a0/2, 50 a0)."""
    return max(2.5 / params.sigma, 50.0)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial sample grid.

    Attributes
    ----------
    r_values : numpy.ndarray
        Radii in a0, strictly increasing, first value >= 0.
    r_max : float
        Last radius in a0.
    points_per_wavelength : int
        Samples per node spacing ``pi a0 / (2 mu)``.
    """

    r_values: np.ndarray = field(repr=False)
    r_max: float
    points_per_wavelength: int

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise DomainError("grid needs at least two radii")
        if r[0] < 0.0 or np.any(np.diff(r) <= 0.0):
            raise DomainError("radii must be non-negative and strictly increasing")
        if self.points_per_wavelength < 20:
            raise DomainError("points_per_wavelength must be at least 20")
        r.setflags(write=False)
        object.__setattr__(self, "r_values", r)

    @classmethod
    def for_params(
        cls,
        params: PacketParams,
        r_max: float | None = None,
        points_per_wavelength: int = 20,
        r_min: float = 0.0,
    ) -> "RadialGrid":
        """Grid resolving the oscillation of ``params`` out to ``r_max``.

        ``r_max`` defaults to :func:`norm_radius`.
        """
        if points_per_wavelength < 20:
            raise DomainError("points_per_wavelength must be at least 20")
        r_max = norm_radius(params) if r_max is None else float(r_max)
        dr = (math.pi / (2.0 * params.mu)) / points_per_wavelength
        n = int(math.ceil((r_max - r_min) / dr)) + 1
        r = np.linspace(r_min, r_min + (n - 1) * dr, n)
        return cls(r, float(r[-1]), int(points_per_wavelength))

    def __len__(self) -> int:
        return self.r_values.size

    def check_resolves(self, params: PacketParams) -> None:
        """Raise DomainError if the spacing is too coarse for ``params``."""
        limit = (math.pi / (2.0 * params.mu)) / self.points_per_wavelength
        if np.max(np.diff(self.r_values)) > limit * (1.0 + 1e-9):
            raise DomainError("grid spacing exceeds the resolution bound")


@dataclass(frozen=True)
class RadialField:
    """Complex packet samples Ψ(r, t) on a radial grid.

    Attributes
    ----------
    grid : RadialGrid
    time : float
        Time in fs.
    amplitudes : numpy.ndarray
        Complex values in a0**-1.5.
    params : PacketParams or None
        Parameters echoed into serialised output.
    """

    grid: RadialGrid
    time: float
    amplitudes: np.ndarray = field(repr=False)
    params: PacketParams | None = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != self.grid.r_values.shape:
            raise DomainError("amplitude count does not match the grid")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r_values

    @property
    def density(self) -> np.ndarray:
        """Radial probability density r² |Ψ|²."""
        return self.r**2 * np.abs(self.amplitudes) ** 2

    def _header(self) -> dict:
        head = {"time_fs": self.time}
        if self.params is not None:
            head.update(self.params.as_dict())
        return head

    def to_csv(self, path) -> Path:
        """Write columns r_a0, re_psi, im_psi, density with ``#`` parameter lines."""
        from .io import write_csv

        cols = {
            "r_a0": self.r,
            "re_psi": self.amplitudes.real,
            "im_psi": self.amplitudes.imag,
            "density": self.density,
        }
        return write_csv(path, cols, header=self._header())

    def to_json(self, path) -> Path:
        from .io import write_json

        payload = {
            "header": self._header(),
            "r_a0": self.r,
            "re_psi": self.amplitudes.real,
            "im_psi": self.amplitudes.imag,
        }
        return write_json(path, payload)


def _coulomb_c0_sq(kappa):
    # C0(eta)**2 at eta = -1/(2 kappa)
    y = 0.5 / np.asarray(kappa, dtype=float)
    return 2.0 * np.pi * y / -np.expm1(-2.0 * np.pi * y)


class WhittakerPacket:
    """Discretised packet: momentum nodes, weights and cached mode tables.

    Parameters
    ----------
    params : PacketParams
    quad : QuadratureSpec, optional
        Tolerances for the mode evaluations.
    window : float
        Half width of the momentum window in units of sigma.
    n_kappa : int
        Gauss-Legendre nodes across the window.
    threads : int
        Worker threads for mode tables; results do not depend on it.
    """

    def __init__(
        self,
        params: PacketParams,
        quad: QuadratureSpec | None = None,
        *,
        window: float = DEFAULT_WINDOW,
        n_kappa: int = DEFAULT_NODES,
        threads: int = 1,
    ):
        self.quad = DEFAULT_QUAD if quad is None else quad
        self.window = float(window)
        self.threads = int(threads)
        mu, sigma = params.mu, params.sigma
        lo = max(mu - window * sigma, KAPPA_MIN)
        hi = mu + window * sigma
        t, w = np.polynomial.legendre.leggauss(int(n_kappa))
        self.kappa = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        self.folded = mu - window * sigma < KAPPA_MIN
        g = np.exp(-0.5 * ((self.kappa - mu) / sigma) ** 2)
        g -= np.exp(-0.5 * ((self.kappa + mu) / sigma) ** 2)
        self.weights = 0.5 * (hi - lo) * w * g
        # ∫|Ψ|² r² dr = N² (1/8) ∫ G² 2π / C0² dκ  (r in a0, x = 2r)
        norm_sq = np.sum(0.5 * (hi - lo) * w * g * g * 2.0 * np.pi / _coulomb_c0_sq(self.kappa)) / 8.0
        self.norm = 1.0 / math.sqrt(norm_sq)
        self.params = replace(params, norm_N=self.norm)
        self._tables: dict = {}

    @property
    def coefficients(self) -> np.ndarray:
        """Weights multiplying each mode at t = 0, normalization included."""
        return self.norm * self.weights

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * CONSTANTS.omega0 * self.kappa**2 * float(t))

    def table(self, r, derivative: bool = False) -> np.ndarray:
        """Mode values (or x-derivatives) at radii ``r`` [a0], cached."""
        r = np.ascontiguousarray(np.asarray(r, dtype=float))
        key = (hashlib.sha1(r.tobytes()).hexdigest(), r.size, derivative)
        tab = self._tables.get(key)
        if tab is None:
            tab = mode_matrix(self.kappa, 2.0 * r, self.quad, derivative=derivative, threads=self.threads)
            self._tables[key] = tab
        return tab

    def drop_tables(self) -> None:
        self._tables.clear()

    def amplitudes(self, r, t: float = 0.0) -> np.ndarray:
        """Ψ(r, t) in a0**-1.5."""
        return (self.coefficients * self.phases(t)) @ self.table(r)

    def amplitudes_many(self, r, times) -> np.ndarray:
        """Ψ at several times, shape ``(len(times), len(r))``."""
        c = self.coefficients[None, :] * np.exp(
            -1j * CONSTANTS.omega0 * np.multiply.outer(np.asarray(times, float), self.kappa**2)
        )
        return c @ self.table(r)

    def field(self, grid: RadialGrid, t: float = 0.0) -> RadialField:
        return RadialField(grid, float(t), self.amplitudes(grid.r_values, t), self.params)

    def norm_within(self, r_max: float, t: float = 0.0, panels: int | None = None) -> float:
        """∫₀^{r_max} |Ψ(r,t)|² r² dr by Gauss-Legendre panels."""
        r, w = gauss_panels(0.0, r_max, self.params.mu, panels)
        psi = self.amplitudes(r, t)
        return float(np.sum(w * r * r * np.abs(psi) ** 2))


def gauss_panels(a: float, b: float, mu: float, panels: int | None = None, order: int = 16):
    """Composite Gauss-Legendre nodes on [a, b], one panel per node spacing."""
    if panels is None:
        spacing = math.pi / (2.0 * mu)
        panels = max(4, int(math.ceil((b - a) / spacing)))
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return r, wt


@lru_cache(maxsize=8)
def _cached_packet(params, quad, window, n_kappa) -> WhittakerPacket:
    return WhittakerPacket(params, quad, window=window, n_kappa=n_kappa)


def get_packet(
    params: PacketParams,
    quad: QuadratureSpec | None = None,
    window: float = DEFAULT_WINDOW,
    n_kappa: int = DEFAULT_NODES,
    threads: int = 1,
) -> WhittakerPacket:
    """Memoised :class:`WhittakerPacket` constructor.

    ``threads`` only changes how tables are computed, so it is not part of
    the cache key.
    """
    pk = _cached_packet(params, quad, float(window), int(n_kappa))
    pk.threads = int(threads)
    return pk


def build_packet(
    params: PacketParams,
    grid: RadialGrid | None = None,
    t: float = 0.0,
    quad: QuadratureSpec | None = None,
    *,
    window: float = DEFAULT_WINDOW,
    n_kappa: int = DEFAULT_NODES,
    threads: int = 1,
) -> RadialField:
    """Sample the normalised packet on ``grid`` at time ``t`` [fs].

    The grid defaults to :meth:`RadialGrid.for_params`.  The returned field
    carries the parameters with ``norm_N`` filled in.
    """
    if grid is None:
        grid = RadialGrid.for_params(params)
    pk = get_packet(replace(params, norm_N=None), quad, window, n_kappa, threads)
    return pk.field(grid, t)
