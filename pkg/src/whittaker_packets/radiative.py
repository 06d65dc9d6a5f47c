"""Radiative decay of a continuum packet into hydrogen bound states.

First-order perturbation theory in the dipole approximation (velocity
form).  In atomic units the probability of ending in ``(n, l=1, m)`` with
one photon emitted by time ``t`` is

    P_nm(t) = A_m / (16 pi**3 c**3) * integral_0^omega_cut omega |B_n(omega, t)|**2 domega,

    B_n(omega, t) = sum_j c_j M_n(kappa_j) T(omega + E_n - 2 kappa_j**2, t),

with ``c_j`` the packet weights, ``M_n`` the radial matrix element of the
radial derivative, ``T`` the first-order time kernel and ``A_m`` the
solid-angle factor ``32 pi**2 / 9`` (the same for every ``m``).  The
``1/(4 pi)`` of the s-wave angular part is folded into ``A_m`` through the
prefactor.  Level probabilities ``P_n`` sum over ``m``.

The photon-frequency integral diverges logarithmically without a cutoff.
The cutoff is placed 50 sinc lobes of the closed-form lifetime above the
top of the resonance band and kept fixed in time, so that ``P(0) = 0`` and
the early growth is quadratic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .constants import CONSTANTS
from .errors import DomainError
from .packet import PacketParams, WhittakerPacket, get_packet
from .specfun import QuadratureSpec, _as_kappa, whittaker_mode_derivative

__all__ = [
    "BoundState",
    "DecayTable",
    "TransitionKernelSample",
    "bound_radial",
    "cutoff_radius",
    "radial_matrix_element",
    "time_kernel",
    "angular_factor",
    "angular_factor_quadrature",
    "DecayModel",
    "get_decay_model",
    "decay_probability",
    "total_decay",
    "average_rate",
    "decay_mesh",
]

#: speed of light in atomic units
C_AU = 1.0 / CONSTANTS.fine_structure
ANGULAR_FACTOR = 32.0 * math.pi**2 / 9.0
N_CAP = 60
CUTOFF_LOBES = 50


def _fs_to_au(t):
    return np.asarray(t, dtype=float) / CONSTANTS.atomic_time


@dataclass(frozen=True)
class BoundState:
    """Hydrogen bound state with l = 1.

    Attributes
    ----------
    n : int
        Principal quantum number, at least 2.
    m : int
        Magnetic quantum number in {-1, 0, 1}.
    """

    n: int
    m: int = 0
    l: int = 1

    def __post_init__(self):
        if int(self.n) < 2:
            raise DomainError("l = 1 requires n >= 2")
        if self.m not in (-1, 0, 1):
            raise DomainError("m must be -1, 0 or 1")
        if self.l != 1:
            raise DomainError("only l = 1 states are reachable in the dipole approximation")

    @property
    def energy(self) -> float:
        """Energy in eV."""
        return -CONSTANTS.hartree / (2.0 * self.n**2)

    def radial(self, r):
        return bound_radial(self.n, r)


def bound_radial(n: int, r):
    """Hydrogen radial function R_{n1}(r) in a0**-1.5, ``r`` in a0."""
    n = int(n)
    if n < 2:
        raise DomainError("l = 1 requires n >= 2")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise DomainError("r must be non-negative")
    rho = 2.0 * r / n
    log_norm = 0.5 * (3.0 * math.log(2.0 / n) + gammaln(n - 1) - math.log(2.0 * n) - gammaln(n + 2))
    out = math.exp(log_norm) * np.exp(-0.5 * rho) * rho * eval_genlaguerre(n - 2, 3, rho)
    return float(out) if out.ndim == 0 else out


def cutoff_radius(n: int, tail: float = 1e-10) -> float:
    """Radius beyond which ∫ r² |R_{n1}| dr holds less than ``tail`` of the total."""
    r = np.linspace(0.0, n * (2.0 * n + 80.0), 200 * n + 2000)
    f = r * r * np.abs(bound_radial(n, r))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(r))])
    rest = cum[-1] - cum
    return float(r[np.flatnonzero(rest > tail * cum[-1])[-1] + 1])


def _radial_nodes(r_max: float, kappa_max: float, order: int = 16):
    width = min(math.pi / (2.0 * kappa_max), 2.0)
    panels = max(8, int(math.ceil(r_max / width)))
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, r_max, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * t).ravel(), (half[:, None] * w).ravel()


def radial_matrix_element(n: int, kappa, quad: QuadratureSpec | None = None, r_cut: float | None = None) -> complex:
    """M_n(κ) = ∫₀^{R_cut} r² R_{n1}(r) ∂w_κ(2r)/∂r dr in atomic units.

    The radial derivative is ``2 ∂w/∂x``; ``R_cut`` defaults to
    :func:`cutoff_radius`.
    """
    k = _as_kappa(kappa)
    r_cut = cutoff_radius(n) if r_cut is None else float(r_cut)
    r, w = _radial_nodes(r_cut, k)
    dw = 2.0 * whittaker_mode_derivative(k, 2.0 * r, quad)
    return complex(np.sum(w * r * r * bound_radial(n, r) * dw))


@dataclass(frozen=True)
class TransitionKernelSample:
    """Matrix element of one mode with its resonance data.

    Attributes
    ----------
    kappa : float
    n : int
    matrix_element : complex
        M_n(κ), atomic units.
    """

    kappa: float
    n: int
    matrix_element: complex

    def detuning_at(self, omega_k: float) -> float:
        """Δ = ω_k + ω_n − ω₀κ² in fs⁻¹ for photon frequency ``omega_k`` [fs⁻¹]."""
        omega_n = -CONSTANTS.hartree / (2.0 * self.n**2) / CONSTANTS.hbar
        return omega_k + omega_n - CONSTANTS.omega0 * self.kappa**2


def time_kernel(detuning, t):
    """First-order kernel T(Δ, t) = (e^{iΔt} − 1)/(iΔ).

    Evaluated as ``t e^{iΔt/2} sinc(Δt/2)``, which is exact and smooth
    through Δ = 0 where T = t.  Units follow the arguments (fs⁻¹, fs).
    """
    d = np.asarray(detuning, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("t must be non-negative")
    ph = d * t
    out = t * np.exp(0.5j * ph) * np.sinc(ph / (2.0 * math.pi))
    return complex(out) if out.ndim == 0 else out


def _y1m(m, theta, phi):
    if m == 0:
        return math.sqrt(3.0 / (4.0 * math.pi)) * np.cos(theta) + 0j * phi
    return -m * math.sqrt(3.0 / (8.0 * math.pi)) * np.sin(theta) * np.exp(1j * m * phi)


def angular_factor(m: int = 0) -> float:
    """Closed form of ∫dΩ_k |∫dΩ_x (k̂ × x̂) Y*_{1m}(x̂)|² = 32π²/9."""
    if m not in (-1, 0, 1):
        raise DomainError("m must be -1, 0 or 1")
    return ANGULAR_FACTOR


def angular_factor_quadrature(m: int = 0, n_theta: int = 24, n_phi: int = 48) -> float:
    """Brute-force solid-angle quadrature of the angular factor."""
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(ct)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    w = np.outer(wt, np.full(n_phi, 2.0 * math.pi / n_phi))
    unit = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    y = np.conj(_y1m(m, th, ph))
    total = 0.0
    for i in range(n_theta):
        for j in range(n_phi):
            # inner x-integral for this photon direction
            cross = np.cross(unit[i, j], unit)
            v = np.einsum("ab,abc->c", w * y, cross)
            total += w[i, j] * float(np.sum(np.abs(v) ** 2))
    return total


@dataclass(frozen=True)
class DecayTable:
    """Decay probabilities on a time mesh.

    Attributes
    ----------
    params : PacketParams
    times : numpy.ndarray
        fs.
    per_n : dict
        n -> P_n(t), level probabilities (summed over m unless ``m`` is set).
    total : numpy.ndarray
        Σ_n P_n(t).
    n_max_used : int
    m : int or None
        Magnetic substate when a single one was requested.
    """

    params: PacketParams
    times: np.ndarray = field(repr=False)
    per_n: dict = field(repr=False)
    total: np.ndarray = field(repr=False)
    n_max_used: int
    m: int | None = None


class DecayModel:
    """Matrix elements and photon-frequency quadrature for one packet.

    Parameters
    ----------
    params : PacketParams
    quad : QuadratureSpec, optional
    packet : WhittakerPacket, optional
        Reused when given.
    cutoff_lobes : float
        Photon cutoff above the band, in sinc lobes ``2π/Δt_ref`` of the
        closed-form lifetime.
    order, radial_order : int
        Gauss-Legendre points per photon-frequency and per radial panel.
    """

    def __init__(
        self,
        params: PacketParams,
        quad: QuadratureSpec | None = None,
        *,
        packet: WhittakerPacket | None = None,
        cutoff_lobes: float = CUTOFF_LOBES,
        order: int = 16,
        radial_order: int = 8,
    ):
        self.params = params
        self.quad = quad
        self.packet = packet if packet is not None else get_packet(params, quad)
        self.order = order
        self.radial_order = radial_order
        kap = self.packet.kappa
        self.eps = 2.0 * kap**2  # mode energies, hartree
        from .observables import predicted_lifetime

        self.t_ref = float(_fs_to_au(predicted_lifetime(params.energy_E, params.spread_dE)))
        self.nu_cut = float(self.eps.max()) + cutoff_lobes * 2.0 * math.pi / self.t_ref
        self._r = np.empty(0)
        self._w = np.empty(0)
        self._r_end = 0.0
        self._dtab = np.empty((kap.size, 0), dtype=complex)
        self._elements: dict[int, np.ndarray] = {}

    # -- matrix elements -------------------------------------------------
    def _extend_radial(self, r_cut: float) -> None:
        # fixed-width panels appended on demand so earlier columns are reused
        if self._r_end >= r_cut:
            return
        width = min(math.pi / (2.0 * float(self.packet.kappa.max())), 2.0)
        target = max(r_cut, 1.25 * self._r_end)
        panels = int(math.ceil((target - self._r_end) / width))
        t, w = np.polynomial.legendre.leggauss(self.radial_order)
        edges = self._r_end + width * np.arange(panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        r = (mid[:, None] + 0.5 * width * t).ravel()
        tab = 2.0 * self.packet.table(r, derivative=True)
        self.packet.drop_tables()
        self._r = np.concatenate([self._r, r])
        self._w = np.concatenate([self._w, np.tile(0.5 * width * w, panels)])
        self._dtab = np.concatenate([self._dtab, tab], axis=1)
        self._r_end = float(edges[-1])

    def matrix_elements(self, n: int) -> np.ndarray:
        """M_n(κ_j) at every packet node (purely imaginary)."""
        if n < 2:
            raise DomainError("l = 1 requires n >= 2")
        m = self._elements.get(n)
        if m is None:
            r_cut = cutoff_radius(n)
            self._extend_radial(r_cut)
            r = self._r
            m = self._dtab @ (self._w * r * r * bound_radial(n, r))
            self._elements[n] = m
        return m

    # -- photon integral -------------------------------------------------
    def _nu_grid(self, t: float, n_values):
        lo = -0.5 / min(n_values) ** 2
        width = self.nu_cut - lo
        panel = width / 64.0 if t == 0.0 else min(math.pi / t, width / 64.0)
        breaks = sorted({-0.5 / n**2 for n in n_values} | {lo, self.nu_cut})
        edges = [lo]
        for a, b in zip(breaks[:-1], breaks[1:]):
            k = max(1, int(math.ceil((b - a) / panel)))
            edges.extend(np.linspace(a, b, k + 1)[1:].tolist())
        edges = np.array(edges)
        t_, w_ = np.polynomial.legendre.leggauss(self.order)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        return (mid[:, None] + half[:, None] * t_).ravel(), (half[:, None] * w_).ravel()

    def _amplitudes(self, t: float, n_values, nu):
        det = nu[:, None] - self.eps[None, :]
        kern = t * np.exp(0.5j * det * t) * np.sinc(det * t / (2.0 * math.pi))
        f = np.column_stack([self.packet.coefficients * self.matrix_elements(n) for n in n_values])
        return kern @ f

    def spectrum(self, n: int, t_fs: float, m: int | None = None):
        """Photon-frequency integrand for level ``n`` at time ``t_fs``.

        Returns
        -------
        photon_energy_ev, density : numpy.ndarray
            ``dP_n/dω`` sampled on the quadrature nodes (ω in hartree).
        """
        t = float(_fs_to_au(t_fs))
        nu, _ = self._nu_grid(t, [n])
        nu = nu[nu >= -0.5 / n**2]
        b = self._amplitudes(t, [n], nu)[:, 0]
        omega = nu + 0.5 / n**2
        dens = self._prefactor(m) * omega * np.abs(b) ** 2
        return omega * CONSTANTS.hartree, dens

    @staticmethod
    def _prefactor(m: int | None) -> float:
        if m is None:
            return 3.0 * ANGULAR_FACTOR / (16.0 * math.pi**3 * C_AU**3)
        return angular_factor_quadrature(m) / (16.0 * math.pi**3 * C_AU**3)

    def probabilities(self, n_values, times_fs, m: int | None = None) -> np.ndarray:
        """P_n(t), shape ``(len(times), len(n_values))``."""
        n_values = [int(n) for n in n_values]
        if any(n < 2 for n in n_values):
            raise DomainError("l = 1 requires n >= 2")
        pref = self._prefactor(m)
        out = np.zeros((len(times_fs), len(n_values)))
        for i, t in enumerate(_fs_to_au(times_fs)):
            if t == 0.0:
                continue
            nu, w = self._nu_grid(float(t), n_values)
            b2 = np.abs(self._amplitudes(float(t), n_values, nu)) ** 2
            for j, n in enumerate(n_values):
                omega = nu + 0.5 / n**2
                ok = omega >= 0.0
                out[i, j] = pref * np.sum(w[ok] * omega[ok] * b2[ok, j])
        return out

    def table(self, times_fs, m: int | None = None, rel_cut: float = 1e-3, n_cap: int = N_CAP) -> DecayTable:
        """Level probabilities until the last level adds < ``rel_cut`` of the total.

        The cutoff is judged at the last time of ``times_fs``.
        """
        times_fs = np.asarray(times_fs, dtype=float)
        t_end = times_fs[-1:]
        n_values, running = [], 0.0
        n = 2
        while n <= n_cap:
            block = list(range(n, min(n + 4, n_cap + 1)))
            p = self.probabilities(block, t_end, m)[0]
            stop = False
            for nn, pn in zip(block, p):
                n_values.append(nn)
                running += pn
                if running > 0.0 and pn < rel_cut * running:
                    stop = True
                    break
            if stop:
                break
            n = block[-1] + 1
        probs = self.probabilities(n_values, times_fs, m)
        per_n = {nn: probs[:, j] for j, nn in enumerate(n_values)}
        total = probs.sum(axis=1)
        return DecayTable(self.params, times_fs, per_n, total, n_values[-1], m)


@lru_cache(maxsize=4)
def _cached_model(params: PacketParams, quad: QuadratureSpec | None) -> DecayModel:
    return DecayModel(params, quad)


def get_decay_model(params: PacketParams, quad: QuadratureSpec | None = None) -> DecayModel:
    """Shared :class:`DecayModel` so matrix elements are computed once per packet."""
    return _cached_model(params, quad)


def decay_mesh(t_max: float, n_points: int = 64) -> np.ndarray:
    """Zero followed by a geometric then a linear stretch up to ``t_max``."""
    n_geo = n_points // 4
    geo = np.geomspace(1e-4 * t_max, 0.1 * t_max, n_geo)
    lin = np.linspace(0.1 * t_max, t_max, n_points - n_geo)[1:]
    return np.concatenate([[0.0], geo, lin])


def decay_probability(params: PacketParams, n: int, t, quad: QuadratureSpec | None = None, *, m: int | None = None, model: DecayModel | None = None):
    """P_n(t) for one level (summed over m, or a single substate ``m``)."""
    model = model if model is not None else get_decay_model(params, quad)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0.0):
        raise DomainError("t must be non-negative")
    p = model.probabilities([n], t, m)[:, 0]
    return float(p[0]) if p.size == 1 else p


def total_decay(params: PacketParams, t, quad: QuadratureSpec | None = None, *, model: DecayModel | None = None) -> DecayTable:
    """Decay table over all contributing levels at the times ``t`` [fs]."""
    model = model if model is not None else get_decay_model(params, quad)
    return model.table(np.atleast_1d(np.asarray(t, dtype=float)))


def average_rate(params: PacketParams, quad: QuadratureSpec | None = None, *, model: DecayModel | None = None, lifetime: float | None = None) -> dict:
    """Average decay rate Γ̃ = P(2Δt) / (2Δt).

    Returns
    -------
    dict
        ``gamma_hz``, ``delta_t_fs``, ``probability`` and ``n_max``.
    """
    from .observables import diffraction_lifetime

    model = model if model is not None else get_decay_model(params, quad)
    dt = diffraction_lifetime(params, packet=model.packet) if lifetime is None else float(lifetime)
    tab = model.table(np.array([2.0 * dt]))
    p = float(tab.total[-1])
    return {
        "gamma_hz": p / (2.0 * dt * 1e-15),
        "delta_t_fs": dt,
        "probability": p,
        "n_max": tab.n_max_used,
    }
