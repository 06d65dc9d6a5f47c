"""Characterisation of packets: spatial spread, lifetime and nodes.

Conventions
-----------
Spatial spread ``delta_r``
    The upper envelope of ``|Im u|``, ``u = r Psi(r, 0)``, is sampled at the
    local maxima (parabolically refined) and treated as a distribution on
    ``r >= 0``; ``delta_r`` is its standard deviation.  A centred Gaussian
    ``A exp(-r**2 / 2 s**2)`` is also fitted and reported as ``fitted_sigma``.
Lifetime ``delta_t``
    The overlap ``O(t)`` over ``0 < r < 5 a0`` is fitted with
    ``exp(-t**2 / 2 s**2)``; ``fitted_sigma_t = s`` and ``delta_t`` is the
    standard deviation ``s sqrt(1 - 2/pi)`` of the fitted profile on ``t >= 0``.

Both widths are thus standard deviations of a non-negative profile on a
half line, the same notion applied to space and to time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, curve_fit

from .constants import CONSTANTS
from .errors import FitFailure, InsufficientPeaks, NodeLost
from .packet import (
    PacketParams,
    RadialField,
    RadialGrid,
    WhittakerPacket,
    gauss_panels,
    get_packet,
    norm_radius,
)
from .specfun import QuadratureSpec, mode_matrix

__all__ = [
    "EnvelopeFit",
    "OverlapSeries",
    "NodeTrack",
    "NodeLiftingCurve",
    "HALF_GAUSSIAN_STD",
    "extract_envelope",
    "spatial_spread",
    "overlap_series",
    "lifetime_mesh",
    "lifetime_series",
    "diffraction_lifetime",
    "predicted_lifetime",
    "predicted_spread",
    "free_overlap_series",
    "find_nodes",
    "node_lifting_curve",
]

#: standard deviation of exp(-t²/2) restricted to t >= 0
HALF_GAUSSIAN_STD = math.sqrt(1.0 - 2.0 / math.pi)
#: constants of the closed-form laws, a0 eV^1/2 and eV fs
SPREAD_CONSTANT = 2.471
LIFETIME_CONSTANT = 0.136
OVERLAP_RADIUS = 5.0
NODE_THRESHOLD = 0.1


def predicted_spread(dE: float) -> float:
    """Closed-form spread 2.471 a0 / sqrt(dE / eV), in a0."""
    return SPREAD_CONSTANT / math.sqrt(dE)


def predicted_lifetime(E: float, dE: float) -> float:
    """Closed-form lifetime 0.136 eV fs / sqrt(E dE), in fs."""
    return LIFETIME_CONSTANT / math.sqrt(E * dE)


# --------------------------------------------------------------------------
# envelope


@dataclass(frozen=True)
class EnvelopeFit:
    """Upper envelope of the t = 0 packet and its widths.

    Attributes
    ----------
    peak_positions : numpy.ndarray
        Radii of the envelope maxima in a0, increasing.
    peak_values : numpy.ndarray
        ``|Im(r Psi)|`` at the maxima.
    fitted_sigma : float
        Width ``s`` of the centred Gaussian fit, a0.
    fit_r2 : float
        Coefficient of determination of that fit, clipped to [0, 1].
    delta_r : float
        Standard deviation of the envelope on ``r >= 0``, a0.
    """

    peak_positions: np.ndarray = field(repr=False)
    peak_values: np.ndarray = field(repr=False)
    fitted_sigma: float
    fit_r2: float
    delta_r: float
    amplitude: float = float("nan")


def _local_maxima(v: np.ndarray):
    i = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1
    a, b, c = v[i - 1], v[i], v[i + 1]
    den = a - 2.0 * b + c
    off = np.where(den < 0.0, 0.5 * (a - c) / np.where(den < 0.0, den, -1.0), 0.0)
    peak = b - 0.25 * (a - c) * off
    return i, off, peak


def _r2(y, model) -> float:
    ss_res = float(np.sum((y - model) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def extract_envelope(fld: RadialField, *, min_peaks: int = 5, floor: float = 1e-10) -> EnvelopeFit:
    """Envelope of ``|Im(r Psi(r, 0))|`` with spread and Gaussian fit.

    Raises
    ------
    InsufficientPeaks
        If fewer than ``min_peaks`` maxima are found.
    """
    r = fld.r
    v = np.abs(r * fld.amplitudes.imag)
    idx, off, peak = _local_maxima(v)
    keep = peak > floor * (peak.max() if peak.size else 0.0)
    idx, off, peak = idx[keep], off[keep], peak[keep]
    if idx.size < min_peaks:
        raise InsufficientPeaks(f"found {idx.size} envelope maxima, need {min_peaks}")
    dr = np.diff(r)
    pos = r[idx] + off * np.where(off >= 0, dr[np.minimum(idx, dr.size - 1)], dr[idx - 1])

    m0 = np.trapezoid(peak, pos)
    m1 = np.trapezoid(peak * pos, pos) / m0
    m2 = np.trapezoid(peak * pos * pos, pos) / m0
    delta_r = math.sqrt(max(m2 - m1 * m1, 0.0))

    def model(x, a, s):
        return a * np.exp(-0.5 * (x / s) ** 2)

    try:
        (a, s), _ = curve_fit(model, pos, peak, p0=(peak.max(), delta_r / HALF_GAUSSIAN_STD), maxfev=5000)
        s = abs(s)
        r2 = _r2(peak, model(pos, a, s))
    except RuntimeError:
        a, s, r2 = float("nan"), float("nan"), 0.0
    return EnvelopeFit(pos, peak, float(s), float(r2), float(delta_r), float(a))


def spatial_spread(
    params: PacketParams,
    *,
    points_per_wavelength: int = 20,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
) -> EnvelopeFit:
    """Build the t = 0 packet on its default grid and extract the envelope.

    The grid extends to ``R_norm`` plus the Coulomb drift of the envelope
    (about one width), so the whole envelope is sampled.
    """
    pk = WhittakerPacket(params, quad, threads=threads)
    r_max = norm_radius(params) + 1.0 / params.sigma
    grid = RadialGrid.for_params(params, r_max=r_max, points_per_wavelength=points_per_wavelength)
    return extract_envelope(pk.field(grid, 0.0))


# --------------------------------------------------------------------------
# overlap


@dataclass(frozen=True)
class OverlapSeries:
    """Self-overlap O(t) of a packet.

    Attributes
    ----------
    times : numpy.ndarray
        Times in fs, starting at 0.
    values : numpy.ndarray
        O(t) normalised to 1 at t = 0.
    fitted_sigma_t : float
        Width ``s`` of the fitted ``exp(-t**2 / 2 s**2)``, fs.
    fit_r2 : float
        Coefficient of determination of the fit.
    delta_t : float
        Lifetime ``s sqrt(1 - 2/pi)``, fs.
    """

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    fitted_sigma_t: float
    fit_r2: float
    delta_t: float


def _overlap_values(pk: WhittakerPacket, times, r_max: float, free: bool = False) -> np.ndarray:
    r, w = gauss_panels(0.0, r_max, pk.params.mu, order=24)
    if free:
        x = 2.0 * r
        tab = 2j * np.sin(np.multiply.outer(pk.kappa, x)) / x[None, :]
        c = pk.coefficients[None, :] * np.exp(
            -1j * CONSTANTS.omega0 * np.multiply.outer(np.asarray(times, float), pk.kappa**2)
        )
        psi = c @ tab
        psi0 = pk.coefficients @ tab
    else:
        psi = pk.amplitudes_many(r, times)
        psi0 = pk.amplitudes(r, 0.0)
    wr = w * r * r * np.conj(psi0)
    ov = np.abs(psi @ wr) ** 2
    ref = float(np.sum(w * r * r * np.abs(psi0) ** 2)) ** 2
    return ov / ref


def _fit_overlap(times, values, *, check: bool = True) -> OverlapSeries:
    times = np.asarray(times, dtype=float)

    def model(t, s):
        return np.exp(-0.5 * (t / s) ** 2)

    below = np.flatnonzero(values < math.exp(-0.5))
    s0 = times[below[0]] if below.size else times[-1]
    try:
        (s,), _ = curve_fit(model, times, values, p0=(max(s0, times[1]),), maxfev=5000)
        s = abs(float(s))
        r2 = _r2(values, model(times, s))
    except RuntimeError:
        s, r2 = float("nan"), 0.0
    out = OverlapSeries(times, values, s, r2, s * HALF_GAUSSIAN_STD)
    if check and r2 < 0.95:
        raise FitFailure(f"Gaussian fit of the overlap has R^2 = {r2:.4f} < 0.95")
    return out


def overlap_series(
    params: PacketParams,
    times,
    *,
    packet: WhittakerPacket | None = None,
    r_max: float = OVERLAP_RADIUS,
    quad: QuadratureSpec | None = None,
    check: bool = True,
) -> OverlapSeries:
    """Overlap O(t) = |∫ Ψ*(r,0) Ψ(r,t) r² dr|² over 0 < r < r_max, normalised.

    Parameters
    ----------
    times : array_like
        Increasing times in fs with ``times[0] == 0``.
    check : bool
        Raise :class:`FitFailure` when the fit has ``R^2 < 0.95``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 3 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be increasing, start at 0 and hold at least 3 values")
    pk = packet if packet is not None else get_packet(params, quad)
    vals = _overlap_values(pk, times, r_max)
    vals[0] = 1.0
    return _fit_overlap(times, vals, check=check)


def lifetime_mesh(E: float, dE: float, n_points: int = 64, span: float = 5.0) -> np.ndarray:
    """Mesh of ``n_points`` times: zero, a geometric stretch, then a linear one.

    The mesh ends at ``span`` times the closed-form lifetime.
    """
    end = span * predicted_lifetime(E, dE)
    n_geo = n_points // 4
    geo = np.geomspace(1e-3 * end, 0.1 * end, n_geo)
    lin = np.linspace(0.1 * end, end, n_points - n_geo)[1:]
    return np.concatenate([[0.0], geo, lin])


def lifetime_series(
    params: PacketParams,
    *,
    packet: WhittakerPacket | None = None,
    quad: QuadratureSpec | None = None,
    n_points: int = 64,
    check: bool = True,
    max_extensions: int = 6,
) -> OverlapSeries:
    """Overlap on the adaptive mesh, extended until O drops below 1e-3."""
    pk = packet if packet is not None else get_packet(params, quad)
    span = 5.0
    for _ in range(max_extensions + 1):
        times = lifetime_mesh(params.energy_E, params.spread_dE, n_points, span)
        vals = _overlap_values(pk, times, OVERLAP_RADIUS)
        vals[0] = 1.0
        if vals[-1] < 1e-3:
            break
        span *= 1.5
    return _fit_overlap(times, vals, check=check)


def diffraction_lifetime(params: PacketParams, *, packet=None, quad=None) -> float:
    """Lifetime ``delta_t`` in fs (see module notes)."""
    return lifetime_series(params, packet=packet, quad=quad).delta_t


def free_overlap_series(params: PacketParams, times, *, packet: WhittakerPacket | None = None) -> OverlapSeries:
    """Overlap of the packet built with free sine modes ``2i sin(κx)/x``.

    Same momentum weights as the Coulomb packet; the modes agree at the
    origin, so the comparison isolates the effect of the Coulomb field.
    """
    pk = packet if packet is not None else get_packet(params)
    times = np.asarray(times, dtype=float)
    vals = _overlap_values(pk, times, OVERLAP_RADIUS, free=True)
    vals[0] = 1.0
    return _fit_overlap(times, vals, check=False)


# --------------------------------------------------------------------------
# nodes


@dataclass(frozen=True)
class NodeTrack:
    """Nodes of the radial density at one time.

    Attributes
    ----------
    time : float
        fs.
    node_positions : numpy.ndarray
        a0, increasing.
    min_density_at_nodes : numpy.ndarray
        ``r**2 |Psi|**2`` at each node.
    """

    time: float
    node_positions: np.ndarray = field(repr=False)
    min_density_at_nodes: np.ndarray = field(repr=False)


def _point_eval(pk: WhittakerPacket, r: float, t: float) -> complex:
    tab = mode_matrix(pk.kappa, [2.0 * r], pk.quad)
    return complex((pk.coefficients * pk.phases(t)) @ tab[:, 0])


def _density_minima(r, dens):
    """Parabolic minima of ``dens`` with flanking maxima ratios."""
    i = np.flatnonzero((dens[1:-1] < dens[:-2]) & (dens[1:-1] <= dens[2:])) + 1
    imax, _, pmax = _local_maxima(dens)
    out = []
    for j in i:
        a, b, c = dens[j - 1], dens[j], dens[j + 1]
        den = a - 2.0 * b + c
        off = 0.5 * (a - c) / den if den > 0 else 0.0
        val = max(b - 0.25 * (a - c) * off, 0.0)
        h = r[j + 1] - r[j] if off >= 0 else r[j] - r[j - 1]
        left = np.flatnonzero(imax < j)
        right = np.flatnonzero(imax > j)
        if left.size == 0 or right.size == 0:
            continue
        flank = 0.5 * (pmax[left[-1]] + pmax[right[0]])
        out.append((r[j] + off * h, val, val / flank if flank > 0 else np.inf))
    return out


def find_nodes(
    fld: RadialField,
    *,
    packet: WhittakerPacket | None = None,
    xtol: float = 1e-8,
    threshold: float = NODE_THRESHOLD,
) -> NodeTrack:
    """Nodes of the radial density.

    At t = 0 the field is purely imaginary and the nodes are the sign changes
    of ``Im Psi``, refined by bracketing root search to ``xtol`` a0.  The
    refinement evaluates the packet exactly when ``packet`` is given and a
    cubic interpolant of the samples otherwise.  At t > 0 a node is a local
    minimum of ``r**2 |Psi|**2`` below ``threshold`` times the mean of the
    two flanking maxima.
    """
    r = fld.r
    if fld.time == 0.0:
        s = fld.amplitudes.imag
        j = np.flatnonzero((s[:-1] * s[1:] < 0.0) & (r[:-1] > 0.0))
        if packet is not None:
            def f(x):
                return _point_eval(packet, x, 0.0).imag
        else:
            from scipy.interpolate import CubicSpline

            f = CubicSpline(r, s)
        pos = np.array([brentq(f, r[k], r[k + 1], xtol=xtol, rtol=4 * np.finfo(float).eps) for k in j])
        if packet is not None:
            psi = np.array([_point_eval(packet, p, 0.0) for p in pos])
        else:
            from scipy.interpolate import CubicSpline

            re = CubicSpline(r, fld.amplitudes.real)(pos)
            psi = re + 1j * f(pos)
        dens = pos**2 * np.abs(psi) ** 2
        return NodeTrack(0.0, pos, dens)
    mins = _density_minima(r, fld.density)
    keep = [(p, v) for p, v, ratio in mins if ratio < threshold]
    pos = np.array([p for p, _ in keep])
    val = np.array([v for _, v in keep])
    return NodeTrack(fld.time, pos, val)


@dataclass(frozen=True)
class NodeLiftingCurve:
    """Minimum density at a tracked node versus time.

    Attributes
    ----------
    times, positions, values : numpy.ndarray
        Times [fs], node radii [a0] and densities while the node survives.
    lost_at : float or None
        First time at which the node no longer qualified, if any.
    """

    times: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    lost_at: float | None = None


def node_lifting_curve(
    params: PacketParams,
    node_index: int,
    times,
    *,
    packet: WhittakerPacket | None = None,
    points_per_wavelength: int = 160,
    threshold: float = NODE_THRESHOLD,
    raise_on_loss: bool = False,
) -> NodeLiftingCurve:
    """Follow the density minimum of one t = 0 node through ``times``.

    ``node_index`` counts nodes from the origin.  Tracking stops when the
    minimum rises above ``threshold`` times its flanking maxima or cannot be
    matched.  With ``raise_on_loss`` a :class:`NodeLost` carrying the partial
    curve is raised instead of returning it.
    """
    pk = packet if packet is not None else get_packet(params)
    times = np.asarray(times, dtype=float)
    spacing = math.pi / (2.0 * params.mu)
    r_max = spacing * (node_index + 6) + 20.0
    grid = RadialGrid.for_params(params, r_max=r_max, points_per_wavelength=points_per_wavelength)
    fld0 = pk.field(grid, 0.0)
    nodes0 = find_nodes(fld0, packet=pk)
    if node_index >= nodes0.node_positions.size:
        raise NodeLost(0.0, np.empty(0), np.empty(0))
    pos = nodes0.node_positions[node_index]

    psi = pk.amplitudes_many(grid.r_values, times)
    dens_all = grid.r_values**2 * np.abs(psi) ** 2
    t_out, p_out, v_out = [], [], []
    lost = None
    for t, dens in zip(times, dens_all):
        if t == 0.0:
            t_out.append(0.0)
            p_out.append(pos)
            v_out.append(float(nodes0.min_density_at_nodes[node_index]))
            continue
        cand = _density_minima(grid.r_values, dens)
        near = [c for c in cand if abs(c[0] - pos) < 0.5 * spacing]
        if not near:
            lost = float(t)
            break
        p, v, ratio = min(near, key=lambda c: abs(c[0] - pos))
        if ratio >= threshold:
            lost = float(t)
            break
        pos = p
        t_out.append(float(t))
        p_out.append(p)
        v_out.append(v)
    curve = NodeLiftingCurve(np.array(t_out), np.array(p_out), np.array(v_out), lost)
    if lost is not None and raise_on_loss:
        raise NodeLost(lost, curve.times, curve.values)
    return curve
