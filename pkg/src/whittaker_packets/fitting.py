"""Power-law regression of simulated widths.

Both laws are fitted by ordinary least squares on logarithms:
``ln y = ln C + p ln x``.  With a fixed exponent only ``ln C`` is fitted,
which is then the mean of ``ln y - p ln x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RankDeficient

__all__ = [
    "PowerLawFit",
    "fit_power_law",
    "leave_one_out",
    "calibrate_spread_constant",
    "calibrate_lifetime_constant",
    "DEFAULT_SPREAD_GRID",
    "DEFAULT_LIFETIME_PAIRS",
]

#: ΔE values [eV] at E = 1 eV for the spread calibration
DEFAULT_SPREAD_GRID = (1e-5, 3e-5, 1e-4, 3e-4, 1e-3)
#: (E, ΔE) pairs [eV] of the spread-lifetime table whose packets are narrow
#: (sigma < mu/3); the table's E = 1 eV entries at ΔE = 6.6 and 1.9 eV are not
DEFAULT_LIFETIME_PAIRS = (
    (200.0, 3.3e-2),
    (1e4, 6.6e-4),
    (200.0, 9.3e-3),
    (1e4, 1.9e-4),
    (1.0, 8.4e-7),
    (200.0, 8.4e-7),
    (1e4, 8.4e-7),
    (1.0, 1.7e-4),
    (200.0, 1.7e-4),
    (1e4, 1.7e-4),
)


@dataclass(frozen=True)
class PowerLawFit:
    """Result of a log-log fit ``y = coefficient * x**exponent``.

    Attributes
    ----------
    exponent : float
    coefficient : float
    residual_rms : float
        RMS of the residuals of ``ln y``.
    sample_count : int
    samples : numpy.ndarray
        The (x, y) pairs used, shape ``(n, 2)``.
    exponent_fixed : bool
    """

    exponent: float
    coefficient: float
    residual_rms: float
    sample_count: int
    samples: np.ndarray = field(repr=False, default=None)
    exponent_fixed: bool = False

    def predict(self, x):
        return self.coefficient * np.asarray(x, dtype=float) ** self.exponent

    def as_dict(self) -> dict:
        return {
            "constant": self.coefficient,
            "exponent": self.exponent,
            "exponent_fixed": self.exponent_fixed,
            "residual_rms": self.residual_rms,
            "sample_count": self.sample_count,
            "samples": [] if self.samples is None else self.samples.tolist(),
        }


def fit_power_law(samples, fixed_exponent: float | None = None, *, min_samples: int = 4) -> PowerLawFit:
    """Least-squares power law through ``samples`` of (x, y).

    Raises
    ------
    DomainError
        On non-positive values or fewer than ``min_samples`` samples.
    RankDeficient
        If the exponent is free and all x coincide.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != 2:
        raise DomainError("samples must be an (n, 2) array of (x, y)")
    if s.shape[0] < min_samples:
        raise DomainError(f"need at least {min_samples} samples, got {s.shape[0]}")
    if np.any(~np.isfinite(s)) or np.any(s <= 0.0):
        raise DomainError("power-law samples must be positive and finite")
    lx, ly = np.log(s[:, 0]), np.log(s[:, 1])
    if fixed_exponent is not None:
        p = float(fixed_exponent)
        lc = float(np.mean(ly - p * lx))
    else:
        if np.ptp(lx) == 0.0:
            raise RankDeficient("all x values are equal; the exponent is undetermined")
        a = np.column_stack([np.ones_like(lx), lx])
        (lc, p), *_ = np.linalg.lstsq(a, ly, rcond=None)
    resid = ly - (lc + p * lx)
    return PowerLawFit(
        exponent=float(p),
        coefficient=math.exp(lc),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        sample_count=int(s.shape[0]),
        samples=s,
        exponent_fixed=fixed_exponent is not None,
    )


def leave_one_out(fit: PowerLawFit) -> np.ndarray:
    """Coefficients refitted with each sample left out in turn."""
    s = fit.samples
    fixed = fit.exponent if fit.exponent_fixed else None
    out = []
    for i in range(s.shape[0]):
        sub = np.delete(s, i, axis=0)
        out.append(fit_power_law(sub, fixed, min_samples=min(4, sub.shape[0])).coefficient)
    return np.array(out)


def _spread_samples(E, dE_list, quad, threads):
    from .observables import spatial_spread
    from .packet import map_energy_params

    rows = []
    for dE in dE_list:
        env = spatial_spread(map_energy_params(E, dE), quad=quad, threads=threads)
        rows.append((dE, env.delta_r))
    return np.array(rows)


def calibrate_spread_constant(
    E: float = 1.0,
    dE_list=DEFAULT_SPREAD_GRID,
    *,
    free_exponent: bool = False,
    samples=None,
    quad=None,
    threads: int = 1,
) -> PowerLawFit:
    """Fit Δr = c_r / sqrt(ΔE) from simulated envelopes.

    Returns ``c_r`` in a0 eV^1/2 (exponent fixed at -1/2 unless
    ``free_exponent``).  Precomputed ``samples`` of (ΔE, Δr) skip the
    simulations.
    """
    if samples is None:
        samples = _spread_samples(E, dE_list, quad, threads)
    return fit_power_law(samples, None if free_exponent else -0.5)


def _lifetime_samples(pairs, quad):
    from .observables import diffraction_lifetime
    from .packet import map_energy_params

    rows = []
    for E, dE in pairs:
        rows.append((E * dE, diffraction_lifetime(map_energy_params(E, dE), quad=quad)))
    return np.array(rows)


def calibrate_lifetime_constant(
    pairs=DEFAULT_LIFETIME_PAIRS,
    *,
    free_exponent: bool = False,
    samples=None,
    quad=None,
) -> PowerLawFit:
    """Fit Δt = c_t / sqrt(E ΔE) from simulated overlaps.

    Samples are (E ΔE [eV²], Δt [fs]); returns ``c_t`` in eV fs.
    """
    if samples is None:
        samples = _lifetime_samples(pairs, quad)
    return fit_power_law(samples, None if free_exponent else -0.5)
