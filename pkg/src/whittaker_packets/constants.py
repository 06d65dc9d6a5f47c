"""Embedded unit system.

Internal units are eV for energy, fs for time and the Bohr radius a₀ for
length.  The dimensionless variables used throughout are

* ``kappa``, the momentum, defined through the energy ``E = 2 E_h kappa**2``,
* ``x = 2 r / a0``, the radius,

so that a mode of momentum ``kappa`` oscillates like ``sin(kappa x)`` and has
angular frequency ``omega0 * kappa**2`` with ``omega0 = 2 E_h / hbar``.
Numerical values are the CODATA set shipped with :mod:`scipy.constants`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import scipy.constants as _sc

__all__ = ["PhysicalConstants", "CONSTANTS", "Momentum", "KAPPA_MIN"]

#: smallest momentum accepted by the mode evaluator
KAPPA_MIN = 1e-3


@dataclass(frozen=True)
class PhysicalConstants:
    """Physical constants in the library's unit system.

    Attributes
    ----------
    bohr_radius : float
        a₀ in nm.
    hartree : float
        E_h in eV.
    hbar : float
        Reduced Planck constant in eV fs.
    light_speed : float
        Speed of light in m/s.
    electron_mass : float
        Electron mass in kg.
    electron_charge : float
        Elementary charge in C.
    vacuum_permittivity : float
        ε₀ in F/m.
    """

    bohr_radius: float = _sc.physical_constants["Bohr radius"][0] * 1e9
    hartree: float = _sc.physical_constants["Hartree energy in eV"][0]
    hbar: float = _sc.hbar / _sc.e * 1e15
    light_speed: float = _sc.c
    electron_mass: float = _sc.m_e
    electron_charge: float = _sc.e
    vacuum_permittivity: float = _sc.epsilon_0

    @property
    def omega0(self) -> float:
        """Mode frequency scale 2 E_h / ħ in fs⁻¹."""
        return 2.0 * self.hartree / self.hbar

    @property
    def fine_structure(self) -> float:
        """Fine-structure constant computed from the SI values."""
        return self.electron_charge**2 / (
            4.0 * math.pi * self.vacuum_permittivity * _sc.hbar * self.light_speed
        )

    @property
    def atomic_time(self) -> float:
        """Atomic unit of time ħ/E_h in fs."""
        return self.hbar / self.hartree

    def energy_of_kappa(self, kappa: float) -> float:
        """Mode energy 2 E_h κ² in eV."""
        return 2.0 * self.hartree * kappa * kappa

    def kappa_of_energy(self, energy: float) -> float:
        """Inverse of :meth:`energy_of_kappa`."""
        return math.sqrt(energy / (2.0 * self.hartree))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["omega0"] = self.omega0
        d["fine_structure"] = self.fine_structure
        d["atomic_time"] = self.atomic_time
        return d

    def to_json(self) -> str:
        """Serialise the table, including derived entries, as JSON."""
        return json.dumps(self.as_dict(), indent=2)


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class Momentum:
    """Dimensionless momentum κ = k a₀ of a continuum mode."""

    kappa: float

    def __post_init__(self):
        from .errors import DomainError

        k = float(self.kappa)
        if not math.isfinite(k) or k <= 0.0:
            raise DomainError(f"kappa must be positive and finite, got {self.kappa!r}")
        object.__setattr__(self, "kappa", k)

    @classmethod
    def from_energy(cls, energy_ev: float, constants: PhysicalConstants = CONSTANTS):
        return cls(constants.kappa_of_energy(energy_ev))

    @property
    def energy(self) -> float:
        """Energy in eV."""
        return CONSTANTS.energy_of_kappa(self.kappa)

    def __float__(self) -> float:
        return self.kappa
