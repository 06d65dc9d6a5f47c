"""Closed-form spread-lifetime trade-off table.

Each row fixes either the lifetime or the spread; the other two
quantities follow from

    Δr = c_r a0 / sqrt(ΔE),    Δt = c_t / sqrt(E ΔE)

at the three reference energies 1, 200 and 10000 eV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import CONSTANTS
from .observables import LIFETIME_CONSTANT, SPREAD_CONSTANT

__all__ = ["TableCell", "REFERENCE_ENERGIES", "REFERENCE_TABLE", "trade_off_table", "energy_for_lifetime", "energy_for_spread"]

REFERENCE_ENERGIES = (1.0, 200.0, 1e4)

# (fixed quantity, fixed value, determined quantity, E [eV], published value)
# lifetimes in as, spreads in nm, energies in eV
REFERENCE_TABLE = (
    ("delta_t_as", 53.0, "dE_ev", 1.0, 6.6),
    ("delta_t_as", 53.0, "dE_ev", 200.0, 3.3e-2),
    ("delta_t_as", 53.0, "dE_ev", 1e4, 6.6e-4),
    ("delta_t_as", 53.0, "delta_r_nm", 1.0, 5.1e-2),
    ("delta_t_as", 53.0, "delta_r_nm", 200.0, 7.2e-1),
    ("delta_t_as", 53.0, "delta_r_nm", 1e4, 5.1),
    ("delta_t_as", 100.0, "dE_ev", 1.0, 1.9),
    ("delta_t_as", 100.0, "dE_ev", 200.0, 9.3e-3),
    ("delta_t_as", 100.0, "dE_ev", 1e4, 1.9e-4),
    ("delta_t_as", 100.0, "delta_r_nm", 1.0, 9.6e-2),
    ("delta_t_as", 100.0, "delta_r_nm", 200.0, 1.4),
    ("delta_t_as", 100.0, "delta_r_nm", 1e4, 9.6),
    ("delta_r_nm", 143.0, "dE_ev", None, 8.4e-7),
    ("delta_r_nm", 143.0, "delta_t_as", 1.0, 1.5e5),
    ("delta_r_nm", 143.0, "delta_t_as", 200.0, 1.1e4),
    ("delta_r_nm", 143.0, "delta_t_as", 1e4, 1.5e3),
    ("delta_r_nm", 10.0, "dE_ev", None, 1.7e-4),
    ("delta_r_nm", 10.0, "delta_t_as", 1.0, 1.0e4),
    ("delta_r_nm", 10.0, "delta_t_as", 200.0, 7.4e2),
    ("delta_r_nm", 10.0, "delta_t_as", 1e4, 1.0e2),
)


@dataclass(frozen=True)
class TableCell:
    """One determined entry of the trade-off table."""

    fixed: str
    fixed_value: float
    quantity: str
    energy_ev: float | None
    reference: float
    computed: float

    @property
    def relative_error(self) -> float:
        return abs(self.computed - self.reference) / abs(self.reference)

    def as_row(self) -> dict:
        return {
            "fixed": self.fixed,
            "fixed_value": self.fixed_value,
            "quantity": self.quantity,
            "energy_ev": "" if self.energy_ev is None else self.energy_ev,
            "reference_value": self.reference,
            "computed_value": self.computed,
            "relative_error": self.relative_error,
        }


def energy_for_lifetime(E: float, delta_t_fs: float) -> float:
    """ΔE [eV] giving lifetime ``delta_t_fs`` at energy ``E``."""
    return (LIFETIME_CONSTANT / delta_t_fs) ** 2 / E


def energy_for_spread(delta_r_a0: float) -> float:
    """ΔE [eV] giving spread ``delta_r_a0`` (independent of E)."""
    return (SPREAD_CONSTANT / delta_r_a0) ** 2


def _cell(fixed, value, quantity, E, ref) -> TableCell:
    a0 = CONSTANTS.bohr_radius
    if fixed == "delta_t_as":
        dE = energy_for_lifetime(E, value * 1e-3)
    else:
        dE = energy_for_spread(value / a0)
    if quantity == "dE_ev":
        out = dE
    elif quantity == "delta_r_nm":
        out = SPREAD_CONSTANT * a0 / math.sqrt(dE)
    else:
        out = LIFETIME_CONSTANT / math.sqrt(E * dE) * 1e3
    return TableCell(fixed, value, quantity, E, ref, out)


def trade_off_table() -> list[TableCell]:
    """Every determined cell recomputed from the closed forms."""
    return [_cell(*row) for row in REFERENCE_TABLE]
