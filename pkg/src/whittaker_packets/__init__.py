"""Localized electron wavepackets built from hydrogen continuum modes."""

from .constants import CONSTANTS, Momentum, PhysicalConstants
from .errors import (
    DomainError,
    FitFailure,
    InsufficientPeaks,
    NodeLost,
    QuadratureNonConvergence,
    RankDeficient,
    WhittakerError,
)
from .specfun import (
    DEFAULT_QUAD,
    QuadratureSpec,
    asymptotic_mode,
    gamma_pair,
    whittaker_mode,
    whittaker_mode_derivative,
    whittaker_mode_time,
)

from .packet import (
    PacketParams,
    RadialField,
    RadialGrid,
    WhittakerPacket,
    build_packet,
    gaussian_dynamics,
    map_energy_params,
)
from .observables import (
    diffraction_lifetime,
    extract_envelope,
    find_nodes,
    node_lifting_curve,
    overlap_series,
    spatial_spread,
)
from .radiative import average_rate, decay_probability, radial_matrix_element, total_decay
from .fitting import calibrate_lifetime_constant, calibrate_spread_constant, fit_power_law
from .tradeoff import trade_off_table

__version__ = "0.1.0"
