"""Two-level atom crossing a 1D cavity mode: dressed-state algebra, bare and
dressed-basis wavepacket propagation, observables, and a scenario runner."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateFrame,
    GridTooCoarse,
    GuardBandViolation,
    LinearSolveFailure,
    PacketNotCleared,
    SimcavError,
)
from .model import (
    DressedFrame,
    ModeProfile,
    ProfileKind,
    SystemParams,
    double_angle,
    eigenvalues,
    identity_tan_forms,
    mixing_angle,
    rabi_radical,
)
from .observables import (
    ObservableSeries,
    branch_populations,
    energy_expectation,
    inversion,
    mean_momentum,
    mean_position,
    scattering_coefficients,
    series_from_trajectory,
)
from .propagation import (
    BarePropagator,
    Basis,
    DressedPropagator,
    Grid,
    InitialCondition,
    MultiTrajectory,
    SpinorState,
    Trajectory,
    build_initial_state,
    default_time_step,
    evolve,
    gaussian_packet,
    potential_matrix,
    step_bare,
    step_dressed,
    to_bare,
    to_dressed,
)

__all__ = [
    "__version__",
    "SimcavError",
    "DegenerateFrame",
    "GridTooCoarse",
    "LinearSolveFailure",
    "PacketNotCleared",
    "GuardBandViolation",
    "ConfigError",
    "SystemParams",
    "ProfileKind",
    "ModeProfile",
    "DressedFrame",
    "rabi_radical",
    "eigenvalues",
    "mixing_angle",
    "identity_tan_forms",
    "double_angle",
    "Basis",
    "Grid",
    "SpinorState",
    "InitialCondition",
    "Trajectory",
    "MultiTrajectory",
    "potential_matrix",
    "to_dressed",
    "to_bare",
    "step_bare",
    "step_dressed",
    "BarePropagator",
    "DressedPropagator",
    "default_time_step",
    "gaussian_packet",
    "build_initial_state",
    "evolve",
    "ObservableSeries",
    "inversion",
    "branch_populations",
    "mean_position",
    "mean_momentum",
    "scattering_coefficients",
    "energy_expectation",
    "series_from_trajectory",
]
