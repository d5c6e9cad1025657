"""Physical readouts from states and trajectories.

All integrals use the rectangle rule at grid resolution, consistent with
the discrete norm the propagators conserve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PacketNotCleared
from .model import DressedFrame, ModeProfile, SystemParams
from .propagation import (
    Basis,
    Grid,
    MultiTrajectory,
    SpinorState,
    Trajectory,
    to_bare,
    to_dressed,
)

__all__ = [
    "ObservableSeries",
    "inversion",
    "branch_populations",
    "mean_position",
    "mean_momentum",
    "region_probabilities",
    "scattering_coefficients",
    "energy_expectation",
    "series_from_trajectory",
]


@dataclass
class ObservableSeries:
    """Aligned time series of the standard readouts."""

    times: np.ndarray
    norm: np.ndarray
    inversion: np.ndarray
    pop_plus: np.ndarray
    pop_minus: np.ndarray
    mean_z: np.ndarray
    mean_p: np.ndarray
    reflect: np.ndarray
    transmit: np.ndarray

    COLUMNS = ("t", "norm", "W", "pop_plus", "pop_minus", "mean_z", "mean_p", "reflect", "transmit")

    def columns(self) -> tuple[np.ndarray, ...]:
        return (
            self.times,
            self.norm,
            self.inversion,
            self.pop_plus,
            self.pop_minus,
            self.mean_z,
            self.mean_p,
            self.reflect,
            self.transmit,
        )

    def __len__(self) -> int:
        return len(self.times)


def _as_bare(state: SpinorState, frame: DressedFrame | None) -> SpinorState:
    if state.basis is Basis.BARE:
        return state
    if frame is None:
        raise ValueError("a DressedFrame is required to read a dressed-basis state")
    return to_bare(state, frame)


def _as_dressed(state: SpinorState, frame: DressedFrame | None) -> SpinorState:
    if state.basis is Basis.DRESSED:
        return state
    if frame is None:
        raise ValueError("a DressedFrame is required to project onto the branches")
    return to_dressed(state, frame)


def inversion(state: SpinorState, frame: DressedFrame | None = None) -> float:
    """Atomic inversion W = P(|n,e>) - P(|n+1,g>), in [-1, 1] for unit norm."""
    bare = _as_bare(state, frame)
    dz = bare.grid.dz
    p_e = float(np.sum(np.abs(bare.amps[0]) ** 2) * dz)
    p_g = float(np.sum(np.abs(bare.amps[1]) ** 2) * dz)
    return p_e - p_g


def branch_populations(state: SpinorState, frame: DressedFrame) -> tuple[float, float]:
    """(integral |C+|^2 dz, integral |C-|^2 dz); their sum equals the norm."""
    dressed = _as_dressed(state, frame)
    dz = dressed.grid.dz
    return (
        float(np.sum(np.abs(dressed.amps[0]) ** 2) * dz),
        float(np.sum(np.abs(dressed.amps[1]) ** 2) * dz),
    )


def mean_position(state: SpinorState) -> float:
    z = state.grid.z
    density = np.sum(np.abs(state.amps) ** 2, axis=0)
    total = float(density.sum())
    if total == 0.0:
        return 0.0
    return float(np.sum(z * density) / total)


def mean_momentum(state: SpinorState) -> float:
    """<p> of the amplitudes as stored, via the spectral representation.
    For the physical momentum of a dressed state, convert to bare first
    (the rotation is z-dependent off the mesa case)."""
    ft = np.fft.fft(state.amps, axis=1)
    weights = np.sum(np.abs(ft) ** 2, axis=0)
    total = float(weights.sum())
    if total == 0.0:
        return 0.0
    return float(np.sum(state.grid.k * weights) / total)


def region_probabilities(
    state: SpinorState, support: tuple[float, float]
) -> tuple[float, float, float]:
    """Probability left of, inside, and right of the support interval."""
    z = state.grid.z
    z_on, z_off = support
    density = np.sum(np.abs(state.amps) ** 2, axis=0) * state.grid.dz
    left = float(density[z < z_on].sum())
    right = float(density[z > z_off].sum())
    inside = float(density.sum()) - left - right
    return left, inside, right


def scattering_coefficients(
    final_state: SpinorState,
    profile: ModeProfile,
    grid: Grid | None = None,
    cleared_threshold: float = 0.01,
) -> tuple[float, float, float]:
    """(reflected, transmitted, inside) probabilities relative to the profile
    support.  Raises PacketNotCleared while the packet still overlaps the
    interaction region."""
    if not profile.support_is_finite:
        raise ValueError(
            f"scattering is undefined for the non-compact {profile.kind.value} profile"
        )
    left, inside, right = region_probabilities(final_state, profile.support)
    if inside >= cleared_threshold:
        raise PacketNotCleared(
            f"probability {inside:.4g} still inside the interaction region "
            f"(threshold {cleared_threshold:g}); run longer"
        )
    return left, right, inside


def energy_expectation(
    state: SpinorState,
    params: SystemParams,
    profile: ModeProfile,
    frame: DressedFrame | None = None,
    interaction_picture: bool = False,
) -> float:
    """<H> = <p^2/2M> + <V(z)> evaluated in the bare basis (spectral kinetic
    term, pointwise 2x2 potential)."""
    bare = _as_bare(state, frame)
    grid = bare.grid
    ft = np.fft.fft(bare.amps, axis=1)
    kinetic_density = (grid.k**2 / (2.0 * params.mass)) * np.sum(np.abs(ft) ** 2, axis=0)
    kinetic = float(kinetic_density.sum()) * grid.dz / grid.n_points
    g = params.sector_coupling * np.asarray(profile.f(grid.z), dtype=float)
    half = 0.5 * params.detuning
    c = 0.0 if interaction_picture else params.field_offset
    a, b = bare.amps
    potential = float(
        np.sum(
            (c + half) * np.abs(a) ** 2
            + (c - half) * np.abs(b) ** 2
            + 2.0 * g * np.real(np.conj(a) * b)
        )
        * grid.dz
    )
    return kinetic + potential


def _series_single(traj: Trajectory) -> ObservableSeries:
    frame = traj.frame
    support = traj.profile.support
    finite = traj.profile.support_is_finite
    rows = []
    for state in traj.states:
        bare = _as_bare(state, frame)
        dressed = _as_dressed(state, frame)
        dz = state.grid.dz
        norm = float(np.sum(np.abs(state.amps) ** 2) * dz)
        w = float(np.sum(np.abs(bare.amps[0]) ** 2 - np.abs(bare.amps[1]) ** 2) * dz)
        pp = float(np.sum(np.abs(dressed.amps[0]) ** 2) * dz)
        pm = float(np.sum(np.abs(dressed.amps[1]) ** 2) * dz)
        zbar = mean_position(state)
        pbar = mean_momentum(bare)
        if finite:
            left, _inside, right = region_probabilities(state, support)
        else:
            left, right = 0.0, 0.0
        rows.append((norm, w, pp, pm, zbar, pbar, left, right))
    arr = np.asarray(rows, dtype=float)
    return ObservableSeries(traj.times.copy(), *(arr[:, i] for i in range(8)))


def series_from_trajectory(traj: Trajectory | MultiTrajectory) -> ObservableSeries:
    """Build the observable series; multi-sector runs combine sector series
    with the preparation weights (fixed sector order)."""
    if isinstance(traj, Trajectory):
        return _series_single(traj)
    parts = [_series_single(t) for t in traj.trajectories]
    weights = [w for _n, w in traj.weights]
    times = parts[0].times.copy()
    stacked = [np.asarray(s.columns()[1:]) for s in parts]  # (8, T) each
    combined = sum(w * s for w, s in zip(weights, stacked))
    return ObservableSeries(times, *(combined[i] for i in range(8)))
