"""Time evolution of the two-component wavefunction on a periodic grid.

Two integrators share a grid and initial condition:

* ``BarePropagator`` works in the bare basis (|n,e>, |n+1,g>) and applies
  symmetric Strang splitting: half kinetic step in momentum space, exact
  pointwise 2x2 potential exponential, half kinetic step.  Exactly unitary
  per step; this is the ground-truth integrator.

* ``DressedPropagator`` works on the branch amplitudes (C+, C-) and takes
  Crank-Nicolson (trapezoidal/Cayley) steps of the coupled system

      i dC+/dt = [-(1/2M) d2/dz2 + V+ + th'^2/2M] C+ + (1/2M)(2 th' d/dz + th'') C-
      i dC-/dt = [-(1/2M) d2/dz2 + V- + th'^2/2M] C- - (1/2M)(2 th' d/dz + th'') C+

  with th = theta(z).  The first-derivative coupling is applied in the
  symmetrized form (th' d/dz + d/dz th')/2M, which equals
  (2 th' d/dz + th'')/2M in the continuum and keeps the discrete operator
  exactly anti-Hermitian, so the Cayley step conserves the norm.  Spatial
  derivatives are Fourier-spectral (same resolution as the bare
  integrator); the implicit solve is a fixed-point iteration
  preconditioned by the kinetic Cayley denominator and fails with
  ``LinearSolveFailure`` when dt is too large for the grid.

For a constant mode function th' vanishes identically and the two branch
equations decouple exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import GridTooCoarse, GuardBandViolation, LinearSolveFailure
from .model import DressedFrame, ModeProfile, ProfileKind, SystemParams, rabi_radical

__all__ = [
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
]


class Basis(str, Enum):
    BARE = "bare"
    DRESSED = "dressed"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: n_points must be a power of two >= 64."""

    z_min: float
    z_max: float
    n_points: int
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.z_max > self.z_min:
            raise ValueError(f"z_max must exceed z_min, got [{self.z_min}, {self.z_max}]")
        n = self.n_points
        if n < 64 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a power of two >= 64, got {n}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / self.n_points

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.dz * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        """Spectral momenta, periodic convention, |k| <= k_max = pi/dz."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n_points, d=self.dz)

    @property
    def k_max(self) -> float:
        return math.pi / self.dz


@dataclass
class SpinorState:
    """Two complex amplitude arrays over the grid.

    In the bare basis ``amps[0]``/``amps[1]`` are the |n,e> / |n+1,g>
    components; in the dressed basis they are C+ / C-.
    """

    basis: Basis
    amps: np.ndarray  # shape (2, n_points), complex128
    sector: int
    grid: Grid

    def __post_init__(self):
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (2, self.grid.n_points):
            raise ValueError(f"amps must have shape (2, {self.grid.n_points})")

    @property
    def amp_a(self) -> np.ndarray:
        return self.amps[0]

    @property
    def amp_b(self) -> np.ndarray:
        return self.amps[1]

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2) * self.grid.dz)

    def normalized(self) -> "SpinorState":
        n = self.norm()
        if n <= 0:
            raise ValueError("cannot normalize a zero state")
        return SpinorState(self.basis, self.amps / math.sqrt(n), self.sector, self.grid)

    def copy(self) -> "SpinorState":
        return SpinorState(self.basis, self.amps.copy(), self.sector, self.grid)


_INTERNAL_STATES = ("bare-excited", "bare-ground", "dressed-plus", "dressed-minus")


@dataclass(frozen=True)
class InitialCondition:
    """Gaussian packet exp(-(z-center)^2/(4 width^2) + i momentum z) times an
    internal preparation; optional (sector, weight) list for multi-sector runs."""

    center: float
    width: float
    momentum: float
    internal: str = "bare-excited"
    sector_weights: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError(f"packet width must be > 0, got {self.width}")
        if self.internal not in _INTERNAL_STATES:
            raise ValueError(f"internal must be one of {_INTERNAL_STATES}, got {self.internal!r}")
        if self.sector_weights is not None:
            weights = tuple((int(n), float(w)) for n, w in self.sector_weights)
            if any(n < 0 for n, _ in weights):
                raise ValueError("sector weights need photon numbers >= 0")
            if any(w < 0 for _, w in weights):
                raise ValueError("sector weights must be >= 0")
            total = sum(w for _, w in weights)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"sector weights must sum to 1, got {total}")
            object.__setattr__(self, "sector_weights", weights)

    def validate_on_grid(self, grid: Grid) -> None:
        if not self.width > 2.0 * grid.dz:
            raise ValueError(
                f"packet width {self.width} must exceed 2 dz = {2.0 * grid.dz:.6g}"
            )
        margin = 5.0 * self.width
        if self.center - margin < grid.z_min + margin or self.center + margin > grid.z_max - margin:
            raise ValueError(
                "packet support must stay >= 5 widths from the grid edges at t = 0"
            )


def gaussian_packet(grid: Grid, center: float, width: float, momentum: float) -> np.ndarray:
    """Unit-norm Gaussian on the grid (discrete norm sum |psi|^2 dz = 1)."""
    z = grid.z
    psi = np.exp(-((z - center) ** 2) / (4.0 * width**2) + 1j * momentum * z)
    psi /= math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.dz)
    return psi.astype(np.complex128)


def potential_matrix(params: SystemParams, profile: ModeProfile, z: float) -> np.ndarray:
    """Sector-n interaction matrix at z in the ordered bare basis:
    diag(c + detuning/2, c - detuning/2) with off-diagonal g(z)."""
    g = params.sector_coupling * float(profile.f(z))
    c = params.field_offset
    half = 0.5 * params.detuning
    return np.array([[c + half, g], [g, c - half]], dtype=np.complex128)


# ---------------------------------------------------------------------------
# basis rotation
# ---------------------------------------------------------------------------

def _rotate(state: SpinorState, frame: DressedFrame, target: Basis) -> SpinorState:
    # The rotation matrix [[sin, cos], [cos, -sin]] is symmetric orthogonal,
    # hence its own inverse: the same pointwise map serves both directions.
    cos_t, sin_t = frame.rotation(state.grid.z)
    a, b = state.amps
    out = np.empty_like(state.amps)
    out[0] = sin_t * a + cos_t * b
    out[1] = cos_t * a - sin_t * b
    return SpinorState(target, out, state.sector, state.grid)


def to_dressed(state: SpinorState, frame: DressedFrame) -> SpinorState:
    """Project a bare state onto the dressed branches: (C+, C-)."""
    if state.basis is not Basis.BARE:
        raise ValueError("to_dressed expects a bare-basis state")
    if frame.params.photon_n != state.sector:
        raise ValueError("frame sector does not match state sector")
    return _rotate(state, frame, Basis.DRESSED)


def to_bare(state: SpinorState, frame: DressedFrame) -> SpinorState:
    """Inverse of :func:`to_dressed`."""
    if state.basis is not Basis.DRESSED:
        raise ValueError("to_bare expects a dressed-basis state")
    if frame.params.photon_n != state.sector:
        raise ValueError("frame sector does not match state sector")
    return _rotate(state, frame, Basis.BARE)


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------

def default_time_step(
    params: SystemParams, profile: ModeProfile, initial: InitialCondition
) -> float:
    """dt <= 0.05 / max(R_max, p_eff^2 / 2M): resolves both the fastest
    internal rotation and the kinetic phase of the packet's momentum content."""
    p_eff = abs(initial.momentum) + 5.0 / initial.width
    f_peak = 0.0 if profile.kind is ProfileKind.ZERO else 1.0
    r_max = rabi_radical(params, f_peak)
    return 0.05 / max(r_max, p_eff**2 / (2.0 * params.mass), 1e-12)


def _aliasing_guard(initial: InitialCondition, grid: Grid) -> None:
    p_eff = abs(initial.momentum) + 5.0 / initial.width
    if p_eff > 0.8 * grid.k_max:
        raise GridTooCoarse(
            f"packet momentum content {p_eff:.3g} exceeds 0.8 k_max = {0.8 * grid.k_max:.3g}"
        )


class BarePropagator:
    """Strang-split step: exp(-i T dt/2) exp(-i V dt) exp(-i T dt/2)."""

    def __init__(
        self,
        params: SystemParams,
        profile: ModeProfile,
        grid: Grid,
        interaction_picture: bool = False,
    ):
        self.params = params
        self.profile = profile
        self.grid = grid
        self.interaction_picture = interaction_picture
        k = grid.k
        self._half_kinetic = np.exp(-0.25j * k * k * grid.dt / params.mass)
        z = grid.z
        g = params.sector_coupling * np.asarray(profile.f(z), dtype=float)
        half = 0.5 * params.detuning
        r = np.hypot(half, g)
        c = 0.0 if interaction_picture else params.field_offset
        dt = grid.dt
        phase = np.exp(-1j * c * dt) * np.ones_like(g)
        cos_r = np.cos(r * dt)
        # sin(R dt)/R has the finite limit dt at R -> 0
        sinc = np.where(r > 0.0, np.sin(r * dt) / np.where(r > 0.0, r, 1.0), dt)
        self._u00 = phase * (cos_r - 1j * sinc * half)
        self._u11 = phase * (cos_r + 1j * sinc * half)
        self._u01 = phase * (-1j * sinc * g)

    def step_amps(self, amps: np.ndarray) -> np.ndarray:
        ft = np.fft.fft(amps, axis=1)
        ft *= self._half_kinetic
        amps = np.fft.ifft(ft, axis=1)
        a = self._u00 * amps[0] + self._u01 * amps[1]
        b = self._u01 * amps[0] + self._u11 * amps[1]
        amps[0] = a
        amps[1] = b
        ft = np.fft.fft(amps, axis=1)
        ft *= self._half_kinetic
        return np.fft.ifft(ft, axis=1)

    def step(self, state: SpinorState) -> SpinorState:
        if state.basis is not Basis.BARE:
            raise ValueError("BarePropagator expects a bare-basis state")
        return SpinorState(Basis.BARE, self.step_amps(state.amps.copy()), state.sector, state.grid)


class DressedPropagator:
    """Crank-Nicolson step of the coupled branch equations (spectral space)."""

    def __init__(
        self,
        frame: DressedFrame,
        grid: Grid,
        interaction_picture: bool = False,
        solver_tol: float = 1e-14,
        max_iterations: int = 200,
    ):
        self.frame = frame
        self.grid = grid
        self.interaction_picture = interaction_picture
        self.solver_tol = solver_tol
        self.max_iterations = max_iterations

        params = frame.params
        z = grid.z
        self._k = grid.k
        self._kinetic = self._k * self._k / (2.0 * params.mass)
        v_plus, v_minus = frame.potentials(z)
        if interaction_picture:
            v_plus = v_plus - params.field_offset
            v_minus = v_minus - params.field_offset
        theta_p = np.asarray(frame.dtheta_dz(z), dtype=float)
        gauge = theta_p * theta_p / (2.0 * params.mass)
        diag = np.stack([np.asarray(v_plus) + gauge, np.asarray(v_minus) + gauge])
        # Fold the mean of each branch potential into the Cayley preconditioner;
        # the residual W then vanishes identically for constant-f profiles.
        self._diag_mean = diag.mean(axis=1)
        self._diag_dev = diag - self._diag_mean[:, None]
        self._theta_p = theta_p
        self._couple = bool(np.any(theta_p != 0.0))
        self._inv_2m = 1.0 / (2.0 * params.mass)
        alpha = 0.5 * grid.dt
        self._alpha = alpha
        self._precond = 1.0 / (
            1.0 + 1j * alpha * (self._kinetic[None, :] + self._diag_mean[:, None])
        )

    # W = H - (kinetic + mean diagonal): bounded part handled by iteration.
    def _apply_w(self, amps: np.ndarray) -> np.ndarray:
        out = self._diag_dev * amps
        if self._couple:
            ft = np.fft.fft(amps, axis=1)
            d_amps = np.fft.ifft(1j * self._k * ft, axis=1)
            t_amps = np.fft.ifft(1j * self._k * np.fft.fft(self._theta_p * amps, axis=1), axis=1)
            out[0] += self._inv_2m * (self._theta_p * d_amps[1] + t_amps[1])
            out[1] -= self._inv_2m * (self._theta_p * d_amps[0] + t_amps[0])
        return out

    def _apply_h(self, amps: np.ndarray) -> np.ndarray:
        ft = np.fft.fft(amps, axis=1)
        out = np.fft.ifft(self._kinetic * ft, axis=1)
        out += self._diag_mean[:, None] * amps
        out += self._apply_w(amps)
        return out

    def apply_hamiltonian(self, state: SpinorState) -> np.ndarray:
        return self._apply_h(state.amps)

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        # (1 + i a(K + D + W)) x = rhs  solved as the fixed point
        #   x = P (rhs - i a W x),  P = (1 + i a(K + D))^{-1}.
        # Contraction factor ~ a * ||W||; divergence means dt is too large.
        def precondition(v):
            return np.fft.ifft(self._precond * np.fft.fft(v, axis=1), axis=1)

        x = precondition(rhs)
        scale = float(np.linalg.norm(x))
        if scale == 0.0:
            return x
        previous_update = math.inf
        stalled = 0
        for _ in range(self.max_iterations):
            x_new = precondition(rhs - 1j * self._alpha * self._apply_w(x))
            update = float(np.linalg.norm(x_new - x))
            x = x_new
            if update <= self.solver_tol * scale:
                return x
            if update >= 0.5 * previous_update:
                # contraction lost: converged to the roundoff floor, or dt is
                # too large for the fixed-point iteration to contract
                if update <= 1e-12 * scale:
                    return x
                stalled += 1
                if stalled >= 3:
                    raise LinearSolveFailure(
                        f"implicit solve not contracting (update {update:.3g}); reduce dt"
                    )
            else:
                stalled = 0
            previous_update = update
        raise LinearSolveFailure(
            f"implicit solve did not reach tol {self.solver_tol:g} "
            f"in {self.max_iterations} iterations"
        )

    def step_amps(self, amps: np.ndarray) -> np.ndarray:
        rhs = amps - 1j * self._alpha * self._apply_h(amps)
        return self._solve(rhs)

    def step(self, state: SpinorState) -> SpinorState:
        if state.basis is not Basis.DRESSED:
            raise ValueError("DressedPropagator expects a dressed-basis state")
        return SpinorState(
            Basis.DRESSED, self.step_amps(state.amps.copy()), state.sector, state.grid
        )


def _spectral_occupancy_guard(state: SpinorState) -> None:
    ft = np.fft.fft(state.amps, axis=1)
    weights = np.sum(np.abs(ft) ** 2, axis=0)
    total = float(weights.sum())
    if total == 0.0:
        return
    high = float(weights[np.abs(state.grid.k) > 0.8 * state.grid.k_max].sum())
    if high > 1e-8 * total:
        raise GridTooCoarse(
            f"fraction {high / total:.3g} of the state sits above 0.8 k_max; refine the grid"
        )


def step_bare(
    state: SpinorState,
    params: SystemParams,
    profile: ModeProfile,
    grid: Grid,
    interaction_picture: bool = False,
) -> SpinorState:
    """One Strang-split step of the full Hamiltonian in the bare basis."""
    _spectral_occupancy_guard(state)
    return BarePropagator(params, profile, grid, interaction_picture).step(state)


def step_dressed(
    state: SpinorState,
    frame: DressedFrame,
    grid: Grid,
    interaction_picture: bool = False,
) -> SpinorState:
    """One Crank-Nicolson step of the coupled branch equations."""
    _spectral_occupancy_guard(state)
    return DressedPropagator(frame, grid, interaction_picture).step(state)


# ---------------------------------------------------------------------------
# run loop
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Snapshots of one single-sector run; times[i] matches states[i]."""

    times: np.ndarray
    states: list[SpinorState]
    params: SystemParams
    profile: ModeProfile
    grid: Grid
    frame: DressedFrame
    basis: Basis
    interaction_picture: bool = False

    @property
    def final_state(self) -> SpinorState:
        return self.states[-1]


@dataclass
class MultiTrajectory:
    """Weighted independent sector runs (sectors never mix under the
    excitation-conserving Hamiltonian)."""

    weights: tuple[tuple[int, float], ...]
    trajectories: list[Trajectory]

    @property
    def times(self) -> np.ndarray:
        return self.trajectories[0].times


def build_initial_state(
    initial: InitialCondition,
    params: SystemParams,
    profile: ModeProfile,
    grid: Grid,
    basis: Basis,
) -> SpinorState:
    """Packet times internal preparation, expressed in the requested basis."""
    initial.validate_on_grid(grid)
    packet = gaussian_packet(grid, initial.center, initial.width, initial.momentum)
    zero = np.zeros_like(packet)
    n = params.photon_n
    if initial.internal == "bare-excited":
        state = SpinorState(Basis.BARE, np.stack([packet, zero]), n, grid)
    elif initial.internal == "bare-ground":
        state = SpinorState(Basis.BARE, np.stack([zero, packet]), n, grid)
    elif initial.internal == "dressed-plus":
        state = SpinorState(Basis.DRESSED, np.stack([packet, zero]), n, grid)
    else:
        state = SpinorState(Basis.DRESSED, np.stack([zero, packet]), n, grid)

    frame = DressedFrame(params, profile)
    if state.basis is basis:
        return state
    if basis is Basis.BARE:
        return to_bare(state, frame)
    return to_dressed(state, frame)


def _check_guard_band(amps: np.ndarray, grid: Grid, width: float, t: float) -> None:
    z = grid.z
    density = np.sum(np.abs(amps) ** 2, axis=0) * grid.dz
    total = float(density.sum())
    if total <= 0:
        return
    mean_z = float(np.sum(z * density) / total)
    margin = 10.0 * width
    if mean_z < grid.z_min + margin or mean_z > grid.z_max - margin:
        raise GuardBandViolation(
            f"packet center {mean_z:.3g} within 10 widths of the boundary at t = {t:.6g}"
        )
    edge = max(4, grid.n_points // 64)
    edge_mass = float(density[:edge].sum() + density[-edge:].sum())
    if edge_mass > 1e-6 * total:
        raise GuardBandViolation(
            f"probability {edge_mass:.3g} reached the boundary cells at t = {t:.6g}"
        )


def evolve(
    initial: InitialCondition,
    params: SystemParams,
    profile: ModeProfile,
    grid: Grid,
    basis_mode: Basis | str = Basis.BARE,
    *,
    snapshot_stride: int = 1,
    interaction_picture: bool = False,
    observer=None,
) -> Trajectory | MultiTrajectory:
    """Run ``grid.n_steps`` steps and return snapshots every ``snapshot_stride``
    steps (t = 0 and the final state are always included).

    With ``initial.sector_weights`` set, each sector runs independently and a
    :class:`MultiTrajectory` is returned in the given sector order.
    ``observer(t, state)`` is called after every step when provided; the state
    it receives aliases the working buffer, so copy() it to keep it.
    """
    basis = Basis(basis_mode)
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")

    if initial.sector_weights is not None:
        single = replace(initial, sector_weights=None)
        runs = []
        for n, _w in initial.sector_weights:
            runs.append(
                evolve(
                    single,
                    replace(params, photon_n=n),
                    profile,
                    grid,
                    basis,
                    snapshot_stride=snapshot_stride,
                    interaction_picture=interaction_picture,
                    observer=observer,
                )
            )
        return MultiTrajectory(initial.sector_weights, runs)

    _aliasing_guard(initial, grid)
    state = build_initial_state(initial, params, profile, grid, basis)
    frame = DressedFrame(params, profile)
    if basis is Basis.BARE:
        propagator = BarePropagator(params, profile, grid, interaction_picture)
    else:
        propagator = DressedPropagator(frame, grid, interaction_picture)

    amps = state.amps.copy()
    times = [0.0]
    states = [SpinorState(basis, amps.copy(), state.sector, grid)]
    if observer is not None:
        observer(0.0, states[0])
    for step_index in range(1, grid.n_steps + 1):
        amps = propagator.step_amps(amps)
        t = step_index * grid.dt
        if observer is not None:
            observer(t, SpinorState(basis, amps, state.sector, grid))
        if step_index % snapshot_stride == 0 or step_index == grid.n_steps:
            _check_guard_band(amps, grid, initial.width, t)
            times.append(t)
            states.append(SpinorState(basis, amps.copy(), state.sector, grid))
    return Trajectory(
        np.asarray(times), states, params, profile, grid, frame, basis, interaction_picture
    )
