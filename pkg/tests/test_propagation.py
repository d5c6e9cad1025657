"""Integrators: potential step, transforms, oracles, error modes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simcav.errors import (
    DegenerateFrame,
    GridTooCoarse,
    GuardBandViolation,
    LinearSolveFailure,
)
from simcav.model import DressedFrame, ModeProfile, SystemParams
from simcav.observables import branch_populations, inversion, mean_position
from simcav.propagation import (
    BarePropagator,
    Basis,
    Grid,
    InitialCondition,
    MultiTrajectory,
    SpinorState,
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


def make_state(grid, amps, basis=Basis.BARE, sector=0):
    return SpinorState(basis, np.asarray(amps, dtype=np.complex128), sector, grid)


GRID = Grid(-40.0, 40.0, 256, dt=1e-2, n_steps=10)


# ---------------------------------------------------------------------------
# grid / state / initial-condition validation
# ---------------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(-1.0, 1.0, 100, dt=1e-2, n_steps=1)  # not a power of two
    with pytest.raises(ValueError):
        Grid(-1.0, 1.0, 32, dt=1e-2, n_steps=1)  # too few points
    with pytest.raises(ValueError):
        Grid(1.0, -1.0, 128, dt=1e-2, n_steps=1)
    with pytest.raises(ValueError):
        Grid(-1.0, 1.0, 128, dt=0.0, n_steps=1)
    grid = Grid(-8.0, 8.0, 64, dt=1e-3, n_steps=5)
    assert grid.dz == pytest.approx(0.25)
    assert grid.k_max == pytest.approx(math.pi / 0.25)
    assert np.max(np.abs(grid.k)) <= grid.k_max


def test_initial_condition_validation():
    with pytest.raises(ValueError):
        InitialCondition(center=0.0, width=-1.0, momentum=0.0)
    with pytest.raises(ValueError):
        InitialCondition(center=0.0, width=1.0, momentum=0.0, internal="excited")
    with pytest.raises(ValueError):
        InitialCondition(0.0, 1.0, 0.0, sector_weights=((0, 0.5), (1, 0.4)))
    narrow = InitialCondition(center=0.0, width=0.3, momentum=0.0)
    with pytest.raises(ValueError):
        narrow.validate_on_grid(GRID)  # width below 2 dz
    edge = InitialCondition(center=-35.0, width=2.0, momentum=0.0)
    with pytest.raises(ValueError):
        edge.validate_on_grid(GRID)  # support too close to the boundary


def test_gaussian_packet_normalized_and_centered():
    packet = gaussian_packet(GRID, center=-5.0, width=2.0, momentum=1.5)
    assert np.sum(np.abs(packet) ** 2) * GRID.dz == pytest.approx(1.0, abs=1e-12)
    state = make_state(GRID, [packet, np.zeros_like(packet)])
    assert mean_position(state) == pytest.approx(-5.0, abs=1e-9)


# ---------------------------------------------------------------------------
# potential matrix and its exponential
# ---------------------------------------------------------------------------

def test_potential_matrix_coupling_off_is_diagonal():
    p = SystemParams(1.0, 0.4, 1.0, 0.3)
    m = potential_matrix(p, ModeProfile.zero((-1, 1)), 0.0)
    assert np.allclose(m, np.diag([0.7, 0.3]), atol=1e-15)


def test_potential_matrix_resonant_eigenvalues():
    p = SystemParams(1.0, 0.0, 0.0, 0.5, photon_n=3)
    m = potential_matrix(p, ModeProfile.mesa(), 0.0)
    evals = np.linalg.eigvalsh(m)
    assert evals == pytest.approx([-1.0, 1.0], rel=1e-12)  # +-coupling*sqrt(n+1)


def test_potential_matrix_matches_closed_form_eigenvalues():
    from simcav.model import eigenvalues

    p = SystemParams(1.0, 0.4, 1.0, 0.3)
    m = potential_matrix(p, ModeProfile.mesa(), 0.0)
    evals = np.linalg.eigvalsh(m)
    e_plus, e_minus = eigenvalues(p, 1.0)
    assert evals[1] == pytest.approx(e_plus, abs=1e-12)
    assert evals[0] == pytest.approx(e_minus, abs=1e-12)
    assert np.allclose(m, m.conj().T)


def test_potential_step_matches_matrix_exponential():
    # closed-form 2x2 exponential against an independent dense expm
    expm = pytest.importorskip("scipy.linalg").expm
    p = SystemParams(2.0, 0.7, 1.3, 0.4, photon_n=2)
    profile = ModeProfile.gaussian(-4, 4, width=1.0)
    grid = Grid(-40.0, 40.0, 128, dt=0.37, n_steps=1)
    prop = BarePropagator(p, profile, grid)
    for idx in (0, 17, 64, 100):
        z = grid.z[idx]
        u_exact = expm(-1j * potential_matrix(p, profile, z) * grid.dt)
        u_ours = np.array(
            [[prop._u00[idx], prop._u01[idx]], [prop._u01[idx], prop._u11[idx]]]
        )
        assert np.max(np.abs(u_ours - u_exact)) < 1e-13


# ---------------------------------------------------------------------------
# bare integrator oracles
# ---------------------------------------------------------------------------

def test_free_packet_drift_matches_analytic():
    p = SystemParams(mass=1.0, detuning=0.0, field_freq=0.0, coupling=0.1)
    profile = ModeProfile.zero((-1.0, 1.0))
    grid = Grid(-40.0, 40.0, 512, dt=2e-3, n_steps=1000)
    init = InitialCondition(center=-20.0, width=2.0, momentum=3.0)
    traj = evolve(init, p, profile, grid, Basis.BARE, snapshot_stride=250)
    expected = -20.0 + 3.0 * grid.dt * grid.n_steps / p.mass
    assert mean_position(traj.final_state) == pytest.approx(expected, abs=1e-6)


def test_frozen_rabi_population():
    lam = 0.8
    p = SystemParams(mass=1e6, detuning=0.0, field_freq=1.0, coupling=lam, photon_n=0)
    grid = Grid(-40.0, 40.0, 128, dt=2e-3, n_steps=1000)
    init = InitialCondition(center=0.0, width=2.0, momentum=0.0)
    traj = evolve(init, p, profile=ModeProfile.mesa(), grid=grid, basis_mode=Basis.BARE,
                  snapshot_stride=50)
    for t, state in zip(traj.times, traj.states):
        p_e = float(np.sum(np.abs(state.amps[0]) ** 2) * grid.dz)
        assert p_e == pytest.approx(math.cos(lam * t) ** 2, abs=1e-6)


def test_strang_splitting_error_scales_quadratically():
    p = SystemParams(mass=1.0, detuning=1.0, field_freq=1.0, coupling=1.0)
    profile = ModeProfile.gaussian(-6.0, 6.0, width=1.5)
    init = InitialCondition(center=-11.0, width=3.0, momentum=1.3, internal="dressed-plus")
    T = 2.0

    def final(dt):
        n = int(round(T / dt))
        grid = Grid(-48.0, 48.0, 512, dt=dt, n_steps=n)
        traj = evolve(init, p, profile, grid, Basis.BARE, snapshot_stride=n)
        return traj.final_state.amps, grid.dz

    ref, dz = final(2.5e-4)
    errors = []
    for dt in (8e-3, 4e-3, 2e-3):
        amps, _ = final(dt)
        errors.append(float(np.sqrt(np.sum(np.abs(amps - ref) ** 2) * dz)))
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.3 < coarse / fine < 4.7  # second order: ratio ~ 4 per halving


def test_norm_is_conserved_every_step():
    p = SystemParams(mass=1.0, detuning=0.6, field_freq=1.0, coupling=1.0)
    profile = ModeProfile.sine_squared(-4.0, 4.0, half_periods=2)
    grid = Grid(-40.0, 40.0, 256, dt=5e-3, n_steps=200)
    init = InitialCondition(center=-12.0, width=2.0, momentum=2.0)
    norms = []
    evolve(init, p, profile, grid, Basis.BARE,
           observer=lambda t, s: norms.append(s.norm()))
    assert max(abs(n - 1.0) for n in norms) < 1e-12


# ---------------------------------------------------------------------------
# basis transforms
# ---------------------------------------------------------------------------

def test_transform_at_symmetric_mixing():
    p = SystemParams(1.0, 0.0, 1.0, 1.0)
    frame = DressedFrame(p, ModeProfile.mesa())
    packet = gaussian_packet(GRID, 0.0, 2.0, 0.0)
    bare = make_state(GRID, [packet, np.zeros_like(packet)])
    dressed = to_dressed(bare, frame)
    # theta = pi/4: |n,e> projects equally on both branches
    assert np.allclose(dressed.amps[0], packet / math.sqrt(2), atol=1e-14)
    assert np.allclose(dressed.amps[1], packet / math.sqrt(2), atol=1e-14)


def test_transform_mesa_is_z_independent():
    p = SystemParams(1.0, 0.8, 1.0, 0.5, photon_n=1)
    frame = DressedFrame(p, ModeProfile.mesa())
    cos_t, sin_t = frame.rotation(GRID.z)
    assert np.ptp(cos_t) == 0.0 and np.ptp(sin_t) == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), detuning=st.floats(-3.0, 3.0, allow_nan=False))
def test_transform_round_trip_random_states(seed, detuning):
    rng = np.random.default_rng(seed)
    p = SystemParams(1.0, detuning, 1.0, 0.7)
    # width chosen so the Gaussian tail stays representable over the whole
    # grid: at detuning = 0 an underflowed f would make the frame degenerate
    frame = DressedFrame(p, ModeProfile.gaussian(-4.0, 4.0, width=1.4))
    amps = rng.normal(size=(2, GRID.n_points)) + 1j * rng.normal(size=(2, GRID.n_points))
    amps /= math.sqrt(np.sum(np.abs(amps) ** 2) * GRID.dz)
    state = make_state(GRID, amps)
    back = to_bare(to_dressed(state, frame), frame)
    assert np.max(np.abs(back.amps - state.amps)) < 1e-13
    assert back.norm() == pytest.approx(state.norm(), abs=1e-13)


def test_transform_requires_matching_basis_and_sector():
    p = SystemParams(1.0, 0.5, 1.0, 1.0)
    frame = DressedFrame(p, ModeProfile.mesa())
    packet = gaussian_packet(GRID, 0.0, 2.0, 0.0)
    bare = make_state(GRID, [packet, np.zeros_like(packet)])
    with pytest.raises(ValueError):
        to_bare(bare, frame)
    wrong_sector = make_state(GRID, bare.amps, sector=3)
    with pytest.raises(ValueError):
        to_dressed(wrong_sector, frame)


# ---------------------------------------------------------------------------
# dressed integrator
# ---------------------------------------------------------------------------

def test_dressed_mesa_branches_stay_isolated():
    p = SystemParams(mass=10.0, detuning=0.4, field_freq=1.0, coupling=1.0)
    grid = Grid(-48.0, 48.0, 256, dt=2e-2, n_steps=500)
    init = InitialCondition(center=-10.0, width=2.0, momentum=0.5, internal="dressed-plus")
    minus = []
    evolve(init, p, ModeProfile.mesa(), grid, Basis.DRESSED,
           observer=lambda t, s: minus.append(float(np.sum(np.abs(s.amps[1]) ** 2))))
    assert max(minus) == 0.0


def test_dressed_mesa_matches_bare_cross_check():
    # constant f: dressed equations reduce to two uncoupled branch equations;
    # the bare split-operator run is the independent oracle.
    p = SystemParams(mass=10.0, detuning=0.4, field_freq=0.0, coupling=1.0)
    grid = Grid(-48.0, 48.0, 256, dt=1e-3, n_steps=5000)
    init = InitialCondition(center=-10.0, width=2.0, momentum=0.5, internal="dressed-plus")
    bare = evolve(init, p, ModeProfile.mesa(), grid, Basis.BARE, snapshot_stride=5000)
    dressed = evolve(init, p, ModeProfile.mesa(), grid, Basis.DRESSED, snapshot_stride=5000)
    diff = bare.final_state.amps - to_bare(dressed.final_state, dressed.frame).amps
    assert float(np.sqrt(np.sum(np.abs(diff) ** 2) * grid.dz)) < 1e-5


def test_dressed_zero_detuning_decouples_on_smooth_profile():
    # theta is pinned at pi/4, so branches decouple even though f varies
    p = SystemParams(mass=1.0, detuning=0.0, field_freq=1.0, coupling=1.0)
    profile = ModeProfile.gaussian(-6.0, 6.0, width=1.5)
    grid = Grid(-48.0, 48.0, 512, dt=2e-3, n_steps=2000)
    init = InitialCondition(center=-11.0, width=2.0, momentum=2.0, internal="dressed-plus")
    traj = evolve(init, p, profile, grid, Basis.DRESSED, snapshot_stride=500)
    for state in traj.states:
        assert float(np.sum(np.abs(state.amps[1]) ** 2) * grid.dz) < 1e-12


def test_dressed_gaussian_short_run_matches_bare():
    p = SystemParams(mass=1.0, detuning=1.0, field_freq=1.0, coupling=1.0)
    profile = ModeProfile.gaussian(-6.0, 6.0, width=1.5)
    grid = Grid(-48.0, 48.0, 512, dt=5e-4, n_steps=4000)
    init = InitialCondition(center=-11.0, width=3.0, momentum=1.3, internal="dressed-plus")
    bare = evolve(init, p, profile, grid, Basis.BARE, snapshot_stride=4000)
    dressed = evolve(init, p, profile, grid, Basis.DRESSED, snapshot_stride=4000)
    diff = bare.final_state.amps - to_bare(dressed.final_state, dressed.frame).amps
    assert float(np.sqrt(np.sum(np.abs(diff) ** 2) * grid.dz)) < 1e-6


def test_dressed_norm_conservation():
    p = SystemParams(mass=1.0, detuning=1.0, field_freq=1.0, coupling=1.0)
    profile = ModeProfile.gaussian(-6.0, 6.0, width=1.5)
    grid = Grid(-48.0, 48.0, 256, dt=1e-3, n_steps=1000)
    init = InitialCondition(center=-11.0, width=2.5, momentum=1.0, internal="dressed-plus")
    norms = []
    evolve(init, p, profile, grid, Basis.DRESSED,
           observer=lambda t, s: norms.append(s.norm()))
    assert max(abs(n - 1.0) for n in norms) < 1e-11


# ---------------------------------------------------------------------------
# failure modes
# ---------------------------------------------------------------------------

def test_grid_too_coarse_on_evolve():
    p = SystemParams(1.0, 0.5, 1.0, 1.0)
    grid = Grid(-40.0, 40.0, 64, dt=1e-3, n_steps=10)  # k_max = pi/1.25
    init = InitialCondition(center=0.0, width=3.0, momentum=5.0)
    with pytest.raises(GridTooCoarse):
        evolve(init, p, ModeProfile.mesa(), grid, Basis.BARE)


def test_grid_too_coarse_on_single_step():
    p = SystemParams(1.0, 0.5, 1.0, 1.0)
    grid = Grid(-40.0, 40.0, 128, dt=1e-3, n_steps=1)
    z = grid.z
    fast = np.exp(-(z**2) / 16.0 + 1j * 0.95 * grid.k_max * z).astype(complex)
    fast /= math.sqrt(np.sum(np.abs(fast) ** 2) * grid.dz)
    state = make_state(grid, [fast, np.zeros_like(fast)])
    with pytest.raises(GridTooCoarse):
        step_bare(state, p, ModeProfile.mesa(), grid)


def test_linear_solve_failure_for_huge_dt():
    p = SystemParams(mass=1.0, detuning=1.0, field_freq=1.0, coupling=1.0)
    profile = ModeProfile.gaussian(-6.0, 6.0, width=1.5)
    grid = Grid(-48.0, 48.0, 512, dt=5.0, n_steps=1)
    frame = DressedFrame(p, profile)
    packet = gaussian_packet(grid, -11.0, 3.0, 1.0)
    state = SpinorState(Basis.DRESSED, np.stack([packet, np.zeros_like(packet)]), 0, grid)
    with pytest.raises(LinearSolveFailure):
        step_dressed(state, frame, grid)


def test_guard_band_violation_when_packet_reaches_edge():
    p = SystemParams(mass=1.0, detuning=0.0, field_freq=0.0, coupling=0.1)
    profile = ModeProfile.zero((-1.0, 1.0))
    grid = Grid(-40.0, 40.0, 512, dt=5e-3, n_steps=4000)  # drift 3 * 20 = 60 >> box
    init = InitialCondition(center=-20.0, width=2.0, momentum=3.0)
    with pytest.raises(GuardBandViolation):
        evolve(init, p, profile, grid, Basis.BARE, snapshot_stride=100)


# ---------------------------------------------------------------------------
# evolve plumbing
# ---------------------------------------------------------------------------

def test_evolve_zero_steps_echoes_initial():
    p = SystemParams(1.0, 0.5, 1.0, 1.0)
    grid = Grid(-40.0, 40.0, 128, dt=1e-3, n_steps=0)
    init = InitialCondition(center=0.0, width=2.0, momentum=0.0)
    traj = evolve(init, p, ModeProfile.mesa(), grid, Basis.BARE)
    assert len(traj.states) == 1 and traj.times[0] == 0.0
    reference = build_initial_state(init, p, ModeProfile.mesa(), grid, Basis.BARE)
    assert np.array_equal(traj.final_state.amps, reference.amps)


def test_evolve_deterministic():
    p = SystemParams(1.0, 0.7, 1.0, 1.0)
    profile = ModeProfile.gaussian(-4.0, 4.0, width=1.0)
    grid = Grid(-40.0, 40.0, 256, dt=2e-3, n_steps=300)
    init = InitialCondition(center=-10.0, width=2.0, momentum=1.5, internal="dressed-plus")
    a = evolve(init, p, profile, grid, Basis.DRESSED, snapshot_stride=100)
    b = evolve(init, p, profile, grid, Basis.DRESSED, snapshot_stride=100)
    for sa, sb in zip(a.states, b.states):
        assert np.array_equal(sa.amps, sb.amps)


def test_evolve_snapshot_count_and_final_inclusion():
    p = SystemParams(1.0, 0.5, 1.0, 1.0)
    grid = Grid(-40.0, 40.0, 128, dt=1e-3, n_steps=100)
    init = InitialCondition(center=0.0, width=2.0, momentum=0.0)
    traj = evolve(init, p, ModeProfile.mesa(), grid, Basis.BARE, snapshot_stride=10)
    assert len(traj.states) == 11  # t=0 plus every 10th step
    assert traj.times[-1] == pytest.approx(0.1)
    odd = evolve(init, p, ModeProfile.mesa(), grid, Basis.BARE, snapshot_stride=33)
    assert odd.times[-1] == pytest.approx(0.1)  # final state always recorded


def test_multi_sector_runs_are_independent_and_ordered():
    weights = ((0, 0.25), (2, 0.75))
    p = SystemParams(mass=1e6, detuning=0.0, field_freq=1.0, coupling=1.0)
    grid = Grid(-40.0, 40.0, 128, dt=1e-2, n_steps=50)
    init = InitialCondition(0.0, 2.0, 0.0, sector_weights=weights)
    multi = evolve(init, p, ModeProfile.mesa(), grid, Basis.BARE, snapshot_stride=10)
    assert isinstance(multi, MultiTrajectory)
    assert [t.params.photon_n for t in multi.trajectories] == [0, 2]
    single = evolve(InitialCondition(0.0, 2.0, 0.0), p, ModeProfile.mesa(), grid,
                    Basis.BARE, snapshot_stride=10)
    assert np.array_equal(multi.trajectories[0].final_state.amps, single.final_state.amps)


def test_default_time_step_resolves_both_scales():
    p = SystemParams(mass=1.0, detuning=2.0, field_freq=1.0, coupling=1.0)
    init = InitialCondition(center=0.0, width=2.0, momentum=3.0)
    dt = default_time_step(p, ModeProfile.mesa(), init)
    r_max = math.hypot(1.0, 1.0)
    p_eff = 3.0 + 2.5
    assert dt == pytest.approx(0.05 / max(r_max, p_eff**2 / 2.0))
