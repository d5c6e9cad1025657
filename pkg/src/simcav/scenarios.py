"""Named experiment scenarios: deterministic result files plus a manifest.

Every scenario judges itself (pass/fail recorded in ``manifest.json``), so a
batch runner needs no external analysis.  For one configuration the CSV
outputs are byte-identical across runs; the manifest is too except for its
``wall-time-s`` entry.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import SCENARIOS, RunConfig
from .errors import SimcavError
from .model import ProfileKind, SystemParams, double_angle, eigenvalues, \
    identity_tan_forms, mixing_angle, rabi_radical
from .observables import ObservableSeries, branch_populations, scattering_coefficients, \
    series_from_trajectory
from .propagation import Basis, SpinorState, evolve, potential_matrix, to_bare

# Term-by-term record of the coupled branch equations as implemented; written
# into the basis-equivalence manifest so readers can audit the dressed-basis
# dynamics against the bare-basis oracle without digging through code.
DRESSED_EQUATIONS_NOTES = [
    "time derivative: i dC+-/dt (left-hand sides are time, not space, derivatives)",
    "diagonal: -(1/2M) d2/dz2 + V+-(z) + (dtheta/dz)^2/(2M); the gauge term "
    "(dtheta/dz)^2 carries the 1/2M prefactor and enters both branches with + sign",
    "off-diagonal: +(1/2M)(2 theta' d/dz + theta'') C- in the plus equation and "
    "-(1/2M)(2 theta' d/dz + theta'') C+ in the minus equation (equal magnitude, "
    "opposite sign; no extra overall minus on the minus-branch diagonal)",
    "coupling coefficients follow from d|+>/dz = +theta'|->, d|->/dz = -theta'|+>",
    "discretization: coupling applied as (theta' d/dz + d/dz theta')/(2M), "
    "algebraically identical and exactly anti-Hermitian on the grid",
]


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_csv(series: ObservableSeries, path: str) -> str:
    """Write the observable series: one row per snapshot, shortest round-trip
    decimals, UTF-8, LF line endings."""
    if len(series) == 0:
        raise ValueError("refusing to write an empty series")
    columns = series.columns()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(ObservableSeries.COLUMNS) + "\n")
        for i in range(len(series)):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\n")
    return path


def emit_density_csv(state: SpinorState, path: str) -> str:
    """Write |amplitude|^2 of both components against z."""
    z = state.grid.z
    da = np.abs(state.amps[0]) ** 2
    db = np.abs(state.amps[1]) ** 2
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("z,density_a,density_b\n")
        for i in range(len(z)):
            fh.write(f"{_fmt(z[i])},{_fmt(da[i])},{_fmt(db[i])}\n")
    return path


def _emit_table(path: str, header: list[str], rows: list[tuple]) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


@dataclass
class ScenarioResult:
    passed: bool
    assertion: str
    details: dict
    outputs: list[str]


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _scenario_identities(config: RunConfig, outdir: str) -> ScenarioResult:
    lam = config.params.coupling
    points = config.identities_ratio_points
    ratios = np.concatenate(
        [-np.logspace(-3, 3, points)[::-1], [0.0], np.logspace(-3, 3, points)]
    )
    sectors = np.arange(config.identities_n_max + 1)
    max_tan = max_unit = max_angle = max_eig = 0.0
    rows = []
    for ratio in ratios:
        for n in sectors:
            params = replace(config.params, detuning=ratio * lam, photon_n=int(n))
            cos2, sin2, _ = double_angle(params, 1.0)
            unit_res = abs(cos2 * cos2 + sin2 * sin2 - 1.0)
            theta = mixing_angle(params, 1.0)
            angle_res = max(abs(cos2 - math.cos(2 * theta)), abs(sin2 - math.sin(2 * theta)))
            t1, t2 = identity_tan_forms(params, 1.0)
            tan_res = abs(t1 - t2) / (1.0 + abs(t1))
            matrix = potential_matrix(params, config.profile, 0.0).real
            evals, evecs = np.linalg.eigh(matrix)
            e_plus, e_minus = eigenvalues(params, 1.0)
            eig_res = max(
                abs(evals[1] - e_plus) / (1.0 + abs(e_plus)),
                abs(evals[0] - e_minus) / (1.0 + abs(e_minus)),
            )
            vec_plus = np.array([math.sin(theta), math.cos(theta)])
            eig_res = max(eig_res, 1.0 - abs(float(evecs[:, 1] @ vec_plus)))
            max_tan = max(max_tan, tan_res)
            max_unit = max(max_unit, unit_res)
            max_angle = max(max_angle, angle_res)
            max_eig = max(max_eig, eig_res)
            rows.append((ratio, n, tan_res, unit_res, angle_res, eig_res))
    out = _emit_table(
        os.path.join(outdir, "identities.csv"),
        ["detuning-ratio", "n", "tan-residual", "unity-residual", "angle-residual", "eigen-residual"],
        rows,
    )
    passed = max_tan < 1e-12 and max_unit < 1e-14 and max_angle < 1e-12 and max_eig < 1e-12
    details = {
        "grid-points": len(rows),
        "max-tan-residual": max_tan,
        "max-unity-residual": max_unit,
        "max-angle-residual": max_angle,
        "max-eigen-residual": max_eig,
    }
    return ScenarioResult(passed, "identity residuals below tolerance", details, [out])


def _frozen_inversion_formula(params: SystemParams, times: np.ndarray) -> np.ndarray:
    r = rabi_radical(params, 1.0)
    g = params.sector_coupling
    return 1.0 - (2.0 * g * g / (r * r)) * np.sin(r * times) ** 2


def _scenario_rabi(config: RunConfig, outdir: str) -> ScenarioResult:
    if config.profile.kind is not ProfileKind.MESA:
        raise SimcavError("rabi scenario requires the mesa profile")
    traj = evolve(
        config.initial,
        config.params,
        config.profile,
        config.grid,
        config.basis_mode,
        snapshot_stride=config.snapshot_stride,
        interaction_picture=config.interaction_picture,
    )
    series = series_from_trajectory(traj)
    out = emit_csv(series, os.path.join(outdir, "series.csv"))
    if config.initial.sector_weights is None and config.initial.internal == "bare-excited":
        reference = _frozen_inversion_formula(config.params, series.times)
        max_err = float(np.abs(series.inversion - reference).max())
        passed = max_err <= 1e-6
        assertion = "inversion matches the detuned two-level formula to 1e-6"
    else:
        weights = config.initial.sector_weights or ((config.params.photon_n, 1.0),)
        reference = sum(
            w * _frozen_inversion_formula(replace(config.params, photon_n=n), series.times)
            for n, w in weights
        )
        max_err = float(np.abs(series.inversion - reference).max())
        passed = max_err <= 1e-6
        assertion = "inversion matches the weighted per-sector formula to 1e-6"
    details = {"max-inversion-error": max_err, "snapshots": len(series)}
    return ScenarioResult(passed, assertion, details, [out])


def _scenario_decoupling(config: RunConfig, outdir: str) -> ScenarioResult:
    if config.profile.kind is not ProfileKind.MESA:
        raise SimcavError("decoupling scenario requires the mesa profile")
    if config.initial.internal not in ("dressed-plus", "dressed-minus"):
        raise SimcavError("decoupling scenario requires a dressed-branch preparation")
    minor_index = 1 if config.initial.internal == "dressed-plus" else 0
    worst = {"value": 0.0}

    # In dressed mode the cross population is watched every step; in bare mode
    # it is read from the snapshot series below.
    def watch(_t, state):
        pop = float(np.sum(np.abs(state.amps[minor_index]) ** 2) * state.grid.dz)
        worst["value"] = max(worst["value"], pop)

    traj = evolve(
        config.initial,
        config.params,
        config.profile,
        config.grid,
        config.basis_mode,
        snapshot_stride=config.snapshot_stride,
        interaction_picture=config.interaction_picture,
        observer=watch if config.basis_mode is Basis.DRESSED else None,
    )
    series = series_from_trajectory(traj)
    cross = series.pop_minus if minor_index == 1 else series.pop_plus
    worst["value"] = max(worst["value"], float(np.abs(cross).max()))
    outputs = [
        emit_csv(series, os.path.join(outdir, "series.csv")),
        emit_density_csv(traj.states[0], os.path.join(outdir, "density_initial.csv")),
        emit_density_csv(traj.final_state, os.path.join(outdir, "density_final.csv")),
    ]
    passed = worst["value"] < 1e-10
    details = {"max-cross-population": worst["value"], "steps": config.grid.n_steps}
    return ScenarioResult(passed, "cross-branch population stays below 1e-10", details, outputs)


def _scenario_scattering(config: RunConfig, outdir: str) -> ScenarioResult:
    traj = evolve(
        config.initial,
        config.params,
        config.profile,
        config.grid,
        config.basis_mode,
        snapshot_stride=config.snapshot_stride,
        interaction_picture=config.interaction_picture,
    )
    series = series_from_trajectory(traj)
    reflected, transmitted, inside = scattering_coefficients(
        traj.final_state, config.profile, config.grid, config.cleared_threshold
    )
    norm = traj.final_state.norm()
    budget = abs(reflected + transmitted + inside - norm)
    outputs = [
        emit_csv(series, os.path.join(outdir, "series.csv")),
        emit_density_csv(traj.final_state, os.path.join(outdir, "density_final.csv")),
    ]
    passed = budget <= 1e-9 and inside < config.cleared_threshold
    details = {
        "reflected": reflected,
        "transmitted": transmitted,
        "inside": inside,
        "probability-budget-residual": budget,
    }
    return ScenarioResult(passed, "probabilities sum to the norm and the packet cleared", details, outputs)


def _sweep_workers() -> int:
    raw = os.environ.get("SIMCAV_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return max(1, n) if n else min(4, os.cpu_count() or 1)


def _scenario_adiabatic_sweep(config: RunConfig, outdir: str) -> ScenarioResult:
    def run_point(momentum: float, steps: int):
        initial = replace(config.initial, momentum=momentum)
        grid = replace(config.grid, n_steps=steps)
        traj = evolve(
            initial,
            config.params,
            config.profile,
            grid,
            Basis.BARE,
            snapshot_stride=steps,
            interaction_picture=config.interaction_picture,
        )
        final = traj.final_state
        pop_plus, pop_minus = branch_populations(final, traj.frame)
        series = series_from_trajectory(traj)
        return (momentum, pop_plus, pop_minus, float(series.reflect[-1]), float(series.transmit[-1]))

    with ThreadPoolExecutor(max_workers=_sweep_workers()) as pool:
        rows = list(pool.map(run_point, config.sweep_values, config.sweep_steps))

    out = _emit_table(
        os.path.join(outdir, "sweep.csv"),
        ["packet-momentum", "pop_plus", "pop_minus", "reflect", "transmit"],
        rows,
    )
    transfers = [row[2] for row in rows]
    passed = all(b <= a * (1.0 + 1e-12) for a, b in zip(transfers, transfers[1:]))
    details = {
        "momenta": list(config.sweep_values),
        "transfers": transfers,
    }
    return ScenarioResult(
        passed, "branch transfer nonincreasing along the descending velocity ladder", details, [out]
    )


def _scenario_basis_equivalence(config: RunConfig, outdir: str) -> ScenarioResult:
    bare = evolve(
        config.initial,
        config.params,
        config.profile,
        config.grid,
        Basis.BARE,
        snapshot_stride=max(1, config.grid.n_steps // 16),
        interaction_picture=config.interaction_picture,
    )
    dressed = evolve(
        config.initial,
        config.params,
        config.profile,
        config.grid,
        Basis.DRESSED,
        snapshot_stride=max(1, config.grid.n_steps // 16),
        interaction_picture=config.interaction_picture,
    )
    final_dressed = to_bare(dressed.final_state, dressed.frame)
    diff = bare.final_state.amps - final_dressed.amps
    distance = float(np.sqrt(np.sum(np.abs(diff) ** 2) * config.grid.dz))
    outputs = [
        emit_csv(series_from_trajectory(bare), os.path.join(outdir, "series_bare.csv")),
        emit_csv(series_from_trajectory(dressed), os.path.join(outdir, "series_dressed.csv")),
    ]
    passed = distance <= config.equivalence_tol
    details = {
        "l2-distance": distance,
        "tolerance": config.equivalence_tol,
        "dressed-equations-notes": DRESSED_EQUATIONS_NOTES,
    }
    return ScenarioResult(passed, "dressed run matches the bare oracle in L2", details, outputs)


_SCENARIO_FNS = {
    "identities": _scenario_identities,
    "rabi": _scenario_rabi,
    "decoupling": _scenario_decoupling,
    "scattering": _scenario_scattering,
    "adiabatic-sweep": _scenario_adiabatic_sweep,
    "basis-equivalence": _scenario_basis_equivalence,
}


def run(config: RunConfig) -> int:
    """Execute the configured scenario; returns the process exit status
    (0 pass, 3 numerical failure) and writes result files plus manifest."""
    outdir = config.output_dir
    os.makedirs(outdir, exist_ok=True)
    started = time.perf_counter()
    failure: str | None = None
    result: ScenarioResult | None = None
    try:
        result = _SCENARIO_FNS[config.scenario](config, outdir)
    except (SimcavError, ValueError) as exc:
        failure = f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - started

    manifest = {
        "scenario": config.scenario,
        "config": config.raw,
        "version": __version__,
        "wall-time-s": wall,
        "passed": bool(result.passed) if result else False,
        "assertion": result.assertion if result else failure,
        "details": result.details if result else {"error": failure},
        "outputs": [os.path.basename(p) for p in result.outputs] if result else [],
    }
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if failure is not None:
        print(f"numerical failure: {failure}")
        return 3
    if not result.passed:
        print(f"scenario assertion failed: {result.assertion}")
        return 3
    return 0


def describe_scenarios() -> str:
    width = max(len(name) for name in SCENARIOS)
    return "\n".join(f"{name:<{width}}  {text}" for name, text in sorted(SCENARIOS.items()))
