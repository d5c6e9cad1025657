"""Run configuration: one flat JSON document with kebab-case keys."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError
from .model import ModeProfile, ProfileKind, SystemParams
from .propagation import Basis, Grid, InitialCondition, default_time_step

SCENARIOS = {
    "identities": "closed-form identity residuals over a (detuning/coupling, n) grid",
    "rabi": "frozen-atom inversion vs the detuned two-level formula",
    "decoupling": "constant mode function: dressed branches must not mix",
    "scattering": "packet on a compact mode: reflection/transmission readout",
    "adiabatic-sweep": "branch transfer across a descending packet-velocity ladder",
    "basis-equivalence": "dressed-basis propagation against the bare-basis oracle",
}

_DYNAMIC = ("rabi", "decoupling", "scattering", "adiabatic-sweep", "basis-equivalence")

_KNOWN_KEYS = {
    "scenario",
    "mass",
    "detuning",
    "field-freq",
    "coupling",
    "photon-n",
    "profile-kind",
    "profile-support",
    "profile-width",
    "profile-half-periods",
    "grid-z-min",
    "grid-z-max",
    "grid-points",
    "time-step",
    "steps",
    "packet-center",
    "packet-width",
    "packet-momentum",
    "internal-state",
    "sector-weights",
    "basis-mode",
    "snapshot-stride",
    "interaction-picture",
    "output-dir",
    "cleared-threshold",
    "equivalence-tol",
    "sweep-axis",
    "sweep-values",
    "sweep-steps",
    "identities-ratio-points",
    "identities-n-max",
}


def _require(raw: dict, key: str, kind, where: str = "config"):
    if key not in raw:
        raise ConfigError(key, f"missing required key for {where}")
    value = raw[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if kind is str and not isinstance(value, str):
        raise ConfigError(key, f"expected a string, got {value!r}")
    return value


def _optional(raw: dict, key: str, kind, default):
    if key not in raw:
        return default
    return _require(raw, key, kind)


@dataclass
class RunConfig:
    """Validated scenario configuration plus the constructed domain objects."""

    scenario: str
    params: SystemParams
    profile: ModeProfile
    grid: Grid | None
    initial: InitialCondition | None
    basis_mode: Basis
    snapshot_stride: int
    interaction_picture: bool
    output_dir: str
    cleared_threshold: float
    equivalence_tol: float
    sweep_axis: str | None
    sweep_values: list[float] | None
    sweep_steps: list[int] | None
    identities_ratio_points: int
    identities_n_max: int
    raw: dict[str, Any] = field(repr=False, default_factory=dict)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be a JSON object")
        for key in raw:
            if key not in _KNOWN_KEYS:
                raise ConfigError(key, "unknown configuration key")

        scenario = _require(raw, "scenario", str)
        if scenario not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {scenario!r}; one of {sorted(SCENARIOS)}")

        try:
            params = SystemParams(
                mass=_require(raw, "mass", float),
                detuning=_require(raw, "detuning", float),
                field_freq=_optional(raw, "field-freq", float, 1.0),
                coupling=_require(raw, "coupling", float),
                photon_n=_optional(raw, "photon-n", int, 0),
            )
        except ValueError as exc:
            raise ConfigError(str(exc).split(" ", 1)[0], str(exc))

        profile = cls._parse_profile(raw)
        grid = None
        initial = None
        if scenario in _DYNAMIC:
            initial = cls._parse_initial(raw)
            grid = cls._parse_grid(raw, params, profile, initial)
            try:
                initial.validate_on_grid(grid)
            except ValueError as exc:
                key = "packet-width" if "2 dz" in str(exc) else "packet-center"
                raise ConfigError(key, str(exc))

        basis_mode = _optional(raw, "basis-mode", str, "bare")
        try:
            basis = Basis(basis_mode)
        except ValueError:
            raise ConfigError("basis-mode", f"expected 'bare' or 'dressed', got {basis_mode!r}")

        stride = _optional(raw, "snapshot-stride", int, 1)
        if stride < 1:
            raise ConfigError("snapshot-stride", f"must be >= 1, got {stride}")

        ip = _optional(raw, "interaction-picture", bool, False)
        if not isinstance(ip, bool):
            raise ConfigError("interaction-picture", f"expected true/false, got {ip!r}")

        cleared = _optional(raw, "cleared-threshold", float, 0.01)
        if not 0.0 < cleared < 1.0:
            raise ConfigError("cleared-threshold", f"must be in (0, 1), got {cleared}")

        tol = _optional(raw, "equivalence-tol", float, 1e-6)
        sweep_axis, sweep_values, sweep_steps = cls._parse_sweep(raw, scenario)

        ratio_points = _optional(raw, "identities-ratio-points", int, 121)
        n_max = _optional(raw, "identities-n-max", int, 50)
        if ratio_points < 2:
            raise ConfigError("identities-ratio-points", "need at least 2 points per decade span")
        if n_max < 0:
            raise ConfigError("identities-n-max", "must be >= 0")

        return cls(
            scenario=scenario,
            params=params,
            profile=profile,
            grid=grid,
            initial=initial,
            basis_mode=basis,
            snapshot_stride=stride,
            interaction_picture=ip,
            output_dir=_optional(raw, "output-dir", str, "."),
            cleared_threshold=cleared,
            equivalence_tol=tol,
            sweep_axis=sweep_axis,
            sweep_values=sweep_values,
            sweep_steps=sweep_steps,
            identities_ratio_points=ratio_points,
            identities_n_max=n_max,
            raw=dict(raw),
        )

    @staticmethod
    def _parse_profile(raw: dict) -> ModeProfile:
        kind_name = _optional(raw, "profile-kind", str, "mesa")
        try:
            kind = ProfileKind(kind_name)
        except ValueError:
            raise ConfigError(
                "profile-kind", f"expected one of {[k.value for k in ProfileKind]}, got {kind_name!r}"
            )
        support = raw.get("profile-support")
        if support is not None:
            if (
                not isinstance(support, (list, tuple))
                or len(support) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in support)
            ):
                raise ConfigError("profile-support", f"expected [z-on, z-off], got {support!r}")
            support = (float(support[0]), float(support[1]))
        try:
            if kind is ProfileKind.MESA:
                return ModeProfile.mesa()
            if kind is ProfileKind.ZERO:
                return ModeProfile.zero(support if support else (0.0, 1.0))
            if support is None:
                raise ConfigError("profile-support", f"required for {kind.value} profile")
            if kind is ProfileKind.GAUSSIAN:
                width = raw.get("profile-width")
                if width is not None:
                    width = _require(raw, "profile-width", float)
                return ModeProfile.gaussian(*support, width=width)
            return ModeProfile.sine_squared(
                *support, half_periods=_optional(raw, "profile-half-periods", int, 1)
            )
        except ValueError as exc:
            raise ConfigError("profile-support", str(exc))

    @staticmethod
    def _parse_initial(raw: dict) -> InitialCondition:
        weights = raw.get("sector-weights")
        if weights is not None:
            try:
                weights = tuple((int(n), float(w)) for n, w in weights)
            except (TypeError, ValueError):
                raise ConfigError("sector-weights", f"expected [[n, weight], ...], got {weights!r}")
        try:
            return InitialCondition(
                center=_require(raw, "packet-center", float),
                width=_require(raw, "packet-width", float),
                momentum=_optional(raw, "packet-momentum", float, 0.0),
                internal=_optional(raw, "internal-state", str, "bare-excited"),
                sector_weights=weights,
            )
        except ValueError as exc:
            message = str(exc)
            key = "internal-state" if "internal" in message else (
                "sector-weights" if "weight" in message else "packet-width"
            )
            raise ConfigError(key, message)

    @staticmethod
    def _parse_grid(raw, params, profile, initial) -> Grid:
        dt = raw.get("time-step")
        if dt is None:
            dt = default_time_step(params, profile, initial)
        else:
            dt = _require(raw, "time-step", float)
        try:
            return Grid(
                z_min=_require(raw, "grid-z-min", float),
                z_max=_require(raw, "grid-z-max", float),
                n_points=_require(raw, "grid-points", int),
                dt=dt,
                n_steps=_require(raw, "steps", int),
            )
        except ValueError as exc:
            message = str(exc)
            key = "grid-points" if "n_points" in message else (
                "time-step" if "dt" in message else "steps" if "n_steps" in message else "grid-z-min"
            )
            raise ConfigError(key, message)

    @staticmethod
    def _parse_sweep(raw, scenario):
        axis = raw.get("sweep-axis")
        values = raw.get("sweep-values")
        steps = raw.get("sweep-steps")
        if scenario != "adiabatic-sweep":
            return axis, values, steps
        if axis != "packet-momentum":
            raise ConfigError("sweep-axis", "adiabatic-sweep requires sweep-axis = 'packet-momentum'")
        if (
            not isinstance(values, list)
            or len(values) < 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values)
        ):
            raise ConfigError("sweep-values", "expected a list of at least two momenta")
        values = [float(v) for v in values]
        if any(b >= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep-values", "momenta must be strictly descending")
        if steps is None:
            raise ConfigError("sweep-steps", "missing per-point step counts")
        if (
            not isinstance(steps, list)
            or len(steps) != len(values)
            or not all(isinstance(s, int) and not isinstance(s, bool) and s > 0 for s in steps)
        ):
            raise ConfigError("sweep-steps", "expected positive step counts, one per sweep value")
        return axis, values, steps


def validate_file(path: str) -> RunConfig:
    """Parse and fully validate; raises ConfigError with the offending field."""
    return RunConfig.from_file(path)
