"""Dressed-state algebra for a two-level atom coupled to one cavity mode.

Conventions (hbar = 1 throughout, frequencies in units of the vacuum
coupling unless stated otherwise):

* excitation sector n couples only |n,e> and |n+1,g>; two-component
  quantities are ordered (|n,e>, |n+1,g>),
* the position-dependent coupling is g(z) = coupling * f(z) * sqrt(n+1),
* the detuning enters as +detuning/2 on |n,e> and -detuning/2 on |n+1,g>,
* the half-splitting is R(z) = sqrt(detuning^2/4 + g(z)^2) and the branch
  energies are V+-(z) = field_freq*(n + 1/2) +- R(z),
* the mixing angle theta = 0.5*atan2(g, -detuning/2) lies in (0, pi/2)
  whenever g > 0, and the dressed branches read

      |+> = sin(theta)|n,e> + cos(theta)|n+1,g>
      |-> = cos(theta)|n,e> - sin(theta)|n+1,g>

The half-angle atan2 form is used instead of the textbook
arctan(g / (R - detuning/2)) because the latter denominator cancels
catastrophically for large positive detuning; the arctan forms are kept
as cross-check expressions in :func:`identity_tan_forms`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateFrame

__all__ = [
    "SystemParams",
    "ProfileKind",
    "ModeProfile",
    "DressedFrame",
    "rabi_radical",
    "eigenvalues",
    "mixing_angle",
    "identity_tan_forms",
    "double_angle",
]


def _maybe_scalar(x, *inputs):
    """Return a Python float when every input was scalar, else the array."""
    if all(np.ndim(v) == 0 for v in inputs):
        return float(x)
    return x


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of one run: atomic mass, atom-field detuning,
    mode frequency, vacuum coupling, and the excitation sector n."""

    mass: float
    detuning: float
    field_freq: float
    coupling: float
    photon_n: int = 0

    def __post_init__(self):
        for name in ("mass", "detuning", "field_freq", "coupling"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.mass <= 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if self.coupling <= 0:
            raise ValueError(f"coupling must be > 0, got {self.coupling}")
        if self.field_freq < 0:
            raise ValueError(f"field_freq must be >= 0, got {self.field_freq}")
        if not isinstance(self.photon_n, (int, np.integer)) or isinstance(self.photon_n, bool):
            raise ValueError(f"photon_n must be an integer, got {self.photon_n!r}")
        if self.photon_n < 0:
            raise ValueError(f"photon_n must be >= 0, got {self.photon_n}")
        object.__setattr__(self, "photon_n", int(self.photon_n))

    @property
    def sector_coupling(self) -> float:
        """Coupling at f = 1 in this sector: coupling * sqrt(n+1)."""
        return self.coupling * math.sqrt(self.photon_n + 1)

    @property
    def field_offset(self) -> float:
        """Common diagonal shift field_freq * (n + 1/2)."""
        return self.field_freq * (self.photon_n + 0.5)


class ProfileKind(str, Enum):
    MESA = "mesa"
    SINE_SQUARED = "sine-squared"
    GAUSSIAN = "gaussian"
    ZERO = "zero"


@dataclass(frozen=True)
class ModeProfile:
    """Cavity mode function f(z) with analytic first and second derivatives.

    ``support`` is the nominal interaction interval [z_on, z_off] used for
    scattering bookkeeping.  The mesa profile is the global constant f = 1
    (support is infinite); the Gaussian is evaluated globally and ``support``
    just marks where it is non-negligible.
    """

    kind: ProfileKind
    support: tuple[float, float] = (-math.inf, math.inf)
    width: float = 1.0
    half_periods: int = 1

    def __post_init__(self):
        z_on, z_off = self.support
        if not z_off > z_on:
            raise ValueError(f"support must be an increasing interval, got {self.support}")
        if self.kind in (ProfileKind.SINE_SQUARED, ProfileKind.GAUSSIAN):
            if not (math.isfinite(z_on) and math.isfinite(z_off)):
                raise ValueError(f"{self.kind.value} profile needs a finite support interval")
        if self.kind is ProfileKind.GAUSSIAN and self.width <= 0:
            raise ValueError(f"width must be > 0, got {self.width}")
        if self.kind is ProfileKind.SINE_SQUARED and self.half_periods < 1:
            raise ValueError(f"half_periods must be >= 1, got {self.half_periods}")

    # -- constructors ----------------------------------------------------

    @classmethod
    def mesa(cls) -> "ModeProfile":
        return cls(ProfileKind.MESA)

    @classmethod
    def zero(cls, support: tuple[float, float] = (0.0, 1.0)) -> "ModeProfile":
        return cls(ProfileKind.ZERO, support=tuple(support))

    @classmethod
    def sine_squared(cls, z_on: float, z_off: float, half_periods: int = 1) -> "ModeProfile":
        return cls(ProfileKind.SINE_SQUARED, support=(z_on, z_off), half_periods=half_periods)

    @classmethod
    def gaussian(cls, z_on: float, z_off: float, width: float | None = None) -> "ModeProfile":
        if width is None:
            width = (z_off - z_on) / 8.0
        return cls(ProfileKind.GAUSSIAN, support=(z_on, z_off), width=width)

    # -- evaluation ------------------------------------------------------

    @property
    def support_is_finite(self) -> bool:
        return math.isfinite(self.support[0]) and math.isfinite(self.support[1])

    @property
    def center(self) -> float:
        z_on, z_off = self.support
        return 0.5 * (z_on + z_off)

    def f(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind is ProfileKind.MESA:
            out = np.ones_like(z)
        elif self.kind is ProfileKind.ZERO:
            out = np.zeros_like(z)
        elif self.kind is ProfileKind.GAUSSIAN:
            u = (z - self.center) / self.width
            out = np.exp(-0.5 * u * u)
        else:  # sine-squared, compactly supported
            z_on, z_off = self.support
            q = self.half_periods * math.pi / (z_off - z_on)
            inside = (z >= z_on) & (z <= z_off)
            out = np.where(inside, np.sin(q * (z - z_on)) ** 2, 0.0)
        return _maybe_scalar(out, z)

    def df(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind in (ProfileKind.MESA, ProfileKind.ZERO):
            out = np.zeros_like(z)
        elif self.kind is ProfileKind.GAUSSIAN:
            u = (z - self.center) / self.width
            out = -(u / self.width) * np.exp(-0.5 * u * u)
        else:
            z_on, z_off = self.support
            q = self.half_periods * math.pi / (z_off - z_on)
            inside = (z >= z_on) & (z <= z_off)
            out = np.where(inside, q * np.sin(2.0 * q * (z - z_on)), 0.0)
        return _maybe_scalar(out, z)

    def d2f(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind in (ProfileKind.MESA, ProfileKind.ZERO):
            out = np.zeros_like(z)
        elif self.kind is ProfileKind.GAUSSIAN:
            u = (z - self.center) / self.width
            out = ((u * u - 1.0) / self.width**2) * np.exp(-0.5 * u * u)
        else:
            z_on, z_off = self.support
            q = self.half_periods * math.pi / (z_off - z_on)
            inside = (z >= z_on) & (z <= z_off)
            out = np.where(inside, 2.0 * q * q * np.cos(2.0 * q * (z - z_on)), 0.0)
        return _maybe_scalar(out, z)


# ---------------------------------------------------------------------------
# closed-form sector algebra
# ---------------------------------------------------------------------------

def rabi_radical(params: SystemParams, f_value):
    """Half the dressed splitting, R = sqrt(detuning^2/4 + g^2) >= |detuning|/2."""
    g = params.sector_coupling * np.asarray(f_value, dtype=float)
    out = np.hypot(0.5 * params.detuning, g)
    return _maybe_scalar(out, f_value)


def eigenvalues(params: SystemParams, f_value):
    """Branch energies (E+, E-) = field_freq*(n+1/2) +- R."""
    r = np.asarray(rabi_radical(params, f_value))
    c = params.field_offset
    return _maybe_scalar(c + r, f_value), _maybe_scalar(c - r, f_value)


def _coupling_and_radical(params, f_value):
    g = params.sector_coupling * np.asarray(f_value, dtype=float)
    return g, np.hypot(0.5 * params.detuning, g)


def mixing_angle(params: SystemParams, f_value):
    """Bare/dressed rotation angle in (0, pi/2) for g > 0.

    Computed as the half angle of atan2(g, -detuning/2), which is well
    conditioned for every detuning sign and magnitude.
    """
    g, r = _coupling_and_radical(params, f_value)
    if np.any(r == 0.0):
        raise DegenerateFrame("mixing angle undefined: detuning = 0 and coupling off")
    out = 0.5 * np.arctan2(g, -0.5 * params.detuning)
    return _maybe_scalar(out, f_value)


def identity_tan_forms(params: SystemParams, f_value):
    """Evaluate both closed forms of tan(theta) and return the pair.

    form1 = g / (R - detuning/2)      form2 = (R + detuning/2) / g

    Each form is evaluated with the conjugate trick on whichever of
    R -+ detuning/2 would cancel for the given detuning sign, so the pair
    agrees to ~1e-15 relative even at |detuning| / g = 1e3.
    """
    g, r = _coupling_and_radical(params, f_value)
    if np.any(g <= 0.0):
        raise DegenerateFrame("tan forms need g > 0")
    half = 0.5 * params.detuning
    if half > 0.0:
        denom = g * g / (r + half)
    else:
        denom = r - half
    form1 = g / denom
    if half < 0.0:
        numer = g * g / (r - half)
    else:
        numer = r + half
    form2 = numer / g
    return _maybe_scalar(form1, f_value), _maybe_scalar(form2, f_value)


def double_angle(params: SystemParams, f_value):
    """(cos 2theta, sin 2theta, tan 2theta) = (-detuning/2, g, g/(-detuning/2)) / R.

    tan 2theta is +-inf at zero detuning (2theta = pi/2); the sign follows
    the detuning side, with +inf returned exactly at detuning = 0.
    """
    g, r = _coupling_and_radical(params, f_value)
    if np.any(r == 0.0):
        raise DegenerateFrame("double angle undefined: detuning = 0 and coupling off")
    half = 0.5 * params.detuning
    cos2 = -half / r
    sin2 = g / r
    if half != 0.0:
        tan2 = g / (-half)
    else:
        tan2 = np.full_like(np.asarray(g, dtype=float), np.inf)
    return (
        _maybe_scalar(cos2, f_value),
        _maybe_scalar(sin2, f_value),
        _maybe_scalar(tan2, f_value),
    )


@dataclass(frozen=True)
class DressedFrame:
    """Position-dependent dressed basis of one excitation sector.

    Bundles the mixing angle, its spatial derivatives, the branch
    potentials V+-(z), and the bare<->dressed rotation columns.  Immutable;
    safe to share across threads.
    """

    params: SystemParams
    profile: ModeProfile

    def radical(self, z):
        return rabi_radical(self.params, self.profile.f(z))

    def theta(self, z):
        return mixing_angle(self.params, self.profile.f(z))

    def rotation(self, z):
        """(cos theta, sin theta) evaluated on z."""
        th = np.asarray(self.theta(z))
        return _maybe_scalar(np.cos(th), z), _maybe_scalar(np.sin(th), z)

    def potentials(self, z):
        """Branch potentials (V+, V-) = field_offset +- R(z)."""
        return eigenvalues(self.params, self.profile.f(z))

    def dtheta_dz(self, z):
        """d theta/dz = -detuning * g'(z) / (4 R(z)^2); zero for constant f
        and for zero detuning (theta pinned at pi/4)."""
        g, r = _coupling_and_radical(self.params, self.profile.f(z))
        if np.any(r == 0.0):
            raise DegenerateFrame("dtheta/dz undefined where R(z) = 0")
        if self.params.detuning == 0.0:
            out = np.zeros_like(np.asarray(r))
            return _maybe_scalar(out, z)
        gp = self.params.sector_coupling * np.asarray(self.profile.df(z), dtype=float)
        # divide by r twice: r*r can underflow where f is a denormal tail
        out = -0.25 * self.params.detuning * (gp / r) / r
        return _maybe_scalar(out, z)

    def d2theta_dz2(self, z):
        g, r = _coupling_and_radical(self.params, self.profile.f(z))
        if np.any(r == 0.0):
            raise DegenerateFrame("d2theta/dz2 undefined where R(z) = 0")
        if self.params.detuning == 0.0:
            out = np.zeros_like(np.asarray(r))
            return _maybe_scalar(out, z)
        scale = self.params.sector_coupling
        gp = scale * np.asarray(self.profile.df(z), dtype=float)
        gpp = scale * np.asarray(self.profile.d2f(z), dtype=float)
        bend = gpp - 2.0 * (g / r) * (gp / r) * gp
        out = -0.25 * self.params.detuning * (bend / r) / r
        return _maybe_scalar(out, z)
