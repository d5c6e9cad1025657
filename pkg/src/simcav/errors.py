"""Exception types shared across the package."""


class SimcavError(Exception):
    """Base class for all simulator failures."""


class DegenerateFrame(SimcavError):
    """Dressed basis undefined: zero detuning with the coupling off (R = 0)."""


class GridTooCoarse(SimcavError):
    """Spectral grid cannot represent the packet's momentum content."""


class LinearSolveFailure(SimcavError):
    """Implicit-step linear solve diverged; dt/dz combination is pathological."""


class PacketNotCleared(SimcavError):
    """Scattering readout requested before the packet left the interaction region."""


class GuardBandViolation(SimcavError):
    """Wavepacket reached the guard band next to the periodic boundary."""


class ConfigError(SimcavError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
