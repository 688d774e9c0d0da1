"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for every error the simulator raises on purpose."""


class NormalizationError(SimulationError):
    """A state or parameter is not normalized within tolerance."""


class RegistryError(SimulationError):
    """A spatial mode is missing from, or misused in, a photon's mode registry."""


class GuardViolation(SimulationError):
    """An element was applied to amplitudes it cannot transform unitarily."""


class ElementError(SimulationError):
    """An element constructor received invalid parameters."""
