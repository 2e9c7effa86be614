from __future__ import annotations


class SimulationError(Exception):
    """Base class for every failure raised by the simulator modules."""


class DomainError(SimulationError, ValueError):
    pass


class GridError(SimulationError):
    pass


class WindowError(SimulationError):
    pass


class NoEchoFoundError(SimulationError):
    pass


class ResonanceNotFoundError(SimulationError):
    pass


class IntegrationError(SimulationError):
    def __init__(self, detuning: float, message: str):
        super().__init__(f"Bloch integration failed at detuning {detuning:.6g} Hz: {message}")
        self.detuning = detuning
