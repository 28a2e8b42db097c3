"""
Kernel errors.
"""
from core.exceptions import SimulationError


class TimeTravel(SimulationError):
    """An event was scheduled before the current simulated time."""

    def __init__(self, time, clock):
        self.time = time
        self.clock = clock
        super().__init__(f"Cannot schedule an event at {time}us; clock is already at {clock}us")


class ClockRegression(SimulationError):
    """The queue handed out an event older than the last one dispatched."""
    pass


class NonPositiveRate(SimulationError):
    """An exponential draw was requested with a rate that is not positive."""
    pass


class SimulationFinished(SimulationError):
    """``run_until`` was called on a simulation that already produced its report."""
    pass
