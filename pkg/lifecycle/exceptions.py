"""
Lifecycle errors raised while a simulation runs.
"""
from core.exceptions import SimulationError


class UnknownPath(SimulationError):
    """A scenario event names a farm, service or node that does not exist."""

    def __init__(self, path):
        self.path = path
        super().__init__(f"Unknown path '{path}'")


class IllegalTransition(SimulationError):
    """A node was asked to move between two states the state machine forbids."""

    def __init__(self, node, previous, state):
        self.node = node
        self.previous = previous
        self.state = state
        super().__init__(f"Illegal transition of {node}: {previous.value} -> {state.value}")


class NoSurvivor(SimulationError):
    """Every member of a pack is down; its orphaned partitions wait for a repair."""
    pass


class NotRacs(SimulationError):
    """Clones can only be added to a cloned service."""
    pass


class NotRaps(SimulationError):
    """Partitions can only be added to a partitioned service."""
    pass
