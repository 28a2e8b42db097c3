"""
Simulation events.

An event is dispatched in ``(time, sequence)`` order. ``sequence`` is the
insertion counter of the queue, so two events at the same instant run in
the order they were scheduled.
"""
from enum import IntEnum
from typing import Any, NamedTuple


class EventKind(IntEnum):
    ARRIVAL = 1
    SERVICE_START = 2
    SERVICE_DONE = 3
    NODE_FAIL = 4
    NODE_REPAIR = 5
    DISK_FAIL = 6
    DISK_REPAIR = 7
    SITE_FAIL = 8
    SITE_REPAIR = 9
    FAILURE_DETECTED = 10
    TAKEOVER_DONE = 11
    ADD_CLONE = 12
    CLONE_JOINED = 13
    ADD_PARTITION = 14
    BUCKET_MOVE_DONE = 15
    GEOPLEX_DETECTED = 16
    SAMPLE = 17

    @property
    def label(self):
        """CamelCase name used in the trace log."""
        return ''.join(part.capitalize() for part in self.name.split('_'))


class Event(NamedTuple):
    time: int
    sequence: int
    kind: EventKind
    payload: Any = None
