"""
Event queue and simulated clock.
"""
import heapq
from functools import partial
from itertools import count

from engine.events import Event
from engine.exceptions import ClockRegression, TimeTravel

# Builds the tuple directly, skipping the generated ``__new__``
_new_event = partial(tuple.__new__, Event)


class EventQueue:
    """
    Binary heap of pending events plus the simulated clock.

    The clock only moves when an event is popped. Scheduling an event before
    the clock raises ``TimeTravel``, so every queued event is at or after it.
    """

    def __init__(self):
        self._heap = []
        self._sequence = count()
        self.now = 0

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)

    def schedule(self, time, kind, payload=None):
        """
        Enqueue an event with the next sequence number.

        Args:
            time (int): Dispatch time in microseconds
            kind (EventKind): Event kind
            payload: Kind-specific data

        Returns:
            Event: The queued event

        Raises:
            TimeTravel: If ``time`` is before the current clock
        """
        if time < self.now:
            raise TimeTravel(time, self.now)
        event = _new_event((time, next(self._sequence), kind, payload))
        heapq.heappush(self._heap, event)
        return event

    def peek_time(self):
        return self._heap[0].time if self._heap else None

    def pop(self):
        """Remove the earliest event and advance the clock to its time."""
        event = heapq.heappop(self._heap)
        if event.time < self.now:
            raise ClockRegression(f"Event at {event.time}us dispatched after {self.now}us")
        self.now = event.time
        return event

    def run(self, until, dispatch):
        """
        Pop and dispatch every event due at or before ``until``.

        Args:
            until (int): Last dispatch time in microseconds
            dispatch: Either a callable taking the event, or a mapping of
                ``EventKind`` to such callables

        Returns:
            int: Number of events dispatched
        """
        handlers = dispatch if hasattr(dispatch, '__getitem__') else None
        heap = self._heap
        heappop = heapq.heappop
        dispatched = 0
        while heap and heap[0][0] <= until:
            event = heappop(heap)
            self.now = event[0]
            if handlers is None:
                dispatch(event)
            else:
                handlers[event[2]](event)
            dispatched += 1
        return dispatched

    def advance_to(self, time):
        """Move the clock forward without dispatching anything."""
        if time < self.now:
            raise ClockRegression(f"Cannot move the clock back from {self.now}us to {time}us")
        self.now = time
