"""Deterministic event queue ordered by (due time, insertion sequence).

Ties at the same due time are broken FIFO by an insertion counter, so a
given schedule sequence always replays identically.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any

from .common import SimulationError


class SchedulingInPast(SimulationError):
    """Raised when an event is scheduled before the current time."""


@dataclass(frozen=True)
class Event:
    due: int
    seq: int
    target: str
    payload: Any = None


class EventQueue:
    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._now = 0

    @property
    def now(self) -> int:
        return self._now

    def advance_to(self, t: int) -> None:
        """Move the queue's notion of current time forward (never back)."""
        if t > self._now:
            self._now = t

    def schedule(self, due: int, target: str, payload: Any = None) -> Event:
        if due < self._now:
            raise SchedulingInPast(f"event due {due} is before current time {self._now}")
        event = Event(due=due, seq=self._seq, target=target, payload=payload)
        self._seq += 1
        heapq.heappush(self._heap, (due, event.seq, event))
        return event

    def head_due(self) -> int | None:
        """Due time of the earliest pending event, or None when empty."""
        return self._heap[0][0] if self._heap else None

    def pop_next(self) -> Event | None:
        if not self._heap:
            return None
        due, _seq, event = heapq.heappop(self._heap)
        if due > self._now:
            self._now = due
        return event

    def __len__(self) -> int:
        return len(self._heap)
