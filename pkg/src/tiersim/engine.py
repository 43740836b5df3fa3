"""Deterministic discrete-event kernel.

Time is unsigned integer picoseconds. Events with equal timestamps dispatch
in insertion order, so a run is a pure function of (configuration, seed).
The kernel is strictly single-threaded; parallelism only ever exists across
independent simulations.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled in the simulated past."""


@dataclass(order=True)
class Event:
    time: int
    seq: int
    handler: Callable[[Any], None] = field(compare=False)
    payload: Any = field(compare=False, default=None)


@dataclass
class RunStats:
    dispatched: int
    now: int


class EventQueue:
    """Priority queue of events ordered by (time, insertion sequence)."""

    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._seq = 0
        self.now = 0
        self.dispatched = 0

    def schedule(self, time_ps: int, handler: Callable[[Any], None],
                 payload: Any = None) -> None:
        if time_ps < self.now:
            raise SchedulingError(
                f"event scheduled at {time_ps} ps, before current time {self.now} ps")
        heapq.heappush(self._heap, Event(int(time_ps), self._seq, handler, payload))
        self._seq += 1

    def schedule_in(self, delay_ps: int, handler: Callable[[Any], None],
                    payload: Any = None) -> None:
        self.schedule(self.now + int(delay_ps), handler, payload)

    def pending(self) -> int:
        return len(self._heap)

    def run_until(self, t_end_ps: int | float = math.inf) -> RunStats:
        """Dispatch every event with time <= t_end_ps in (time, seq) order.

        The simulated clock never decreases; when the queue drains early the
        clock still advances to t_end_ps (if finite) so that consecutive runs
        compose: run_until(t1); run_until(t2) == run_until(t2).
        """
        count = 0
        while self._heap and self._heap[0].time <= t_end_ps:
            ev = heapq.heappop(self._heap)
            self.now = ev.time
            ev.handler(ev.payload)
            count += 1
        if t_end_ps != math.inf and t_end_ps > self.now:
            self.now = int(t_end_ps)
        self.dispatched += count
        return RunStats(dispatched=count, now=self.now)


def cycles_for_latency(latency_ns: float, clock_period_ps: int) -> int:
    """Whole clock cycles covering a latency, rounding up."""
    if clock_period_ps <= 0:
        raise ValueError("clock period must be > 0")
    latency_ps = int(round(latency_ns * 1000.0))
    if latency_ps <= 0:
        return 0
    return -(-latency_ps // clock_period_ps)


def substream(seed: int, *path: int | str) -> random.Random:
    """Per-component RNG derived from the run seed and a fixed component path.

    Uses sha256 so streams are stable across platforms and adding a component
    never perturbs any other component's stream.
    """
    key = "/".join([str(seed), *map(str, path)]).encode()
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))
