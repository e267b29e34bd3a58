"""Future-event list for the supply chain simulation."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class EventKind(str, Enum):
    CUSTOMER_ORDER_ARRIVAL = "customer_order_arrival"
    REPLENISHMENT_ORDER_ARRIVAL = "replenishment_order_arrival"
    SHIPMENT_DEPARTURE = "shipment_departure"
    SHIPMENT_ARRIVAL = "shipment_arrival"
    ASSEMBLY_JOB_COMPLETE = "assembly_job_complete"
    POLICY_REVIEW = "policy_review"
    DEMAND_SIGNAL_TICK = "demand_signal_tick"


@dataclass(frozen=True)
class SimEvent:
    timestamp: float
    sequence_no: int
    kind: EventKind
    payload: Any = field(default=None, compare=False)


class EventQueue:
    """Priority queue keyed on (timestamp, insertion sequence).

    Equal timestamps come out in insertion order, so a run is fully
    determined by its inputs.
    """

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, SimEvent]] = []
        self._seq = 0
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, timestamp: float, kind: EventKind, payload: Any = None) -> SimEvent:
        if timestamp < self.now:
            raise ValueError(f"cannot schedule {kind.value} at {timestamp} before now={self.now}")
        event = SimEvent(float(timestamp), self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, (event.timestamp, event.sequence_no, event))
        return event

    def peek_time(self) -> float:
        return self._heap[0][0] if self._heap else float("inf")

    def pop(self) -> SimEvent:
        _, _, event = heapq.heappop(self._heap)
        self.now = event.timestamp
        return event
