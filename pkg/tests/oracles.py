"""Straight-line reference implementations used to cross-check the engine."""

from __future__ import annotations

import math
from collections import deque


def bisect_normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF by bisection on erf."""
    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if 0.5 * (1 + math.erf(mid / math.sqrt(2))) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def single_stock_replay(demands, Q, R, lead_time, on_hand, horizon=float("inf")):
    """Replay ``(time, qty)`` demands through a (Q, R) stock with a fixed lead time.

    Orders wait in a FIFO backlog and only ship whole. Returns the
    replenishment orders as ``(time, qty)`` and each demand's fill time
    (``None`` if still waiting at ``horizon``), in time order.
    """
    demands = sorted(demands)
    pipeline = []          # (arrival time, qty)
    backlog = deque()      # (index, qty)
    orders = []
    filled = [None] * len(demands)
    position = on_hand

    def arrive(until):
        nonlocal on_hand
        pipeline.sort()
        while pipeline and pipeline[0][0] <= until:
            when, qty = pipeline.pop(0)
            on_hand += qty
            while backlog and backlog[0][1] <= on_hand:
                i, q = backlog.popleft()
                on_hand -= q
                filled[i] = when

    for i, (t, q) in enumerate(demands):
        arrive(t)
        position -= q
        if not backlog and on_hand >= q:
            on_hand -= q
            filled[i] = t
        else:
            backlog.append((i, q))
        if position < R:
            n = 0
            while position + n * Q < R:
                n += 1
            orders.append((t, n * Q))
            pipeline.append((t + lead_time, n * Q))
            position += n * Q
    arrive(horizon)
    return orders, filled
