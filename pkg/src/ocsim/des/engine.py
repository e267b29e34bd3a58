"""Event loop and entity behaviour for the OC supply chain.

Inventory points (distributors, the assembly facility's finished goods and
part stocks, sub-assembly plants) all share one :class:`Stock` behaviour:
fill an arriving order from stock when nothing is queued ahead of it,
otherwise queue it FIFO without partial fills, then reorder by (Q, R).
Production lines turn replenishment orders of the assembly facility and of
the sub-assembly plants into timed jobs.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .. import rng as rngmod
from ..demand import DemandSignal
from ..network import Mode, Network, TransportConstants, transit_time
from .events import EventKind, EventQueue, SimEvent
from .policy import (InventoryPolicy, PolicyMode, TransportStrategy,
                     dynamic_policy_update, reorder_check, select_mode)


class InvariantError(RuntimeError):
    """An accounting identity failed during the run."""


class OrderClass(str, Enum):
    CUSTOMER = "customer"
    DISTRIBUTOR_REPLENISHMENT = "distributor_replenishment"
    ASSEMBLY_PARTS = "assembly_parts"
    KIT = "kit"
    PRODUCTION = "production"


EXPORTED_CLASSES = (OrderClass.CUSTOMER, OrderClass.DISTRIBUTOR_REPLENISHMENT,
                    OrderClass.ASSEMBLY_PARTS)


@dataclass(eq=False)
class Order:
    order_id: int
    order_class: OrderClass
    origin: str
    destination: str
    qty: int
    placed_at: float
    fulfilled_at: float | None = None
    mode: str = ""

    def __post_init__(self) -> None:
        if self.qty < 1:
            raise ValueError(f"order quantity must be >= 1, got {self.qty}")

    @property
    def fulfillment_time(self) -> float | None:
        if self.fulfilled_at is None:
            return None
        return self.fulfilled_at - self.placed_at


@dataclass
class InventorySnapshot:
    facility: str
    day: int
    on_hand: int
    position: int
    backlog: int


class Stock:
    """One inventory point under a continuous-review (Q, R) policy."""

    def __init__(self, sim: Simulation, name: str, policy: InventoryPolicy,
                 place_upstream: Callable[[Stock, int], Order],
                 initial_on_hand: int | None = None) -> None:
        self.sim = sim
        self.name = name
        self.policy = policy
        self.place_upstream = place_upstream
        self.on_hand = policy.order_up_to if initial_on_hand is None else initial_on_hand
        self.initial_on_hand = self.on_hand
        self.backlog: deque[Order] = deque()
        self.backlog_units = 0
        self.outstanding: dict[int, int] = {}
        self.position = self.on_hand
        self.received_total = 0
        self.shipped_total = 0
        self.daily_demand: dict[int, int] = {}
        self.policy_history: list[tuple[float, int, int]] = [(0.0, policy.Q, policy.R)]

    @property
    def on_order(self) -> int:
        return sum(self.outstanding.values())

    @property
    def backlog_qty(self) -> int:
        return sum(o.qty for o in self.backlog)

    def audit(self) -> None:
        expected = self.on_hand + self.on_order - self.backlog_qty
        if self.position != expected or self.on_hand < 0 or self.backlog_units != self.backlog_qty:
            raise InvariantError(
                f"{self.name} at t={self.sim.queue.now:.4f}: position {self.position}, "
                f"on_hand {self.on_hand} + on_order {self.on_order} - backlog {self.backlog_qty} = {expected}"
            )

    def demand(self, order: Order) -> None:
        """An order for ``order.qty`` units arrives now."""
        self.sim.touch(self)
        day = int(math.floor(self.sim.queue.now))
        self.daily_demand[day] = self.daily_demand.get(day, 0) + order.qty
        self.position -= order.qty
        if not self.backlog and self.on_hand >= order.qty:
            self.on_hand -= order.qty
            self.shipped_total += order.qty
            self.sim.dispatch(order)
        else:
            self.backlog.append(order)
            self.backlog_units += order.qty
        self.reorder()

    def reorder(self) -> None:
        qty = reorder_check(self.position, self.policy)
        if qty:
            order = self.place_upstream(self, qty)
            self.outstanding[order.order_id] = qty
            self.position += qty

    def receive(self, order: Order) -> None:
        self.sim.touch(self)
        qty = self.outstanding.pop(order.order_id)
        self.on_hand += qty
        self.received_total += qty
        while self.backlog and self.backlog[0].qty <= self.on_hand:
            waiting = self.backlog.popleft()
            self.backlog_units -= waiting.qty
            self.on_hand -= waiting.qty
            self.shipped_total += waiting.qty
            self.sim.dispatch(waiting)

    def review(self, day: int, window: int = 7) -> None:
        if self.policy.mode is not PolicyMode.DYNAMIC:
            return
        self.sim.touch(self)
        trailing = [self.daily_demand.get(d, 0) for d in range(day - window, day)]
        self.policy = dynamic_policy_update(self.policy, trailing)
        self.policy_history.append((self.sim.queue.now, self.policy.Q, self.policy.R))
        self.reorder()

    def snapshot(self, day: int) -> InventorySnapshot:
        return InventorySnapshot(self.name, day, self.on_hand, self.position, self.backlog_units)


@dataclass(eq=False)
class Job:
    order: Order
    kits_pending: int = 0


class ProductionLine:
    """Single FIFO line making ``output`` units at a (possibly degraded) rate.

    With ``kits`` set, each job first draws ``qty * qty_per_unit`` parts from
    every listed part stock and starts only once all kits are complete.
    """

    def __init__(self, sim: Simulation, name: str, base_rate: float,
                 kits: Sequence[tuple[Stock, int]] = ()) -> None:
        if base_rate <= 0:
            raise ValueError(f"{name}: base production rate must be positive")
        self.sim = sim
        self.name = name
        self.base_rate = base_rate
        self.kits = list(kits)
        self.output: Stock | None = None
        self.jobs: deque[Job] = deque()
        self.busy = False
        self.completed_units = 0
        self._kit_owner: dict[int, Job] = {}

    def effective_rate(self, now: float) -> float:
        return self.base_rate * (1.0 - self.sim.workforce_out(now))

    def enqueue(self, order: Order) -> None:
        job = Job(order, kits_pending=len(self.kits))
        self.jobs.append(job)
        for stock, per_unit in self.kits:
            kit = self.sim.new_order(OrderClass.KIT, self.name, stock.name, order.qty * per_unit)
            self._kit_owner[kit.order_id] = job
            stock.demand(kit)
        self.try_start()

    def kit_ready(self, kit: Order) -> None:
        job = self._kit_owner.pop(kit.order_id)
        job.kits_pending -= 1
        self.try_start()

    def try_start(self) -> None:
        if self.busy or not self.jobs or self.jobs[0].kits_pending:
            return
        job = self.jobs.popleft()
        self.busy = True
        now = self.sim.queue.now
        duration = job.order.qty / max(self.effective_rate(now), 1e-9)
        self.sim.queue.schedule(now + duration, EventKind.ASSEMBLY_JOB_COMPLETE, (self, job))

    def complete(self, job: Job) -> None:
        self.busy = False
        self.completed_units += job.order.qty
        job.order.fulfilled_at = self.sim.queue.now
        self.output.receive(job.order)
        self.try_start()


class Simulation:
    """Deterministic event loop shared by the full network and small test rigs."""

    def __init__(self, horizon: float, seed: int = 0, lead_time_cv: float = 0.0,
                 workforce: Sequence[float] | None = None, audit: bool = False,
                 review_period: int = 7, record_log: bool = True) -> None:
        self.horizon = float(horizon)
        self.queue = EventQueue()
        self.stocks: dict[str, Stock] = {}
        self.lines: dict[str, ProductionLine] = {}
        self.orders: list[Order] = []
        self.snapshots: list[InventorySnapshot] = []
        self.event_log: list[tuple[float, int, str, str]] = []
        self.audit = audit
        self.audit_checks = 0
        self.events_processed = 0
        self.review_period = review_period
        self.record_log = record_log
        self.lead_time_cv = lead_time_cv
        self._lt_rng = rngmod.substream(seed, rngmod.LEAD_TIME)
        self._workforce = list(workforce) if workforce is not None else []
        self._touched: set[Stock] = set()
        self._next_id = 0
        # order_id -> (transit days, mode, destination stock)
        self._routing: dict[int, tuple[float, Mode, Stock]] = {}
        self.customer_sources: dict[str, Callable[[int], list[tuple[float, int, str]]]] = {}

    # -- bookkeeping -------------------------------------------------
    def new_order(self, order_class: OrderClass, origin: str, destination: str, qty: int) -> Order:
        order = Order(self._next_id, order_class, origin, destination, int(qty), self.queue.now)
        self._next_id += 1
        self.orders.append(order)
        return order

    def touch(self, stock: Stock) -> None:
        if self.audit:
            self._touched.add(stock)

    def workforce_out(self, now: float) -> float:
        day = int(math.floor(now)) + 1
        if 1 <= day <= len(self._workforce):
            return min(max(self._workforce[day - 1], 0.0), 1.0)
        return 0.0

    def add_stock(self, stock: Stock) -> Stock:
        self.stocks[stock.name] = stock
        return stock

    def add_line(self, line: ProductionLine, output: Stock) -> ProductionLine:
        line.output = output
        self.lines[line.name] = line
        return line

    # -- upstream connectors -----------------------------------------
    def order_from_stock(self, upstream: Stock, order_class: OrderClass,
                         transit_days: float, mode: Mode = Mode.GROUND):
        """Connector: replenish a stock from ``upstream`` with a shipment leg."""
        def place(stock: Stock, qty: int) -> Order:
            order = self.new_order(order_class, stock.name, upstream.name, qty)
            order.mode = mode.value
            self._routing[order.order_id] = (transit_days, mode, stock)
            self.queue.schedule(self.queue.now, EventKind.REPLENISHMENT_ORDER_ARRIVAL, (upstream, order))
            return order
        return place

    def order_from_line(self, line: ProductionLine):
        def place(stock: Stock, qty: int) -> Order:
            order = self.new_order(OrderClass.PRODUCTION, stock.name, line.name, qty)
            line.enqueue(order)
            return order
        return place

    def order_from_source(self, lead_time: float):
        """Connector: an unlimited outside source that delivers after ``lead_time``."""
        def place(stock: Stock, qty: int) -> Order:
            order = self.new_order(OrderClass.DISTRIBUTOR_REPLENISHMENT, stock.name, "source", qty)
            self._routing[order.order_id] = (lead_time, Mode.GROUND, stock)
            self.queue.schedule(self.queue.now, EventKind.SHIPMENT_DEPARTURE, order)
            return order
        return place

    def dispatch(self, order: Order) -> None:
        if order.order_class is OrderClass.CUSTOMER:
            order.fulfilled_at = self.queue.now
        elif order.order_class is OrderClass.KIT:
            self.lines[order.origin].kit_ready(order)
        else:
            self.queue.schedule(self.queue.now, EventKind.SHIPMENT_DEPARTURE, order)

    def _transit_draw(self, base: float) -> float:
        if self.lead_time_cv <= 0:
            return base
        noise = 1.0 + self.lead_time_cv * self._lt_rng.standard_normal()
        return base * max(0.5, noise)

    # -- event handlers ----------------------------------------------
    def _handle(self, event: SimEvent) -> None:
        kind, payload = event.kind, event.payload
        if kind is EventKind.CUSTOMER_ORDER_ARRIVAL:
            stock, order = payload
            order.placed_at = self.queue.now
            stock.demand(order)
        elif kind is EventKind.REPLENISHMENT_ORDER_ARRIVAL:
            upstream, order = payload
            upstream.demand(order)
        elif kind is EventKind.SHIPMENT_DEPARTURE:
            base, _, _ = self._routing[payload.order_id]
            self.queue.schedule(self.queue.now + self._transit_draw(base),
                                EventKind.SHIPMENT_ARRIVAL, payload)
        elif kind is EventKind.SHIPMENT_ARRIVAL:
            _, _, dest = self._routing.pop(payload.order_id)
            payload.fulfilled_at = self.queue.now
            dest.receive(payload)
        elif kind is EventKind.ASSEMBLY_JOB_COMPLETE:
            line, job = payload
            line.complete(job)
        elif kind is EventKind.POLICY_REVIEW:
            day = int(round(self.queue.now))
            for stock in self.stocks.values():
                stock.review(day, self.review_period)
        elif kind is EventKind.DEMAND_SIGNAL_TICK:
            self._tick(int(round(self.queue.now)))

    def _tick(self, t: int) -> None:
        if t >= 1:
            self.snapshots.extend(s.snapshot(t) for s in self.stocks.values())
        if t >= self.horizon:
            return
        for name, source in self.customer_sources.items():
            stock = self.stocks[name]
            for when, qty, origin in source(t + 1):
                order = Order(self._next_id, OrderClass.CUSTOMER, origin, stock.name, qty, when)
                self._next_id += 1
                self.orders.append(order)
                self.queue.schedule(when, EventKind.CUSTOMER_ORDER_ARRIVAL, (stock, order))

    def schedule_customer_order(self, stock: Stock, when: float, qty: int, origin: str = "customer") -> Order:
        order = Order(self._next_id, OrderClass.CUSTOMER, origin, stock.name, qty, when)
        self._next_id += 1
        self.orders.append(order)
        self.queue.schedule(when, EventKind.CUSTOMER_ORDER_ARRIVAL, (stock, order))
        return order

    def run(self) -> Simulation:
        if self.customer_sources:
            for t in range(int(math.ceil(self.horizon)) + 1):
                self.queue.schedule(float(t), EventKind.DEMAND_SIGNAL_TICK)
        if any(s.policy.mode is PolicyMode.DYNAMIC for s in self.stocks.values()):
            t = self.review_period
            while t < self.horizon:
                self.queue.schedule(float(t), EventKind.POLICY_REVIEW)
                t += self.review_period
        while self.queue and self.queue.peek_time() <= self.horizon:
            event = self.queue.pop()
            self._handle(event)
            self.events_processed += 1
            if self.record_log:
                self.event_log.append((event.timestamp, event.sequence_no, event.kind.value,
                                       _payload_id(event.payload)))
            if self.audit:
                for stock in self._touched:
                    stock.audit()
                    self.audit_checks += 1
                self._touched.clear()
        return self

    def exported_orders(self) -> list[Order]:
        return [o for o in self.orders if o.order_class in EXPORTED_CLASSES]


def _payload_id(payload) -> str:
    if payload is None:
        return ""
    if isinstance(payload, Order):
        return str(payload.order_id)
    if isinstance(payload, tuple):
        head, tail = payload
        if isinstance(tail, Job):
            return f"{head.name}:{tail.order.order_id}"
        return f"{head.name}:{tail.order_id}"
    return repr(payload)


# ---------------------------------------------------------------------------
# Full network build


@dataclass(frozen=True)
class SupplyChainConfig:
    service_level: float = 0.95
    distributor_cycle_days: float = 7.0
    manufacturer_cycle_days: float = 7.0
    parts_cycle_days: float = 7.0
    pre_pandemic_utilization: float = 0.5
    subassembly_utilization: float = 0.25
    lead_time_cv: float = 0.1
    review_period: int = 7
    dynamic_manufacturer: bool = False
    transport: TransportConstants = field(default_factory=TransportConstants)

    def __post_init__(self) -> None:
        if not 0 < self.pre_pandemic_utilization <= 1 or not 0 < self.subassembly_utilization <= 1:
            raise ValueError("utilization must be in (0, 1]")
        if self.lead_time_cv < 0:
            raise ValueError("lead_time_cv must be >= 0")


def _arrival_source(signals: Sequence[DemandSignal], rng: np.random.Generator):
    by_day = {s.day: s for s in signals}

    def source(day: int) -> list[tuple[float, int, str]]:
        sig = by_day.get(day)
        if sig is None:
            return []
        start = float(day - 1)
        units = sig.hospital_order_qty - sig.hospital_replenishment_qty
        out: list[tuple[float, int, str]] = []
        for origin, n in (("hospital", units), ("home", sig.home_order_qty)):
            if n > 0:
                times = np.sort(rng.random(n))
                out.extend((start + float(u), 1, origin) for u in times)
        if sig.hospital_replenishment_qty > 0:
            out.append((start + float(rng.random()), sig.hospital_replenishment_qty, "hospital_bulk"))
        out.sort(key=lambda x: x[0])
        return out
    return source


def build_simulation(
    network: Network,
    signals: Mapping[str, Sequence[DemandSignal]],
    baseline_demand: Mapping[str, float],
    horizon: int,
    seed: int,
    inventory_strategy: PolicyMode | str = PolicyMode.STATIC,
    transport_strategy: TransportStrategy | str = TransportStrategy.GROUND_ONLY,
    config: SupplyChainConfig = SupplyChainConfig(),
    workforce: Sequence[float] | None = None,
    audit: bool = False,
    record_log: bool = True,
) -> Simulation:
    """Wire distributors, the assembly facility and sub-assembly plants.

    ``baseline_demand`` gives each region's pre-pandemic units/day; every
    initial (static) policy is sized from it.
    """
    mode = PolicyMode(inventory_strategy)
    strategy = TransportStrategy(transport_strategy)
    tc = config.transport
    alpha = config.service_level
    sim = Simulation(horizon, seed, config.lead_time_cv, workforce, audit,
                     config.review_period, record_log)
    asm = network.assembly
    dists = network.distributors
    regions = sorted(signals)

    # distributor policies first: the manufacturer's demand variance follows from them
    dist_setup = {}
    for region in regions:
        node = dists[region]
        route = network.route(asm.node_id, node.node_id)
        leg_mode = select_mode(route, strategy, tc)
        lt = transit_time(route, leg_mode, tc)
        mu = float(baseline_demand.get(region, 0.0))
        policy = InventoryPolicy.build(mu, math.sqrt(mu), config.distributor_cycle_days,
                                       lt, config.lead_time_cv * lt, alpha, mode)
        dist_setup[region] = (node, leg_mode, lt, policy)

    mu_m = sum(p.mu_D for *_, p in dist_setup.values())
    var_m = sum(p.mu_D * p.Q for *_, p in dist_setup.values())
    base_rate = asm.capacity or max(mu_m / config.pre_pandemic_utilization, 1.0)
    q_m = max(1, math.ceil(mu_m * config.manufacturer_cycle_days))
    prod_lt = q_m / base_rate
    fg_policy = InventoryPolicy.build(mu_m, math.sqrt(var_m), config.manufacturer_cycle_days,
                                      prod_lt, config.lead_time_cv * prod_lt, alpha,
                                      mode if config.dynamic_manufacturer else PolicyMode.STATIC)

    kits = []
    for step in network.bom:
        plant = network.producer_of(step.part_type)
        mu_p = fg_policy.mu_D * step.qty_per_unit
        sigma_p = math.sqrt(mu_p * fg_policy.Q * step.qty_per_unit)
        sub_rate = plant.capacity or max(mu_p / config.subassembly_utilization, 1.0)
        q_s = max(1, math.ceil(mu_p * config.parts_cycle_days))
        sub_lt = q_s / sub_rate
        # material supply stays on its pre-pandemic policy in every strategy
        sub_policy = InventoryPolicy.build(mu_p, sigma_p, config.parts_cycle_days,
                                           sub_lt, config.lead_time_cv * sub_lt, alpha)
        sub_line = ProductionLine(sim, f"{plant.node_id}/line", sub_rate)
        sub_stock = sim.add_stock(Stock(sim, f"{plant.node_id}/{step.part_type}", sub_policy,
                                        sim.order_from_line(sub_line)))
        sim.add_line(sub_line, sub_stock)

        leg = transit_time(network.route(plant.node_id, asm.node_id), Mode.GROUND, tc)
        part_policy = InventoryPolicy.build(mu_p, sigma_p, config.parts_cycle_days,
                                            leg, config.lead_time_cv * leg, alpha)
        part_stock = sim.add_stock(Stock(
            sim, f"{asm.node_id}/{step.part_type}", part_policy,
            sim.order_from_stock(sub_stock, OrderClass.ASSEMBLY_PARTS, leg, Mode.GROUND)))
        kits.append((part_stock, step.qty_per_unit))

    asm_line = ProductionLine(sim, f"{asm.node_id}/line", base_rate, kits)
    fg_stock = sim.add_stock(Stock(sim, asm.node_id, fg_policy, sim.order_from_line(asm_line)))
    sim.add_line(asm_line, fg_stock)

    for i, region in enumerate(regions):
        node, leg_mode, lt, policy = dist_setup[region]
        # stagger starting stock over the order cycle so reorders do not all
        # arrive at the manufacturer in the same week
        start = policy.R + int(math.ceil(policy.Q * (i + 0.5) / len(regions)))
        stock = sim.add_stock(Stock(
            sim, node.node_id, policy,
            sim.order_from_stock(fg_stock, OrderClass.DISTRIBUTOR_REPLENISHMENT, lt, leg_mode),
            initial_on_hand=start))
        rng = rngmod.substream(seed, rngmod.ARRIVALS, rngmod.name_key(region))
        sim.customer_sources[node.node_id] = _arrival_source(signals[region], rng)
    return sim


def run(
    network: Network,
    signals: Mapping[str, Sequence[DemandSignal]],
    baseline_demand: Mapping[str, float],
    horizon: int,
    seed: int,
    inventory_strategy: PolicyMode | str = PolicyMode.STATIC,
    transport_strategy: TransportStrategy | str = TransportStrategy.GROUND_ONLY,
    config: SupplyChainConfig = SupplyChainConfig(),
    workforce: Sequence[float] | None = None,
    audit: bool = False,
    record_log: bool = True,
) -> Simulation:
    return build_simulation(network, signals, baseline_demand, horizon, seed,
                            inventory_strategy, transport_strategy, config,
                            workforce, audit, record_log).run()
