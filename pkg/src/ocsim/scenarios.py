"""Experiment matrix: epidemic -> OC demand -> supply chain, and its statistics."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import demand as dem
from .des.engine import OrderClass, Simulation, SupplyChainConfig, run as run_des
from .des.policy import PolicyMode, TransportStrategy
from .epi import EpiDailyOutput, EpiParameters, RegionProfile, run_epidemic
from .network import Network


class DemandScenario(str, Enum):
    PRE_COVID = "pre_covid"
    BASELINE = "baseline"
    INCREASED_CONTACT = "increased_contact"
    INCREASED_USAGE = "increased_usage"


STRATEGIES: dict[str, tuple[PolicyMode, TransportStrategy]] = {
    "static+ground": (PolicyMode.STATIC, TransportStrategy.GROUND_ONLY),
    "dynamic+ground": (PolicyMode.DYNAMIC, TransportStrategy.GROUND_ONLY),
    "dynamic+air": (PolicyMode.DYNAMIC, TransportStrategy.AIR_OVER_500),
}

REPORT_CLASSES = (OrderClass.CUSTOMER, OrderClass.DISTRIBUTOR_REPLENISHMENT)


def strategy_label(inventory: PolicyMode | str, transport: TransportStrategy | str) -> str:
    inv = PolicyMode(inventory).value
    tr = "air" if TransportStrategy(transport) is TransportStrategy.AIR_OVER_500 else "ground"
    return f"{inv}+{tr}"


@dataclass(frozen=True)
class ScenarioSpec:
    demand_scenario: DemandScenario
    inventory_strategy: PolicyMode = PolicyMode.STATIC
    transport_strategy: TransportStrategy = TransportStrategy.GROUND_ONLY
    regions: tuple[str, ...] = ()
    horizon: int = 150
    seed: int = 0
    replications: int = 1
    contact_scaling: str = "relative"   # "relative": x(1+step); "absolute": +step
    contact_step: float = 0.001

    def __post_init__(self) -> None:
        object.__setattr__(self, "demand_scenario", DemandScenario(self.demand_scenario))
        object.__setattr__(self, "inventory_strategy", PolicyMode(self.inventory_strategy))
        object.__setattr__(self, "transport_strategy", TransportStrategy(self.transport_strategy))
        object.__setattr__(self, "regions", tuple(self.regions))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.contact_scaling not in ("relative", "absolute"):
            raise ValueError("contact_scaling must be 'relative' or 'absolute'")

    @property
    def strategy(self) -> str:
        return strategy_label(self.inventory_strategy, self.transport_strategy)


@dataclass(frozen=True)
class ModelInputs:
    """Everything a scenario needs besides the network."""

    profiles: Mapping[str, RegionProfile]
    epi_params: Mapping[str, EpiParameters]
    rates: dem.OcUsageRates = dem.OcUsageRates()
    supply: SupplyChainConfig = SupplyChainConfig()


def scale_contacts(params: EpiParameters, mode: str = "relative", step: float = 0.001) -> EpiParameters:
    if mode == "relative":
        return params.scaled_contacts(1.0 + step)
    return replace(params, contact_schedule=tuple(c + step for c in params.contact_schedule))


def apply_modifiers(spec: ScenarioSpec, inputs: ModelInputs) -> tuple[dict[str, EpiParameters], dem.OcUsageRates]:
    epi = dict(inputs.epi_params)
    rates = inputs.rates
    if spec.demand_scenario is DemandScenario.INCREASED_CONTACT:
        epi = {r: scale_contacts(p, spec.contact_scaling, spec.contact_step) for r, p in epi.items()}
    elif spec.demand_scenario is DemandScenario.INCREASED_USAGE:
        rates = dem.increased_usage(rates)
    return epi, rates


@dataclass
class DemandRun:
    signals: dict[str, list[dem.DemandSignal]]
    epidemic: dict[str, list[EpiDailyOutput]]
    workforce: list[float]
    baseline: dict[str, float]


def generate_demand(spec: ScenarioSpec, inputs: ModelInputs, seed: int) -> DemandRun:
    regions = spec.regions or tuple(sorted(inputs.profiles))
    profiles = [inputs.profiles[r] for r in regions]
    shares = dem.population_shares(profiles)
    epi_params, rates = apply_modifiers(spec, inputs)
    national = rates.precovid_hospital_demand_national + rates.precovid_home_demand_national
    baseline = {r: national * shares[r] for r in regions}
    signals, epidemic = {}, {}
    infectious = np.zeros(spec.horizon)
    for profile in profiles:
        r = profile.region_id
        if spec.demand_scenario is DemandScenario.PRE_COVID:
            signals[r], _ = dem.region_signals(profile, None, rates, shares[r], seed, spec.horizon)
            continue
        outs = run_epidemic(profile, epi_params[r], spec.horizon, seed)
        epidemic[r] = outs
        signals[r], _ = dem.region_signals(profile, outs, rates, shares[r], seed)
        infectious += np.array([o.infectious_count for o in outs], dtype=float)
    population = float(sum(p.population for p in profiles))
    workforce = (infectious / population).tolist()
    return DemandRun(signals, epidemic, workforce, baseline)


def percentile(values: Iterable[float], p: float) -> float:
    """Nearest-rank percentile."""
    data = sorted(values)
    if not data:
        raise ValueError("percentile of an empty sequence")
    if not 0 <= p <= 100:
        raise ValueError("p must be in [0, 100]")
    rank = max(1, math.ceil(p / 100.0 * len(data) - 1e-12))
    return data[rank - 1]


@dataclass(frozen=True)
class FulfillmentStats:
    completed: int
    open_orders: int
    median: float
    p90: float


@dataclass
class MetricsReport:
    demand_scenario: str
    strategy: str
    seeds: tuple[int, ...]
    horizon: int
    # units/day ordered at the distributors, all of which the manufacturer
    # must eventually supply; free of the (Q, R) batching at distributors
    mean_daily_manufacturer_demand: float
    # units/day the distributors actually ordered from the manufacturer
    mean_daily_replenishment_units: float
    fulfillment: dict[str, FulfillmentStats]
    backlog: dict[str, list[int]] = field(default_factory=dict)
    availability: dict[str, list[int]] = field(default_factory=dict)
    daily_demand: dict[str, list[int]] = field(default_factory=dict)
    hospital_orders: dict[str, list[int]] = field(default_factory=dict)
    signals: dict[str, list[dem.DemandSignal]] = field(default_factory=dict, repr=False)
    simulation: Simulation | None = field(default=None, repr=False)

    def p90(self, order_class: str | OrderClass) -> float:
        return self.fulfillment[OrderClass(order_class).value].p90

    def median(self, order_class: str | OrderClass) -> float:
        return self.fulfillment[OrderClass(order_class).value].median


def fulfillment_stats(orders: Sequence, horizon: float) -> FulfillmentStats:
    done = [o.fulfilled_at - o.placed_at for o in orders
            if o.fulfilled_at is not None and o.fulfilled_at <= horizon]
    open_orders = len(orders) - len(done)
    if not done:
        return FulfillmentStats(0, open_orders, float("nan"), float("nan"))
    return FulfillmentStats(len(done), open_orders, percentile(done, 50), percentile(done, 90))


def _simulate(spec: ScenarioSpec, network: Network, inputs: ModelInputs, seed: int,
              demand: DemandRun | None = None, audit: bool = False) -> tuple[DemandRun, Simulation]:
    if demand is None:
        demand = generate_demand(spec, inputs, seed)
    sim = run_des(network, demand.signals, demand.baseline, spec.horizon, seed,
                  spec.inventory_strategy, spec.transport_strategy, inputs.supply,
                  demand.workforce, audit=audit, record_log=False)
    return demand, sim


def run_scenario(spec: ScenarioSpec, network: Network, inputs: ModelInputs,
                 demand_cache: dict | None = None, keep_simulation: bool = False,
                 audit: bool = False) -> MetricsReport:
    """Run every replication of ``spec`` and pool their order records."""
    regions = spec.regions or tuple(sorted(inputs.profiles))
    spec = replace(spec, regions=regions)
    net = network.restrict(regions)
    seeds = tuple(spec.seed + i for i in range(spec.replications))
    orders_by_class: dict[str, list] = {c.value: [] for c in REPORT_CLASSES}
    replenishment_units = 0
    customer_units = 0
    first: tuple[DemandRun, Simulation] | None = None
    for seed in seeds:
        key = (spec.demand_scenario, regions, spec.horizon, seed,
               spec.contact_scaling, spec.contact_step)
        cached = demand_cache.get(key) if demand_cache is not None else None
        demand, sim = _simulate(spec, net, inputs, seed, cached, audit)
        if demand_cache is not None:
            demand_cache[key] = demand
        for o in sim.orders:
            if o.order_class.value in orders_by_class:
                orders_by_class[o.order_class.value].append(o)
            if o.order_class is OrderClass.DISTRIBUTOR_REPLENISHMENT and o.placed_at < spec.horizon:
                replenishment_units += o.qty
            if o.order_class is OrderClass.CUSTOMER and o.placed_at < spec.horizon:
                customer_units += o.qty
        if first is None:
            first = (demand, sim)

    days = spec.horizon * len(seeds)
    demand, sim = first
    report = MetricsReport(
        demand_scenario=spec.demand_scenario.value,
        strategy=spec.strategy,
        seeds=seeds,
        horizon=spec.horizon,
        mean_daily_manufacturer_demand=customer_units / days,
        mean_daily_replenishment_units=replenishment_units / days,
        fulfillment={c: fulfillment_stats(v, spec.horizon) for c, v in orders_by_class.items()},
        signals=demand.signals,
        simulation=sim if keep_simulation else None,
    )
    _attach_series(report, demand, sim, net)
    return report


def _attach_series(report: MetricsReport, demand: DemandRun, sim: Simulation, network: Network) -> None:
    """Time series from the first replication."""
    horizon = report.horizon
    asm = network.assembly.node_id
    backlog = [0] * horizon
    for snap in sim.snapshots:
        if snap.facility == asm and 1 <= snap.day <= horizon:
            backlog[snap.day - 1] = snap.backlog
    report.backlog[asm] = backlog
    for region, sigs in demand.signals.items():
        report.availability[region] = [s.oc_on_hand - s.oc_in_use for s in sigs]
        report.daily_demand[region] = [s.total_qty for s in sigs]
        report.hospital_orders[region] = [s.hospital_replenishment_qty for s in sigs]
    stock = sim.stocks.get(asm)
    if stock is not None:
        report.daily_demand[asm] = [stock.daily_demand.get(d, 0) for d in range(horizon)]


def _run_cell(args):
    spec, network, inputs = args
    return run_scenario(spec, network, inputs)


def run_matrix(
    network: Network,
    inputs: ModelInputs,
    regions: Sequence[str] = (),
    horizon: int = 150,
    seed: int = 0,
    replications: int = 1,
    scenarios: Sequence[DemandScenario | str] = tuple(DemandScenario),
    strategies: Sequence[str] = tuple(STRATEGIES),
    workers: int = 1,
) -> dict[tuple[str, str], MetricsReport]:
    """Every (demand scenario, strategy) cell, keyed by their labels."""
    specs = []
    for scenario in scenarios:
        for label in strategies:
            inv, tr = STRATEGIES[label]
            specs.append(ScenarioSpec(DemandScenario(scenario), inv, tr, tuple(regions),
                                      horizon, seed, replications))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_cell, [(s, network, inputs) for s in specs]))
    else:
        cache: dict = {}
        reports = [run_scenario(s, network, inputs, cache) for s in specs]
    return {(r.demand_scenario, r.strategy): r for r in reports}


COMPARISON_COLUMNS = ("customer_median", "customer_p90", "distributor_median", "distributor_p90")


def compare_strategies(reports: Sequence[MetricsReport]) -> list[dict]:
    """Comparison rows, one per strategy, with deltas against the first report."""
    if not reports:
        return []
    scenarios = {r.demand_scenario for r in reports}
    if len(scenarios) != 1:
        raise ValueError(f"reports span several demand scenarios: {sorted(scenarios)}")

    def values(r: MetricsReport) -> dict[str, float]:
        return {
            "customer_median": r.median(OrderClass.CUSTOMER),
            "customer_p90": r.p90(OrderClass.CUSTOMER),
            "distributor_median": r.median(OrderClass.DISTRIBUTOR_REPLENISHMENT),
            "distributor_p90": r.p90(OrderClass.DISTRIBUTOR_REPLENISHMENT),
        }

    ref = values(reports[0])
    rows = []
    for r in reports:
        v = values(r)
        row = {"demand_scenario": r.demand_scenario, "strategy": r.strategy, **v}
        row.update({f"delta_{k}": v[k] - ref[k] for k in COMPARISON_COLUMNS})
        rows.append(row)
    return rows
