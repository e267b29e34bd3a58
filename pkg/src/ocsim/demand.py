"""Turn daily epidemic outputs into oxygen-concentrator demand signals.

Per region and day this tracks the hospitals' OC stock (owned, attached to
patients, scrapped), decides when hospitals reorder, and adds home demand
from discharged patients on top of the pre-COVID baselines.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rngmod
from .epi import EpiDailyOutput, RegionProfile, round_half_up


@dataclass(frozen=True)
class OcUsageRates:
    hospital_covid_usage: float = 0.065
    discharge_usage: float = 0.01
    overflow_discharge_usage: float = 0.02
    inventory_rate: float = 0.10
    scrap_rate: float = 0.01
    units_per_bed: float = 0.1
    precovid_hospital_demand_national: float = 171.0
    precovid_home_demand_national: float = 545.0
    # days between a hospital order and the units joining hospital stock
    hospital_delivery_days: int = 2

    def __post_init__(self) -> None:
        for name in ("hospital_covid_usage", "discharge_usage", "overflow_discharge_usage",
                     "inventory_rate", "scrap_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.units_per_bed < 0:
            raise ValueError("units_per_bed must be >= 0")
        if self.precovid_hospital_demand_national < 0 or self.precovid_home_demand_national < 0:
            raise ValueError("national baselines must be >= 0")
        if self.hospital_delivery_days < 0:
            raise ValueError("hospital_delivery_days must be >= 0")


USAGE_FIELDS = ("hospital_covid_usage", "discharge_usage", "overflow_discharge_usage")
INCREASED_INVENTORY_RATE = 0.15


def increased_usage(rates: OcUsageRates) -> OcUsageRates:
    """Double the three COVID usage rates and hold 15% stock."""
    doubled = {name: getattr(rates, name) * 2 for name in USAGE_FIELDS}
    return replace(rates, inventory_rate=INCREASED_INVENTORY_RATE, **doubled)


def revert_increased_usage(rates: OcUsageRates, inventory_rate: float = 0.10) -> OcUsageRates:
    halved = {name: getattr(rates, name) / 2 for name in USAGE_FIELDS}
    return replace(rates, inventory_rate=inventory_rate, **halved)


@dataclass
class HospitalOcState:
    region_id: str
    on_hand: int
    in_use: int = 0
    scrapped_cumulative: int = 0
    on_order: int = 0
    # day -> units arriving at hospitals
    deliveries: dict[int, int] = field(default_factory=dict)
    # day -> units freed when their patients leave
    releases: dict[int, int] = field(default_factory=dict)
    # patients who needed an OC today but found none idle
    unmet: int = 0
    unmet_cumulative: int = 0

    @property
    def idle(self) -> int:
        return self.on_hand - self.in_use

    def copy(self) -> HospitalOcState:
        return replace(self, deliveries=dict(self.deliveries), releases=dict(self.releases))


@dataclass(frozen=True)
class DemandSignal:
    region_id: str
    day: int
    hospital_order_qty: int
    home_order_qty: int
    covid_patients: int
    oc_in_use: int
    oc_on_hand: int
    oc_scrapped_today: int
    # part of hospital_order_qty that is one bulk stock replenishment
    hospital_replenishment_qty: int = 0
    workforce_out_fraction: float = 0.0

    FIELDS = ("region_id", "day", "hospital_order_qty", "home_order_qty",
              "hospital_replenishment_qty", "covid_patients", "oc_in_use", "oc_on_hand",
              "oc_scrapped_today", "workforce_out_fraction")

    @property
    def total_qty(self) -> int:
        return self.hospital_order_qty + self.home_order_qty


def initial_stock(hospital_capacity: int, rates: OcUsageRates) -> int:
    if hospital_capacity < 0:
        raise ValueError("hospital_capacity must be >= 0")
    return round_half_up(rates.units_per_bed * hospital_capacity)


def attach_and_release(
    epi_out: EpiDailyOutput,
    state: HospitalOcState,
    rates: OcUsageRates,
    rng: np.random.Generator,
) -> HospitalOcState:
    """Free units of patients leaving today, then equip today's admissions.

    Each admitted patient needs an OC with probability ``hospital_covid_usage``
    and keeps it until discharge. Patients consume one uniform each, in
    admission order, so scenarios sharing a seed see the same draw for the
    k-th patient. Patients who find no idle unit are counted
    in ``unmet``.
    """
    s = state.copy()
    s.in_use -= s.releases.pop(epi_out.day, 0)
    s.unmet = 0
    for cohort in epi_out.admissions:
        need = int(np.count_nonzero(rng.random(cohort.count) < rates.hospital_covid_usage))
        if need == 0:
            continue
        got = min(need, s.idle)
        if got:
            s.in_use += got
            s.releases[cohort.discharge_day] = s.releases.get(cohort.discharge_day, 0) + got
        s.unmet += need - got
    s.unmet_cumulative += s.unmet
    return s


def daily_scrap(state: HospitalOcState, rates: OcUsageRates) -> tuple[HospitalOcState, int]:
    """Retire ``scrap_rate`` of the owned stock, touching idle units only."""
    s = state.copy()
    scrapped = min(round_half_up(rates.scrap_rate * s.on_hand), s.idle)
    scrapped = max(scrapped, 0)
    s.on_hand -= scrapped
    s.scrapped_cumulative += scrapped
    return s, scrapped


def hospital_replenishment_trigger(
    state: HospitalOcState, current_requirement: int, rates: OcUsageRates
) -> int:
    """Order size when required units exceed the usable share of stock.

    Stock counts units already ordered but not yet delivered, so one shortfall
    does not reorder every day while a delivery is on its way.
    """
    if current_requirement < 0:
        raise ValueError("current_requirement must be >= 0")
    required = state.in_use + current_requirement
    stock = state.on_hand + state.on_order
    if required > (1.0 - rates.inventory_rate) * stock:
        return int(math.ceil(rates.inventory_rate * required - 1e-9))
    return 0


def baseline_units(national_per_day: float, share: float, day: int) -> int:
    """Integer units of a steady baseline on ``day`` (1-based).

    Rounds the cumulative target rather than each day, so totals over any
    horizon stay within one unit of ``national_per_day * share * days``.
    """
    rate = national_per_day * share
    return round_half_up(rate * day) - round_half_up(rate * (day - 1))


def home_demand(epi_out: EpiDailyOutput | None, rates: OcUsageRates,
                region_population_share: float, day: int | None = None) -> int:
    covid = 0
    if epi_out is not None:
        covid = (round_half_up(rates.discharge_usage * epi_out.new_discharges)
                 + round_half_up(rates.overflow_discharge_usage * epi_out.new_overflow_discharges))
        day = epi_out.day if day is None else day
    if day is None:
        raise ValueError("day is required without an epidemic output")
    return covid + baseline_units(rates.precovid_home_demand_national, region_population_share, day)


def emit_signal(
    region_id: str,
    day: int,
    state: HospitalOcState,
    *,
    hospital_baseline: int,
    replenishment: int,
    home: int,
    scrapped_today: int,
    covid_patients: int = 0,
    workforce_out_fraction: float = 0.0,
) -> DemandSignal:
    return DemandSignal(
        region_id=region_id,
        day=day,
        hospital_order_qty=hospital_baseline + replenishment,
        home_order_qty=home,
        covid_patients=covid_patients,
        oc_in_use=state.in_use,
        oc_on_hand=state.on_hand,
        oc_scrapped_today=scrapped_today,
        hospital_replenishment_qty=replenishment,
        workforce_out_fraction=workforce_out_fraction,
    )


def population_shares(profiles: Sequence[RegionProfile]) -> dict[str, float]:
    total = sum(p.population for p in profiles)
    return {p.region_id: p.population / total for p in profiles}


def region_signals(
    profile: RegionProfile,
    epi_outputs: Sequence[EpiDailyOutput] | None,
    rates: OcUsageRates,
    population_share: float,
    seed: int,
    horizon: int | None = None,
) -> tuple[list[DemandSignal], HospitalOcState]:
    """Daily signals for one region.

    With ``epi_outputs=None`` the epidemic is bypassed and only the pre-COVID
    baselines flow; ``horizon`` then sets the number of days.
    """
    if epi_outputs is None:
        if horizon is None:
            raise ValueError("horizon is required when the epidemic is bypassed")
        days = range(1, horizon + 1)
    else:
        days = [o.day for o in epi_outputs]
    rng = rngmod.substream(seed, rngmod.OC_ATTACH, rngmod.name_key(profile.region_id))
    state = HospitalOcState(profile.region_id, on_hand=initial_stock(profile.hospital_capacity, rates))
    signals = []
    for i, day in enumerate(days):
        out = epi_outputs[i] if epi_outputs is not None else None
        arrived = state.deliveries.pop(day, 0)
        if arrived:
            state.on_hand += arrived
            state.on_order -= arrived
        replenishment = 0
        if out is not None:
            state = attach_and_release(out, state, rates, rng)
            replenishment = hospital_replenishment_trigger(state, state.unmet, rates)
            if replenishment:
                state.on_order += replenishment
                due = day + rates.hospital_delivery_days
                state.deliveries[due] = state.deliveries.get(due, 0) + replenishment
                if rates.hospital_delivery_days == 0:
                    state.on_hand += state.deliveries.pop(day)
                    state.on_order -= replenishment
        state, scrapped = daily_scrap(state, rates)
        signals.append(emit_signal(
            profile.region_id, day, state,
            hospital_baseline=baseline_units(rates.precovid_hospital_demand_national,
                                             population_share, day),
            replenishment=replenishment,
            home=home_demand(out, rates, population_share, day),
            scrapped_today=scrapped,
            covid_patients=out.hospitalized_count if out is not None else 0,
            workforce_out_fraction=out.workforce_out_fraction if out is not None else 0.0,
        ))
    return signals, state
