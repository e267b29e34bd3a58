"""Per-region SIR system dynamics with hospitalization and waning immunity.

Five stocks are tracked in whole persons: susceptible, infectious,
hospitalized, deceased and recovered. Infected people are kept in dated
cohorts so they recover after a fixed illness duration, hospital admissions
carry an individually sampled length of stay, and recovered cohorts lose
immunity after a fixed number of days.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rngmod


class EpiError(ValueError):
    """Invalid epidemic inputs."""


class HorizonError(EpiError):
    """The contact schedule does not cover the requested day."""


class ConservationError(AssertionError):
    """Population stocks stopped summing to the region's population."""


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def largest_remainder(total: int, weights: Sequence[int]) -> list[int]:
    """Split ``total`` across ``weights`` proportionally in whole units.

    Each share is bounded by its weight when ``total <= sum(weights)``.
    Ties in the fractional parts go to the earliest entry.
    """
    denom = sum(weights)
    if total <= 0 or denom <= 0:
        return [0] * len(weights)
    if total >= denom:
        return list(weights)
    quotas = [total * w / denom for w in weights]
    shares = [int(math.floor(q)) for q in quotas]
    left = total - sum(shares)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - shares[i]), i))
    for i in order[:left]:
        shares[i] += 1
    return shares


@dataclass(frozen=True)
class RegionProfile:
    region_id: str
    population: int
    hospital_capacity: int
    initial_infected: int
    workforce_share: float = 0.5

    def __post_init__(self) -> None:
        if self.population <= 0:
            raise EpiError(f"{self.region_id}: population must be positive")
        if not 0 <= self.initial_infected <= self.population:
            raise EpiError(
                f"{self.region_id}: initial_infected {self.initial_infected} "
                f"outside [0, {self.population}]"
            )
        if self.hospital_capacity < 0:
            raise EpiError(f"{self.region_id}: hospital_capacity must be >= 0")
        if not 0.0 <= self.workforce_share <= 1.0:
            raise EpiError(f"{self.region_id}: workforce_share must be in [0, 1]")


@dataclass(frozen=True)
class EpiParameters:
    """Disease and hospital parameters; defaults follow the baseline table."""

    contact_schedule: tuple[float, ...]
    infectivity: float = 0.05
    illness_duration: int = 15
    hospitalization_rate: float = 0.01
    los_min: int = 8
    los_max: int = 15
    overflow_los_min: int = 4
    overflow_los_max: int = 8
    immunity_duration: int = 30
    hospital_mortality_rate: float = 0.02
    community_mortality_rate: float = 0.001

    def __post_init__(self) -> None:
        object.__setattr__(self, "contact_schedule", tuple(float(c) for c in self.contact_schedule))
        if self.illness_duration <= 0:
            raise EpiError("illness_duration must be positive")
        if self.immunity_duration <= 0:
            raise EpiError("immunity_duration must be positive")
        if not 1 <= self.los_min <= self.los_max:
            raise EpiError("need 1 <= los_min <= los_max")
        if not 1 <= self.overflow_los_min <= self.overflow_los_max:
            raise EpiError("need 1 <= overflow_los_min <= overflow_los_max")
        for name in ("infectivity", "hospitalization_rate",
                     "hospital_mortality_rate", "community_mortality_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise EpiError(f"{name} must be in [0, 1]")
        if any(c < 0 or not math.isfinite(c) for c in self.contact_schedule):
            raise EpiError("contact rates must be finite and non-negative")

    def contact_rate(self, day: int) -> float:
        if not 0 <= day < len(self.contact_schedule):
            raise HorizonError(
                f"no contact rate for day index {day} "
                f"(schedule covers {len(self.contact_schedule)} days)"
            )
        return self.contact_schedule[day]

    def scaled_contacts(self, factor: float) -> EpiParameters:
        return replace(self, contact_schedule=tuple(c * factor for c in self.contact_schedule))


@dataclass(frozen=True)
class AdmissionCohort:
    """Patients admitted on the same day with the same discharge day and regime."""

    admission_day: int
    discharge_day: int
    overflow: bool
    count: int


@dataclass
class EpiState:
    day: int
    susceptible: int
    infectious: int
    hospitalized: int
    deceased: int
    recovered: int
    # [infection_day, remaining] pairs, oldest first
    infection_cohorts: list[list[int]] = field(default_factory=list)
    admission_ledger: dict[int, list[AdmissionCohort]] = field(default_factory=dict)
    # [recovery_day, count] pairs, oldest first
    recovery_cohorts: list[list[int]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return (self.susceptible + self.infectious + self.hospitalized
                + self.deceased + self.recovered)

    def copy(self) -> EpiState:
        return EpiState(
            day=self.day,
            susceptible=self.susceptible,
            infectious=self.infectious,
            hospitalized=self.hospitalized,
            deceased=self.deceased,
            recovered=self.recovered,
            infection_cohorts=[list(c) for c in self.infection_cohorts],
            admission_ledger={d: list(v) for d, v in self.admission_ledger.items()},
            recovery_cohorts=[list(c) for c in self.recovery_cohorts],
        )


@dataclass(frozen=True)
class EpiDailyOutput:
    region_id: str
    day: int
    new_infections: int
    new_admissions: int
    new_discharges: int
    new_overflow_discharges: int
    new_deaths: int
    returns_to_susceptible: int
    infectious_count: int
    hospitalized_count: int
    workforce_out_fraction: float
    # today's admissions, needed downstream to tie equipment to a patient's stay
    admissions: tuple[AdmissionCohort, ...] = ()
    susceptible_count: int = 0
    recovered_count: int = 0
    deceased_count: int = 0


def init_region(profile: RegionProfile, params: EpiParameters) -> EpiState:
    if profile.initial_infected > profile.population:
        raise EpiError("initial_infected exceeds population")
    cohorts = [[0, profile.initial_infected]] if profile.initial_infected else []
    return EpiState(
        day=0,
        susceptible=profile.population - profile.initial_infected,
        infectious=profile.initial_infected,
        hospitalized=0,
        deceased=0,
        recovered=0,
        infection_cohorts=cohorts,
    )


def infection_flow(state: EpiState, contact_rate: float, infectivity: float) -> int:
    """New infections for one day under frequency-dependent mixing."""
    n = state.total
    if n <= 0 or state.infectious <= 0 or state.susceptible <= 0:
        return 0
    raw = contact_rate * infectivity * state.susceptible * state.infectious / n
    return min(max(round_half_up(raw), 0), state.susceptible)


def _los_from_uniform(u: np.ndarray | float, at_capacity: bool, params: EpiParameters):
    if at_capacity:
        lo, hi = params.overflow_los_min, params.overflow_los_max
    else:
        lo, hi = params.los_min, params.los_max
    return lo + np.floor(np.asarray(u) * (hi - lo + 1)).astype(np.int64)


def sample_los(rng: np.random.Generator, at_capacity: bool, params: EpiParameters) -> int:
    """Length of stay in whole days for one admission."""
    return int(_los_from_uniform(rng.random(), at_capacity, params))


def _remove_from_cohorts(cohorts: list[list[int]], n: int) -> None:
    if n <= 0:
        return
    shares = largest_remainder(n, [c[1] for c in cohorts])
    for cohort, s in zip(cohorts, shares):
        cohort[1] -= s


def step_day(
    state: EpiState,
    profile: RegionProfile,
    params: EpiParameters,
    rng: np.random.Generator,
) -> tuple[EpiState, EpiDailyOutput]:
    """Advance one day.

    Flows apply in a fixed order: infection, hospitalization, cohort recovery,
    hospital discharge (with deaths), community deaths, loss of immunity.
    """
    contact = params.contact_rate(state.day)
    s = state.copy()
    t = state.day + 1

    # 1. S -> I
    new_inf = infection_flow(state, contact, params.infectivity)
    s.susceptible -= new_inf
    s.infectious += new_inf
    if new_inf:
        s.infection_cohorts.append([t, new_inf])

    # 2. I -> H, each admission gets its own length of stay
    n_adm = min(round_half_up(params.hospitalization_rate * s.infectious), s.infectious)
    admissions: list[AdmissionCohort] = []
    if n_adm:
        _remove_from_cohorts(s.infection_cohorts, n_adm)
        s.infectious -= n_adm
        n_regular = max(0, min(n_adm, profile.hospital_capacity - s.hospitalized))
        u = rng.random(n_adm)
        for overflow, draws in ((False, u[:n_regular]), (True, u[n_regular:])):
            if draws.size == 0:
                continue
            los = _los_from_uniform(draws, overflow, params)
            counts = np.bincount(los)
            lengths = np.flatnonzero(counts)
            for length, count in zip(lengths.tolist(), counts[lengths].tolist()):
                cohort = AdmissionCohort(t, t + length, overflow, count)
                admissions.append(cohort)
                s.admission_ledger.setdefault(cohort.discharge_day, []).append(cohort)
        s.hospitalized += n_adm

    # 3. I -> R for cohorts that reached the illness duration
    recovered_today = 0
    keep: list[list[int]] = []
    for cohort in s.infection_cohorts:
        if t - cohort[0] >= params.illness_duration:
            recovered_today += cohort[1]
        elif cohort[1] > 0:
            keep.append(cohort)
    s.infection_cohorts = keep
    s.infectious -= recovered_today

    # 4. H -> R or H -> D for patients due out today
    due = s.admission_ledger.pop(t, [])
    n_reg = sum(c.count for c in due if not c.overflow)
    n_ovf = sum(c.count for c in due if c.overflow)
    hosp_deaths = round_half_up(params.hospital_mortality_rate * (n_reg + n_ovf))
    d_reg, d_ovf = largest_remainder(hosp_deaths, [n_reg, n_ovf])
    s.hospitalized -= n_reg + n_ovf
    discharged = n_reg - d_reg
    overflow_discharged = n_ovf - d_ovf
    recovered_today += discharged + overflow_discharged

    # 5. I -> D in the community
    comm_deaths = min(round_half_up(params.community_mortality_rate * s.infectious), s.infectious)
    if comm_deaths:
        _remove_from_cohorts(s.infection_cohorts, comm_deaths)
        s.infection_cohorts = [c for c in s.infection_cohorts if c[1] > 0]
        s.infectious -= comm_deaths
    deaths = hosp_deaths + comm_deaths
    s.deceased += deaths

    s.recovered += recovered_today
    if recovered_today:
        s.recovery_cohorts.append([t, recovered_today])

    # 6. R -> S once immunity has waned
    returns = 0
    while s.recovery_cohorts and t - s.recovery_cohorts[0][0] >= params.immunity_duration:
        returns += s.recovery_cohorts.pop(0)[1]
    s.recovered -= returns
    s.susceptible += returns

    s.day = t
    if s.total != profile.population:
        raise ConservationError(
            f"{profile.region_id} day {t}: stocks sum to {s.total}, expected {profile.population}"
        )
    out = EpiDailyOutput(
        region_id=profile.region_id,
        day=t,
        new_infections=new_inf,
        new_admissions=n_adm,
        new_discharges=discharged,
        new_overflow_discharges=overflow_discharged,
        new_deaths=deaths,
        returns_to_susceptible=returns,
        infectious_count=s.infectious,
        hospitalized_count=s.hospitalized,
        workforce_out_fraction=s.infectious / profile.population,
        admissions=tuple(admissions),
        susceptible_count=s.susceptible,
        recovered_count=s.recovered,
        deceased_count=s.deceased,
    )
    return s, out


def run_epidemic(
    profile: RegionProfile,
    params: EpiParameters,
    horizon: int,
    seed: int,
) -> list[EpiDailyOutput]:
    """Simulate ``horizon`` days and return the daily outputs for days 1..horizon."""
    if horizon < 1:
        raise EpiError("horizon must be >= 1")
    if len(params.contact_schedule) < horizon:
        raise HorizonError(
            f"contact schedule covers {len(params.contact_schedule)} days, horizon is {horizon}"
        )
    rng = rngmod.substream(seed, rngmod.LOS, rngmod.name_key(profile.region_id))
    state = init_region(profile, params)
    outputs = []
    for _ in range(horizon):
        state, out = step_day(state, profile, params, rng)
        outputs.append(out)
    return outputs


def infected_workers(infectious: int, profile: RegionProfile) -> float:
    """Absolute number of infected people in the workforce."""
    return infectious * profile.workforce_share
