import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocsim.demand import (DemandSignal, HospitalOcState, OcUsageRates, attach_and_release,
                          baseline_units, daily_scrap, emit_signal, home_demand,
                          hospital_replenishment_trigger, increased_usage, initial_stock,
                          population_shares, region_signals, revert_increased_usage)
from ocsim.epi import AdmissionCohort, EpiDailyOutput, run_epidemic
from ocsim.scenarios import scale_contacts

RATES = OcUsageRates()


def epi_out(day=1, admissions=(), discharges=0, overflow=0):
    return EpiDailyOutput("T", day, 0, sum(c.count for c in admissions), discharges, overflow,
                          0, 0, 0, 0, 0.0, tuple(admissions))


def test_table_defaults():
    assert (RATES.hospital_covid_usage, RATES.discharge_usage, RATES.overflow_discharge_usage,
            RATES.inventory_rate, RATES.scrap_rate, RATES.units_per_bed,
            RATES.precovid_hospital_demand_national, RATES.precovid_home_demand_national) == \
        (0.065, 0.01, 0.02, 0.10, 0.01, 0.1, 171.0, 545.0)


@pytest.mark.parametrize("beds,units", [(14_000, 1_400), (0, 0), (57, 6)])
def test_initial_stock(beds, units):
    assert initial_stock(beds, RATES) == units


def test_rate_validation():
    with pytest.raises(ValueError):
        OcUsageRates(scrap_rate=1.2)
    with pytest.raises(ValueError):
        OcUsageRates(precovid_home_demand_national=-1)


# -- attachment --------------------------------------------------------------

def test_no_admissions_leaves_in_use():
    s = HospitalOcState("T", on_hand=100, in_use=10)
    out = attach_and_release(epi_out(), s, RATES, np.random.default_rng(0))
    assert out.in_use == 10


def test_attachment_mean_over_trials():
    cohort = AdmissionCohort(1, 10, False, 1000)
    g = np.random.default_rng(5)
    got = [attach_and_release(epi_out(admissions=[cohort]), HospitalOcState("T", 10_000), RATES, g).in_use
           for _ in range(10_000)]
    assert abs(np.mean(got) - 65) <= 2


def test_discharge_releases_unit_without_touching_stock():
    s = HospitalOcState("T", on_hand=50)
    g = np.random.default_rng(0)
    rates = OcUsageRates(hospital_covid_usage=1.0)
    s = attach_and_release(epi_out(1, [AdmissionCohort(1, 5, False, 1)]), s, rates, g)
    assert (s.in_use, s.on_hand) == (1, 50)
    s = attach_and_release(epi_out(5), s, rates, g)
    assert (s.in_use, s.on_hand) == (0, 50)


def test_shortage_counts_unmet_patients():
    s = HospitalOcState("T", on_hand=3)
    rates = OcUsageRates(hospital_covid_usage=1.0)
    s = attach_and_release(epi_out(1, [AdmissionCohort(1, 9, False, 5)]), s, rates,
                           np.random.default_rng(0))
    assert (s.in_use, s.unmet) == (3, 2)


def test_attachment_uses_common_draws_across_rates():
    cohorts = [AdmissionCohort(1, 9, False, 400)]
    lo = attach_and_release(epi_out(1, cohorts), HospitalOcState("T", 10_000), RATES,
                            np.random.default_rng(3))
    hi = attach_and_release(epi_out(1, cohorts), HospitalOcState("T", 10_000),
                            increased_usage(RATES), np.random.default_rng(3))
    assert hi.in_use >= lo.in_use


# -- scrap -------------------------------------------------------------------

@pytest.mark.parametrize("on_hand,in_use,scrapped", [(0, 0, 0), (1400, 0, 14), (100, 99, 1),
                                                     (1000, 1000, 0)])
def test_daily_scrap(on_hand, in_use, scrapped):
    s, n = daily_scrap(HospitalOcState("T", on_hand, in_use), RATES)
    assert n == scrapped
    assert s.on_hand == on_hand - scrapped
    assert s.scrapped_cumulative == scrapped
    assert s.in_use == in_use


# -- replenishment trigger ---------------------------------------------------

def test_trigger_examples():
    assert hospital_replenishment_trigger(HospitalOcState("T", 1000, 850), 0, RATES) == 0
    assert hospital_replenishment_trigger(HospitalOcState("T", 1000, 900), 50, RATES) == 95


def test_trigger_brute_force_grid():
    # oracle: integer form of  need > (1 - r) * stock  with r = 1/10
    for on_hand, in_use, req, on_order in itertools.product(range(0, 60, 3), range(0, 60, 4),
                                                            range(0, 20, 3), (0, 7)):
        if in_use > on_hand:
            continue
        need = in_use + req
        fires = 10 * need > 9 * (on_hand + on_order)
        want = -(-need // 10) if fires else 0
        s = HospitalOcState("T", on_hand, in_use, on_order=on_order)
        assert hospital_replenishment_trigger(s, req, RATES) == want, (on_hand, in_use, req, on_order)


def test_trigger_rejects_negative_requirement():
    with pytest.raises(ValueError):
        hospital_replenishment_trigger(HospitalOcState("T", 10), -1, RATES)


# -- home demand and baselines -----------------------------------------------

def test_home_demand_examples():
    assert home_demand(epi_out(discharges=0), RATES, 0.0) == 0
    assert home_demand(epi_out(overflow=200), RATES, 0.0) == 4
    assert home_demand(epi_out(discharges=300, overflow=200), RATES, 0.0) == 7


def test_national_baselines_split_by_share(bundled):
    _, inputs = bundled
    shares = population_shares(list(inputs.profiles.values()))
    assert math.isclose(sum(shares.values()), 1.0)
    for day in range(1, 31):
        hosp = sum(baseline_units(171, s, day) for s in shares.values())
        home = sum(home_demand(None, RATES, s, day) for s in shares.values())
        assert abs(hosp - 171) <= len(shares) and abs(home - 545) <= len(shares)
    totals = [sum(baseline_units(545, s, d) for d in range(1, 121)) for s in shares.values()]
    assert abs(sum(totals) - 545 * 120) <= len(shares)


@given(st.floats(0, 2000), st.floats(0, 1), st.integers(1, 400))
def test_cumulative_baseline_tracks_rate(rate, share, days):
    total = sum(baseline_units(rate, share, d) for d in range(1, days + 1))
    assert abs(total - rate * share * days) <= 0.5 + 1e-9


def test_emit_signal_zero_day():
    s = HospitalOcState("T", 0)
    sig = emit_signal("T", 1, s, hospital_baseline=0, replenishment=0, home=0, scrapped_today=0)
    assert (sig.hospital_order_qty, sig.home_order_qty, sig.oc_in_use, sig.oc_on_hand,
            sig.oc_scrapped_today, sig.total_qty) == (0, 0, 0, 0, 0, 0)


def test_increased_usage_modifier_round_trip():
    up = increased_usage(RATES)
    assert (up.hospital_covid_usage, up.discharge_usage, up.overflow_discharge_usage,
            up.inventory_rate) == (0.13, 0.02, 0.04, 0.15)
    assert revert_increased_usage(up) == RATES


# -- region series -----------------------------------------------------------

def _signals(inputs, region, rates=RATES, contact=False, seed=0, horizon=150):
    profile = inputs.profiles[region]
    p = inputs.epi_params[region]
    if contact:
        p = scale_contacts(p)
    shares = population_shares(list(inputs.profiles.values()))
    outs = run_epidemic(profile, p, horizon, seed)
    return region_signals(profile, outs, rates, shares[region], seed)[0]


def test_pre_covid_series_has_no_covid_terms(desk):
    _, inputs = desk
    profile = inputs.profiles["AZ"]
    sigs, _ = region_signals(profile, None, RATES, 0.1, 0, horizon=30)
    assert len(sigs) == 30
    assert all(s.hospital_replenishment_qty == 0 and s.covid_patients == 0 for s in sigs)
    with pytest.raises(ValueError):
        region_signals(profile, None, RATES, 0.1, 0)


def test_signals_are_non_negative_and_scrap_monotone(desk):
    _, inputs = desk
    for region in ("AZ", "CA", "WY"):
        sigs = _signals(inputs, region)
        for s in sigs:
            assert min(s.hospital_order_qty, s.home_order_qty, s.covid_patients, s.oc_in_use,
                       s.oc_on_hand, s.oc_scrapped_today) >= 0
            assert s.oc_in_use <= s.oc_on_hand


def test_same_seed_same_signals(desk):
    _, inputs = desk
    assert _signals(inputs, "GA", seed=4) == _signals(inputs, "GA", seed=4)


def test_doubled_usage_orders_dominate_cumulatively(desk):
    _, inputs = desk
    for region in inputs.profiles:
        base = itertools.accumulate(s.hospital_order_qty for s in _signals(inputs, region))
        more = itertools.accumulate(s.hospital_order_qty
                                    for s in _signals(inputs, region, increased_usage(RATES)))
        assert all(b <= m for b, m in zip(base, more)), region


def test_az_hospital_orders_are_few_and_sizeable(desk):
    _, inputs = desk
    for contact in (False, True):
        orders = [s.hospital_replenishment_qty for s in _signals(inputs, "AZ", contact=contact)
                  if s.hospital_replenishment_qty]
        assert 1 <= len(orders) <= 10
        assert 100 <= np.mean(orders) <= 1000


@settings(max_examples=40, deadline=None)
@given(on_hand=st.integers(0, 5000), in_use=st.integers(0, 5000), req=st.integers(0, 5000),
       rate=st.floats(0.0, 1.0))
def test_trigger_fires_iff_threshold_holds(on_hand, in_use, req, rate):
    s = HospitalOcState("T", max(on_hand, in_use), in_use)
    qty = hospital_replenishment_trigger(s, req, OcUsageRates(inventory_rate=rate))
    fires = in_use + req > (1 - rate) * s.on_hand
    assert (qty > 0) == (fires and math.ceil(rate * (in_use + req) - 1e-9) > 0)


def test_signal_fields_cover_dataclass():
    names = {f for f in DemandSignal.__dataclass_fields__}
    assert set(DemandSignal.FIELDS) == names
