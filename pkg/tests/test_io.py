import dataclasses
import filecmp

import pytest

from ocsim import io
from ocsim.config import parse_config_text
from ocsim.demand import OcUsageRates
from ocsim.scenarios import ScenarioSpec, run_matrix, run_scenario

from conftest import DESK_REGIONS

REGIONS = ("AZ", "GA", "VT")


def write(path, text):
    path.write_text(text)
    return path


# -- ingestion ---------------------------------------------------------------

def test_region_row(tmp_path):
    f = write(tmp_path / "r.csv", "region_id,population,hospital_capacity,initial_infected\n"
                                  "AZ,7278717,14000,79553\n")
    (p,) = io.ingest_regions(f)
    assert (p.region_id, p.population, p.hospital_capacity, p.initial_infected) == ("AZ", 7278717, 14000, 79553)


def test_negative_population_names_the_row(tmp_path):
    f = write(tmp_path / "r.csv", "region_id,population,hospital_capacity,initial_infected\n"
                                  "AZ,10,1,1\nGA,-5,1,1\n")
    with pytest.raises(io.DataValidationError, match=r"r\.csv:3"):
        io.ingest_regions(f)


@pytest.mark.parametrize("body", [
    "region_id,population\nAZ,1\n",
    "region_id,population,hospital_capacity,initial_infected\nAZ,1,1,1\nAZ,1,1,1\n",
    "region_id,population,hospital_capacity,initial_infected\nAZ,x,1,1\n",
])
def test_bad_region_files(tmp_path, body):
    with pytest.raises(io.DataValidationError):
        io.ingest_regions(write(tmp_path / "r.csv", body))


def test_bundled_ten_regions(desk):
    _, inputs = desk
    assert sorted(inputs.profiles) == sorted(DESK_REGIONS)
    assert inputs.profiles["AZ"].hospital_capacity == 14000


def test_contacts_need_contiguous_days(tmp_path):
    ok = write(tmp_path / "c.csv", "region_id,day,contact_rate\nAZ,0,1.5\nAZ,1,1.4\n")
    assert io.ingest_contacts(ok) == {"AZ": (1.5, 1.4)}
    gap = write(tmp_path / "g.csv", "region_id,day,contact_rate\nAZ,0,1.5\nAZ,2,1.4\n")
    with pytest.raises(io.DataValidationError, match="contiguous"):
        io.ingest_contacts(gap)


def test_short_contact_schedule_rejected():
    with pytest.raises(io.DataValidationError, match="covers"):
        io.load_inputs(parse_config_text("regions = AZ\nhorizon = 100000\n"))


def test_unknown_region_rejected():
    with pytest.raises(io.DataValidationError):
        io.load_inputs(parse_config_text("regions = ZZ\n"))


def test_actuals_by_date(tmp_path):
    import datetime as dt
    f = write(tmp_path / "a.csv", "region_id,date,cases\nAZ,2020-11-21,5\nAZ,2020-11-22,7\n")
    assert io.ingest_actuals(f, dt.date(2020, 11, 20)) == {"AZ": {1: 5.0, 2: 7.0}}
    with pytest.raises(io.DataValidationError):
        io.ingest_actuals(f)


# -- fit metrics ---------------------------------------------------------------

def test_identical_series_fit_perfectly():
    s = {d: 100.0 + d for d in range(1, 31)}
    f = io.fit_series("AZ", s, s)
    assert (f.mape, f.rmse, f.peak_day_offset) == (0.0, 0.0, 0)


def test_ten_percent_over_gives_mape_ten():
    actual = {d: 50.0 + d for d in range(1, 31)}
    model = {d: 1.10 * v for d, v in actual.items()}
    assert io.fit_series("AZ", model, actual).mape == pytest.approx(10.0)


def test_constant_offset_rmse():
    f = io.fit_series("AZ", {d: 100.0 for d in range(30)}, {d: 90.0 for d in range(30)})
    assert f.rmse == pytest.approx(10.0) and f.n_days == 30


def test_peak_offset_sign():
    model = {d: float(-(d - 12) ** 2) for d in range(30)}
    actual = {d: float(-(d - 10) ** 2) for d in range(30)}
    assert io.fit_series("AZ", model, actual).peak_day_offset == 2


def test_validate_skips_unknown_regions():
    fits = io.validate_against_actuals({"AZ": [1.0, 2.0]}, {"AZ": {1: 1.0, 2: 2.0}, "XX": {1: 1.0}})
    assert [f.region_id for f in fits] == ["AZ"]
    with pytest.raises(io.DataValidationError):
        io.validate_against_actuals({"AZ": [1.0]}, {"XX": {1: 1.0}})


# -- outputs -------------------------------------------------------------------

@pytest.fixture(scope="module")
def cell(desk):
    network, inputs = desk
    spec = ScenarioSpec("baseline", "dynamic", "air_over_500", REGIONS, 30, 5)
    return run_scenario(spec, network, inputs, keep_simulation=True)


def test_signals_round_trip(tmp_path, cell):
    io.write_signals(tmp_path / "s.csv", cell.signals)
    assert io.read_signals(tmp_path / "s.csv") == cell.signals


def test_orders_round_trip(tmp_path, cell):
    io.write_orders(tmp_path / "o.csv", cell.simulation.orders)
    back = io.read_orders(tmp_path / "o.csv")
    exported = sorted(cell.simulation.exported_orders(), key=lambda o: o.order_id)
    key = lambda o: (o.order_id, o.order_class, o.origin, o.destination, o.qty, o.placed_at,
                     o.fulfilled_at, o.mode)
    assert [key(o) for o in back] == [key(o) for o in exported]


def test_single_cell_layout(tmp_path, cell):
    io.emit_outputs([cell], tmp_path)
    names = {p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*.csv")}
    assert {"report.csv", "signals.csv", "orders.csv", "inventory.csv",
            "timeseries/backlog.csv", "timeseries/availability.csv"} <= names
    assert b"\r\n" not in (tmp_path / "orders.csv").read_bytes()


def test_zero_demand_run_writes_header_only_orders(tmp_path, desk):
    network, inputs = desk
    quiet = dataclasses.replace(inputs, rates=OcUsageRates(precovid_hospital_demand_national=0,
                                                           precovid_home_demand_national=0))
    report = run_scenario(ScenarioSpec("pre_covid", regions=REGIONS, horizon=20), network, quiet,
                          keep_simulation=True)
    io.emit_outputs([report], tmp_path)
    assert (tmp_path / "orders.csv").read_text() == ",".join(io.ORDER_HEADER) + "\n"
    assert report.mean_daily_manufacturer_demand == 0


def test_outputs_are_byte_identical(tmp_path, desk):
    network, inputs = desk
    spec = ScenarioSpec("increased_usage", "static", "ground_only", REGIONS, 30, 2)
    for d in ("a", "b"):
        io.emit_outputs([run_scenario(spec, network, inputs, keep_simulation=True)], tmp_path / d)
    files = [p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv")]
    assert len(files) >= 8
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b",
                                               [str(f) for f in files], shallow=False)
    assert not mismatch and not errors


def test_full_matrix_report_has_twelve_rows(tmp_path, desk):
    network, inputs = desk
    reports = run_matrix(network, inputs, REGIONS, horizon=20, seed=1)
    io.write_report(tmp_path / "report.csv", reports.values())
    rows = io.read_report(tmp_path / "report.csv")
    assert len(rows) == 12
    assert [r["demand_scenario"] for r in rows[:3]] == ["pre_covid"] * 3
    assert [r["strategy"] for r in rows[:3]] == ["static+ground", "dynamic+ground", "dynamic+air"]
    text = io.format_report(rows)
    assert "customer order p90" in text and "increased_usage" in text
