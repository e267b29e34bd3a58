"""CSV ingestion, validation against reported cases, and output files.

Every writer uses a fixed header, ``\\n`` line endings and a stable row order,
and prints floats with ``repr`` so a re-read gives back the same value. Two
runs of one configuration therefore produce byte-identical files.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .demand import DemandSignal
from .des.engine import EXPORTED_CLASSES, Order, OrderClass, Simulation
from .epi import EpiError, EpiParameters, RegionProfile
from .network import Network, NetworkError, load_network
from .scenarios import STRATEGIES, DemandScenario, MetricsReport, ModelInputs

REGION_HEADER = ["region_id", "population", "hospital_capacity", "initial_infected"]
CONTACT_HEADER = ["region_id", "day", "contact_rate"]
ACTUALS_HEADERS = (["region_id", "day", "cases"], ["region_id", "date", "cases"])
ORDER_HEADER = ["order_id", "class", "origin", "destination", "qty", "placed_at",
                "fulfilled_at", "mode"]
INVENTORY_HEADER = ["facility", "day", "on_hand", "position", "backlog"]
REPORT_HEADER = [
    "demand_scenario", "strategy", "seeds", "horizon",
    "mean_daily_manufacturer_demand", "mean_daily_replenishment_units",
    "customer_completed", "customer_open", "customer_median", "customer_p90",
    "distributor_completed", "distributor_open", "distributor_median", "distributor_p90",
]
TIMESERIES = {
    # file stem: (key column, MetricsReport attribute)
    "hospital_orders": ("region_id", "hospital_orders"),
    "availability": ("region_id", "availability"),
    "daily_demand": ("facility", "daily_demand"),
    "backlog": ("facility", "backlog"),
}


class DataValidationError(ValueError):
    """An input data file is missing, malformed or inconsistent."""


def bundled_data_dir() -> Path:
    return Path(__file__).parent / "data"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _read_csv(path: Path, headers: Sequence[Sequence[str]]) -> tuple[list[str], list[tuple[int, dict]]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataValidationError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.DictReader(fh)
        got = [h.strip() for h in reader.fieldnames or []]
        if got not in [list(h) for h in headers]:
            want = " or ".join(",".join(h) for h in headers)
            raise DataValidationError(f"{path}: expected header {want}, got {','.join(got)}")
        rows = [(n, {k.strip(): (v or "").strip() for k, v in row.items() if k is not None})
                for n, row in enumerate(reader, start=2)]
    return got, rows


# ---------------------------------------------------------------------------
# ingestion


def ingest_regions(path: str | Path, workforce_share: float = 0.5) -> list[RegionProfile]:
    path = Path(path)
    _, rows = _read_csv(path, [REGION_HEADER])
    profiles, seen = [], set()
    for lineno, row in rows:
        rid = row["region_id"]
        try:
            if not rid:
                raise ValueError("empty region_id")
            if rid in seen:
                raise ValueError(f"duplicate region_id {rid}")
            profiles.append(RegionProfile(
                rid, int(row["population"]), int(row["hospital_capacity"]),
                int(row["initial_infected"]), workforce_share))
        except (ValueError, EpiError) as exc:
            raise DataValidationError(f"{path}:{lineno}: {exc}") from None
        seen.add(rid)
    return profiles


def ingest_contacts(path: str | Path) -> dict[str, tuple[float, ...]]:
    """Per-region contact schedules; days must run 0, 1, 2, ... without gaps."""
    path = Path(path)
    _, rows = _read_csv(path, [CONTACT_HEADER])
    days: dict[str, dict[int, float]] = {}
    for lineno, row in rows:
        try:
            day, rate = int(row["day"]), float(row["contact_rate"])
        except ValueError as exc:
            raise DataValidationError(f"{path}:{lineno}: {exc}") from None
        if day < 0 or rate < 0 or not math.isfinite(rate):
            raise DataValidationError(f"{path}:{lineno}: day and contact_rate must be >= 0")
        by_day = days.setdefault(row["region_id"], {})
        if day in by_day:
            raise DataValidationError(f"{path}:{lineno}: duplicate day {day} for {row['region_id']}")
        by_day[day] = rate
    out = {}
    for rid, by_day in days.items():
        if sorted(by_day) != list(range(len(by_day))):
            raise DataValidationError(f"{path}: contact days for {rid} are not contiguous from 0")
        out[rid] = tuple(by_day[d] for d in range(len(by_day)))
    return out


def ingest_actuals(path: str | Path, start_date: dt.date | None = None) -> dict[str, dict[int, float]]:
    """Reported case series keyed by region then day offset.

    A ``date`` column is converted to a day offset from ``start_date``.
    """
    path = Path(path)
    header, rows = _read_csv(path, ACTUALS_HEADERS)
    out: dict[str, dict[int, float]] = {}
    for lineno, row in rows:
        try:
            if "date" in header:
                if start_date is None:
                    raise ValueError("a date column needs a start date")
                day = (dt.date.fromisoformat(row["date"]) - start_date).days
            else:
                day = int(row["day"])
            cases = float(row["cases"])
        except ValueError as exc:
            raise DataValidationError(f"{path}:{lineno}: {exc}") from None
        series = out.setdefault(row["region_id"], {})
        if day in series:
            raise DataValidationError(f"{path}:{lineno}: duplicate day {day} for {row['region_id']}")
        series[day] = cases
    return out


def load_network_from(cfg: RunConfig) -> Network:
    data = bundled_data_dir()
    try:
        return load_network(cfg.paths.nodes or data / "nodes.csv", cfg.paths.bom or data / "bom.csv")
    except OSError as exc:
        raise DataValidationError(f"cannot read network: {exc}") from None
    except NetworkError as exc:
        raise DataValidationError(str(exc)) from None


def load_inputs(cfg: RunConfig) -> tuple[Network, ModelInputs]:
    """Network and per-region model inputs for ``cfg``, checked for coverage."""
    data = bundled_data_dir()
    network = load_network_from(cfg)
    profiles = {p.region_id: p for p in ingest_regions(cfg.paths.regions or data / "regions.csv",
                                                      cfg.epi.workforce_share)}
    schedules = ingest_contacts(cfg.paths.contacts or data / "contacts.csv")
    regions = cfg.run.regions or tuple(sorted(profiles))
    missing = [r for r in regions if r not in profiles]
    if missing:
        raise DataValidationError(f"regions not in the regions file: {missing}")
    dists = network.distributors
    for r in regions:
        if r not in dists:
            raise DataValidationError(f"region {r} has no distributor in the network")
        if r not in schedules:
            raise DataValidationError(f"region {r} has no contact schedule")
        if len(schedules[r]) < cfg.horizon:
            raise DataValidationError(
                f"contact schedule for {r} covers {len(schedules[r])} days, horizon is {cfg.horizon}")
    epi_kwargs = {k: v for k, v in vars(cfg.epi).items() if k != "workforce_share"}
    try:
        epi = {r: EpiParameters(schedules[r], **epi_kwargs) for r in regions}
    except EpiError as exc:
        raise DataValidationError(str(exc)) from None
    inputs = ModelInputs({r: profiles[r] for r in regions}, epi, cfg.oc, cfg.supply_config())
    return network, inputs


# ---------------------------------------------------------------------------
# validation against reported cases


@dataclass(frozen=True)
class FitReport:
    region_id: str
    n_days: int
    mape: float          # percent, over days with non-zero actuals
    rmse: float
    peak_day_offset: int  # model peak day minus actual peak day


def fit_series(region_id: str, model: Mapping[int, float], actual: Mapping[int, float]) -> FitReport:
    days = sorted(set(model) & set(actual))
    if not days:
        raise DataValidationError(f"{region_id}: model and actual series share no days")
    errs = [model[d] - actual[d] for d in days]
    rmse = math.sqrt(sum(e * e for e in errs) / len(errs))
    pct = [abs(model[d] - actual[d]) / abs(actual[d]) for d in days if actual[d] != 0]
    mape = 100.0 * sum(pct) / len(pct) if pct else float("nan")
    peak_model = max(days, key=lambda d: (model[d], -d))
    peak_actual = max(days, key=lambda d: (actual[d], -d))
    return FitReport(region_id, len(days), mape, rmse, peak_model - peak_actual)


def validate_against_actuals(
    model_series: Mapping[str, Mapping[int, float] | Sequence[float]],
    actuals: Mapping[str, Mapping[int, float]] | str | Path,
    start_date: dt.date | None = None,
) -> list[FitReport]:
    """Per-region MAPE, RMSE and peak-day offset; nothing is fitted.

    A sequence model series is read as days 1, 2, ...
    """
    if isinstance(actuals, (str, Path)):
        actuals = ingest_actuals(actuals, start_date)
    reports = []
    for rid in sorted(actuals):
        if rid not in model_series:
            continue
        series = model_series[rid]
        if not isinstance(series, Mapping):
            series = {d: float(v) for d, v in enumerate(series, start=1)}
        reports.append(fit_series(rid, series, actuals[rid]))
    if not reports:
        raise DataValidationError("no region appears in both the model output and the actuals")
    return reports


def write_fit(path: str | Path, fits: Sequence[FitReport]) -> None:
    _write_csv(Path(path), ["region_id", "n_days", "mape", "rmse", "peak_day_offset"],
               [(f.region_id, f.n_days, f.mape, f.rmse, f.peak_day_offset) for f in fits])


# ---------------------------------------------------------------------------
# outputs


def write_signals(path: str | Path, signals: Mapping[str, Sequence[DemandSignal]]) -> None:
    rows = ([getattr(s, f) for f in DemandSignal.FIELDS]
            for rid in sorted(signals) for s in sorted(signals[rid], key=lambda s: s.day))
    _write_csv(Path(path), DemandSignal.FIELDS, rows)


def read_signals(path: str | Path) -> dict[str, list[DemandSignal]]:
    _, rows = _read_csv(Path(path), [DemandSignal.FIELDS])
    out: dict[str, list[DemandSignal]] = {}
    for _, row in rows:
        kwargs = {f: (row[f] if f == "region_id" else
                      float(row[f]) if f == "workforce_out_fraction" else int(row[f]))
                  for f in DemandSignal.FIELDS}
        out.setdefault(row["region_id"], []).append(DemandSignal(**kwargs))
    return out


def write_orders(path: str | Path, orders: Iterable[Order]) -> None:
    rows = ((o.order_id, o.order_class.value, o.origin, o.destination, o.qty, o.placed_at,
             o.fulfilled_at, o.mode)
            for o in sorted((o for o in orders if o.order_class in EXPORTED_CLASSES),
                            key=lambda o: o.order_id))
    _write_csv(Path(path), ORDER_HEADER, rows)


def read_orders(path: str | Path) -> list[Order]:
    _, rows = _read_csv(Path(path), [ORDER_HEADER])
    return [Order(int(r["order_id"]), OrderClass(r["class"]), r["origin"], r["destination"],
                  int(r["qty"]), float(r["placed_at"]),
                  float(r["fulfilled_at"]) if r["fulfilled_at"] else None, r["mode"])
            for _, r in rows]


def write_inventory(path: str | Path, sim: Simulation) -> None:
    snaps = sorted(sim.snapshots, key=lambda s: (s.facility, s.day))
    _write_csv(Path(path), INVENTORY_HEADER,
               ((s.facility, s.day, s.on_hand, s.position, s.backlog) for s in snaps))


def _report_order(r: MetricsReport) -> tuple[int, int]:
    scenarios = [s.value for s in DemandScenario]
    strategies = list(STRATEGIES)
    return (scenarios.index(r.demand_scenario),
            strategies.index(r.strategy) if r.strategy in strategies else len(strategies))


def report_rows(reports: Iterable[MetricsReport]) -> list[list]:
    rows = []
    for r in sorted(reports, key=_report_order):
        c = r.fulfillment[OrderClass.CUSTOMER.value]
        d = r.fulfillment[OrderClass.DISTRIBUTOR_REPLENISHMENT.value]
        rows.append([r.demand_scenario, r.strategy, ";".join(map(str, r.seeds)), r.horizon,
                     r.mean_daily_manufacturer_demand, r.mean_daily_replenishment_units,
                     c.completed, c.open_orders, c.median, c.p90,
                     d.completed, d.open_orders, d.median, d.p90])
    return rows


def write_report(path: str | Path, reports: Iterable[MetricsReport]) -> None:
    _write_csv(Path(path), REPORT_HEADER, report_rows(reports))


def read_report(path: str | Path) -> list[dict[str, str]]:
    _, rows = _read_csv(Path(path), [REPORT_HEADER])
    return [row for _, row in rows]


def write_timeseries(out_dir: str | Path, report: MetricsReport) -> None:
    out_dir = Path(out_dir)
    for stem, (key, attr) in TIMESERIES.items():
        series: Mapping[str, Sequence[int]] = getattr(report, attr)
        rows = ((k, day, v) for k in sorted(series)
                for day, v in enumerate(series[k], start=1))
        _write_csv(out_dir / f"{stem}.csv", [key, "day", "value"], rows)


def emit_cell(report: MetricsReport, out_dir: str | Path) -> None:
    """Signals, orders, inventory and time series for one scenario cell."""
    out_dir = Path(out_dir)
    if report.simulation is None:
        raise ValueError("report was produced without keep_simulation=True")
    write_signals(out_dir / "signals.csv", report.signals)
    write_orders(out_dir / "orders.csv", report.simulation.orders)
    write_inventory(out_dir / "inventory.csv", report.simulation)
    write_timeseries(out_dir / "timeseries", report)


def cell_dirname(report: MetricsReport) -> str:
    return f"{report.demand_scenario}__{report.strategy.replace('+', '_')}"


def emit_outputs(reports: Sequence[MetricsReport], out_dir: str | Path) -> Path:
    """Write ``report.csv`` plus per-cell files.

    A single report puts its cell files directly in ``out_dir``; several
    reports each get ``cells/<scenario>__<strategy>/``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report(out_dir / "report.csv", reports)
    if len(reports) == 1:
        emit_cell(reports[0], out_dir)
    else:
        for r in reports:
            if r.simulation is not None:
                emit_cell(r, out_dir / "cells" / cell_dirname(r))
    return out_dir / "report.csv"


def format_report(rows: Sequence[Mapping[str, str]]) -> str:
    """Two p90 tables, strategies by demand scenario."""
    scenarios = [s.value for s in DemandScenario if any(r["demand_scenario"] == s.value for r in rows)]
    strategies = list(dict.fromkeys(r["strategy"] for r in rows))
    cells = {(r["demand_scenario"], r["strategy"]): r for r in rows}
    lines = []
    for title, col in (("customer order p90 (days)", "customer_p90"),
                       ("distributor replenishment p90 (days)", "distributor_p90")):
        lines.append(title)
        lines.append("  " + f"{'strategy':<16}" + "".join(f"{s:>20}" for s in scenarios))
        for st in strategies:
            vals = []
            for sc in scenarios:
                row = cells.get((sc, st))
                vals.append(f"{float(row[col]):>20.3f}" if row and row[col] else f"{'-':>20}")
            lines.append("  " + f"{st:<16}" + "".join(vals))
    lines.append("mean daily manufacturer demand")
    for sc in scenarios:
        first = next(r for r in rows if r["demand_scenario"] == sc)
        lines.append(f"  {sc:<18}{float(first['mean_daily_manufacturer_demand']):>12.1f}")
    return "\n".join(lines)
