"""Command line: ``ocsim run|sweep|validate|report``.

Exit codes: 0 success, 2 configuration error, 3 data validation error,
4 runtime invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import io
from .config import ConfigError, RunConfig, parse_config
from .des.engine import InvariantError
from .epi import ConservationError, EpiError, run_epidemic
from .network import NetworkError
from .scenarios import STRATEGIES, DemandScenario, MetricsReport, ScenarioSpec, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4
GRID_HEADER = ["demand_scenario", "strategy"]


def _load(args) -> RunConfig:
    cfg = parse_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = Path(args.out)
    if args.replications is not None:
        if args.replications < 1:
            raise ConfigError("--replications must be >= 1")
        changes["replications"] = args.replications
    return cfg.with_run(**changes) if changes else cfg


def _summary(r: MetricsReport) -> str:
    return (f"{r.demand_scenario:<18} {r.strategy:<15} demand/day {r.mean_daily_manufacturer_demand:8.1f}"
            f"  customer p90 {r.p90('customer'):7.3f}"
            f"  distributor p90 {r.p90('distributor_replenishment'):7.3f}")


def cmd_run(args) -> int:
    cfg = _load(args)
    network, inputs = io.load_inputs(cfg)
    report = run_scenario(cfg.scenario_spec(), network, inputs, keep_simulation=True,
                          audit=cfg.run.audit)
    path = io.emit_outputs([report], cfg.run.out)
    print(_summary(report))
    print(f"wrote {path.parent}")
    return EXIT_OK


def read_grid(path: str | Path) -> list[tuple[str, str]]:
    """Cells from a ``demand_scenario,strategy`` CSV; ``*`` expands to every value."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read grid {path}: {exc.strerror}") from None
    with fh:
        reader = csv.DictReader(fh)
        if [h.strip() for h in reader.fieldnames or []] != GRID_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(GRID_HEADER)}")
        cells = []
        for lineno, row in enumerate(reader, start=2):
            sc, st = row["demand_scenario"].strip(), row["strategy"].strip()
            scenarios = [s.value for s in DemandScenario] if sc == "*" else [sc]
            strategies = list(STRATEGIES) if st == "*" else [st]
            for s in scenarios:
                if s not in {d.value for d in DemandScenario}:
                    raise ConfigError(f"{path}:{lineno}: unknown demand scenario {s!r}")
            for s in strategies:
                if s not in STRATEGIES:
                    raise ConfigError(f"{path}:{lineno}: unknown strategy {s!r}")
            cells.extend(itertools.product(scenarios, strategies))
    return list(dict.fromkeys(cells))


def _sweep_cell(job) -> MetricsReport:
    spec, network, inputs, out_dir, audit = job
    report = run_scenario(spec, network, inputs, keep_simulation=True, audit=audit)
    io.emit_cell(report, Path(out_dir) / "cells" / io.cell_dirname(report))
    return replace(report, simulation=None)


def cmd_sweep(args) -> int:
    cfg = _load(args)
    cells = read_grid(args.grid)
    network, inputs = io.load_inputs(cfg)
    jobs = []
    for scenario, label in cells:
        inv, tr = STRATEGIES[label]
        spec: ScenarioSpec = cfg.scenario_spec(demand_scenario=scenario, inventory_strategy=inv,
                                               transport_strategy=tr)
        jobs.append((spec, network, inputs, cfg.run.out, cfg.run.audit))
    if cfg.run.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.run.workers) as pool:
            reports = list(pool.map(_sweep_cell, jobs))
    else:
        reports = [_sweep_cell(j) for j in jobs]
    io.emit_outputs(reports, cfg.run.out)
    for r in reports:
        print(_summary(r))
    print(f"wrote {Path(cfg.run.out)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)
    actuals = args.actuals or cfg.paths.actuals
    if actuals is None:
        raise ConfigError("no actual-cases file: pass --actuals or set paths.actuals")
    _, inputs = io.load_inputs(cfg)
    series = {}
    for rid, profile in inputs.profiles.items():
        outs = run_epidemic(profile, inputs.epi_params[rid], cfg.horizon, cfg.run.seed)
        series[rid] = {o.day: float(o.infectious_count) for o in outs}
    fits = io.validate_against_actuals(series, actuals, cfg.run.start_date)
    out = Path(cfg.run.out)
    io.write_fit(out / "fit.csv", fits)
    print(f"{'region':<8}{'days':>6}{'MAPE %':>10}{'RMSE':>14}{'peak offset':>13}")
    for f in fits:
        print(f"{f.region_id:<8}{f.n_days:>6}{f.mape:>10.2f}{f.rmse:>14.1f}{f.peak_day_offset:>13d}")
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.out_dir) / "report.csv"
    print(io.format_report(io.read_report(path)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def with_common(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("config", help="run configuration file")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--out", help="override [run] out directory")
        p.add_argument("--replications", type=int, help="override [run] replications")
        return p

    with_common(sub.add_parser("run", help="run the configured scenario")).set_defaults(func=cmd_run)
    sweep = with_common(sub.add_parser("sweep", help="run a grid of scenario cells"))
    sweep.add_argument("--grid", required=True, help="CSV of demand_scenario,strategy cells")
    sweep.set_defaults(func=cmd_sweep)
    val = with_common(sub.add_parser("validate", help="compare modeled and reported cases"))
    val.add_argument("--actuals", type=Path, help="CSV of region_id,day|date,cases")
    val.set_defaults(func=cmd_validate)
    rep = sub.add_parser("report", help="print the fulfillment tables of a finished run")
    rep.add_argument("out_dir")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (io.DataValidationError, NetworkError, EpiError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvariantError, ConservationError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
