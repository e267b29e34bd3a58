"""Run configuration: an INI-style file of ``key = value`` lines.

Grammar::

    # comment
    seed = 7                      # keys before any section belong to [run]
    oc.inventory_rate = 0.15      # dotted keys address a section from anywhere

    [run]        seed, horizon, start_date, end_date, replications, regions, out,
                 workers, audit
    [paths]      nodes, bom, regions, contacts, actuals
    [scenario]   demand_scenario, inventory_strategy, transport_strategy,
                 contact_scaling, contact_step
    [epi]        disease and hospital parameters, plus workforce_share
    [oc]         OC usage and inventory rates
    [transport]  speeds, handling times, air threshold
    [supply]     service level, cycle lengths, utilizations, lead-time noise

Every key has a default; unknown sections or keys raise ``ConfigError``.
Relative paths resolve against the config file's directory. An empty path
selects the bundled synthetic instance.
"""

from __future__ import annotations

import configparser
import dataclasses
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .demand import OcUsageRates
from .des.engine import SupplyChainConfig
from .des.policy import PolicyMode, TransportStrategy
from .network import TransportConstants
from .scenarios import DemandScenario, ScenarioSpec

_ROOT = "__root__"


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


@dataclass(frozen=True)
class EpiDefaults:
    """Overrides applied to every region's epidemic parameters."""

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
    workforce_share: float = 0.5


@dataclass(frozen=True)
class Paths:
    nodes: Path | None = None
    bom: Path | None = None
    regions: Path | None = None
    contacts: Path | None = None
    actuals: Path | None = None


@dataclass(frozen=True)
class ScenarioSection:
    demand_scenario: str = DemandScenario.BASELINE.value
    inventory_strategy: str = PolicyMode.STATIC.value
    transport_strategy: str = TransportStrategy.GROUND_ONLY.value
    contact_scaling: str = "relative"
    contact_step: float = 0.001


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    start_date: dt.date = dt.date(2020, 11, 20)
    end_date: dt.date = dt.date(2021, 3, 21)
    # explicit horizon in days; 0 means end_date - start_date
    horizon: int = 0
    replications: int = 1
    regions: tuple[str, ...] = ()
    out: Path = Path("out")
    workers: int = 1
    # recompute every touched stock's position after each event (slower)
    audit: bool = False


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    paths: Paths = field(default_factory=Paths)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    epi: EpiDefaults = field(default_factory=EpiDefaults)
    oc: OcUsageRates = field(default_factory=OcUsageRates)
    transport: TransportConstants = field(default_factory=TransportConstants)
    supply: SupplyChainConfig = field(default_factory=SupplyChainConfig)

    @property
    def horizon(self) -> int:
        if self.run.horizon:
            return self.run.horizon
        return (self.run.end_date - self.run.start_date).days

    def supply_config(self) -> SupplyChainConfig:
        return dataclasses.replace(self.supply, transport=self.transport)

    def scenario_spec(self, **overrides: Any) -> ScenarioSpec:
        values = dict(
            demand_scenario=self.scenario.demand_scenario,
            inventory_strategy=self.scenario.inventory_strategy,
            transport_strategy=self.scenario.transport_strategy,
            regions=self.run.regions,
            horizon=self.horizon,
            seed=self.run.seed,
            replications=self.run.replications,
            contact_scaling=self.scenario.contact_scaling,
            contact_step=self.scenario.contact_step,
        )
        values.update(overrides)
        return ScenarioSpec(**values)

    def with_run(self, **changes: Any) -> RunConfig:
        return dataclasses.replace(self, run=dataclasses.replace(self.run, **changes))


_SECTIONS: dict[str, type] = {
    "run": RunSection,
    "paths": Paths,
    "scenario": ScenarioSection,
    "epi": EpiDefaults,
    "oc": OcUsageRates,
    "transport": TransportConstants,
    "supply": SupplyChainConfig,
}
_NOT_CONFIGURABLE = {("supply", "transport")}


def _field_types(cls: type) -> dict[str, Any]:
    hints = {f.name: f for f in dataclasses.fields(cls)}
    return {name: f for name, f in hints.items() if f.init}


def _convert(section: str, key: str, raw: str, default: Any, base: Path) -> Any:
    raw = raw.strip()
    try:
        if section == "paths":
            if not raw:
                return None
            p = Path(raw).expanduser()
            return p if p.is_absolute() else (base / p)
        if key == "out":
            p = Path(raw).expanduser()
            return p if p.is_absolute() else (base / p)
        if key == "regions":
            return tuple(r.strip() for r in raw.split(",") if r.strip())
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(default, dt.date):
            return dt.date.fromisoformat(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def parse_config_text(text: str, base_dir: Path | str = ".") -> RunConfig:
    base = Path(base_dir)
    parser = configparser.ConfigParser(
        default_section="__no_defaults__", interpolation=None,
        inline_comment_prefixes=("#", ";"), strict=True,
    )
    parser.optionxform = str  # keep key case so typos are reported verbatim
    try:
        parser.read_string(f"[{_ROOT}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    values: dict[str, dict[str, str]] = {name: {} for name in _SECTIONS}
    for section in parser.sections():
        if section != _ROOT and section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            target, name = section, key
            if "." in key:
                target, name = key.split(".", 1)
                if target not in _SECTIONS:
                    raise ConfigError(f"unknown key {key!r}: no section {target!r}")
            elif section == _ROOT:
                target = "run"
            if name in values[target]:
                raise ConfigError(f"key {target}.{name} given twice")
            values[target][name] = raw

    built = {}
    for section, cls in _SECTIONS.items():
        defaults = cls()
        fields = _field_types(cls)
        kwargs = {}
        for key, raw in values[section].items():
            if key not in fields or (section, key) in _NOT_CONFIGURABLE:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            kwargs[key] = _convert(section, key, raw, getattr(defaults, key), base)
        try:
            built[section] = cls(**{**{k: getattr(defaults, k) for k in fields}, **kwargs})
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}") from None

    cfg = RunConfig(**built)
    try:
        cfg.scenario_spec()
    except ValueError as exc:
        raise ConfigError(f"[scenario] {exc}") from None
    if cfg.horizon < 1:
        raise ConfigError("end_date must be after start_date")
    if cfg.run.workers < 1:
        raise ConfigError("[run] workers must be >= 1")
    return cfg


def parse_config(path: str | Path | None = None) -> RunConfig:
    """Load ``path``; ``None`` gives the all-defaults configuration."""
    if path is None:
        return parse_config_text("")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, path.parent)
