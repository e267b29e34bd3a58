"""Static OC supply chain graph: facilities, bill of materials, routes.

``nodes.csv`` columns: node_id,role,lat,lon,region_id,capacity
``bom.csv`` columns:   step,part_type,qty_per_unit,producer_id

A BOM row whose producer is a sub-assembly facility names the plant that
makes the part; a row whose producer is a supplier lists an upstream source
for that part family.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

EARTH_RADIUS_MILES = 3958.8

NODE_HEADER = ["node_id", "role", "lat", "lon", "region_id", "capacity"]
BOM_HEADER = ["step", "part_type", "qty_per_unit", "producer_id"]
ASSEMBLY_STEPS = 4


class NetworkError(ValueError):
    """Invalid network data."""


class HeaderError(NetworkError):
    pass


class DuplicateNodeError(NetworkError):
    pass


class AssemblyCountError(NetworkError):
    pass


class DanglingReferenceError(NetworkError):
    pass


class BomError(NetworkError):
    pass


class Role(str, Enum):
    SUPPLIER = "supplier"
    SUBASSEMBLY = "subassembly"
    ASSEMBLY = "assembly"
    DISTRIBUTOR = "distributor"


class Mode(str, Enum):
    GROUND = "ground"
    AIR = "air"


@dataclass(frozen=True)
class FacilityNode:
    node_id: str
    role: Role
    lat: float
    lon: float
    region_id: str = ""
    capacity: float | None = None

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0):
            raise NetworkError(f"{self.node_id}: invalid coordinates ({self.lat}, {self.lon})")
        if self.role is Role.DISTRIBUTOR and not self.region_id:
            raise NetworkError(f"{self.node_id}: distributor without region_id")
        if self.capacity is not None and self.capacity < 0:
            raise NetworkError(f"{self.node_id}: negative capacity")


@dataclass(frozen=True)
class BomStep:
    step: int
    part_type: str
    qty_per_unit: int
    producers: tuple[str, ...]
    suppliers: tuple[str, ...] = ()


@dataclass(frozen=True)
class Route:
    origin: str
    destination: str
    distance: float
    modes: frozenset[Mode] = frozenset({Mode.GROUND, Mode.AIR})

    def __post_init__(self) -> None:
        if self.distance < 0:
            raise NetworkError("route distance must be >= 0")


@dataclass(frozen=True)
class TransportConstants:
    ground_speed: float = 500.0      # miles/day
    ground_handling: float = 0.25    # days
    air_speed: float = 3000.0
    air_handling: float = 0.5
    air_threshold_miles: float = 500.0


@dataclass
class Network:
    nodes: dict[str, FacilityNode]
    bom: tuple[BomStep, ...]
    _routes: dict[tuple[str, str], Route] = field(default_factory=dict, repr=False)

    @property
    def assembly(self) -> FacilityNode:
        return next(n for n in self.nodes.values() if n.role is Role.ASSEMBLY)

    def by_role(self, role: Role) -> list[FacilityNode]:
        return [n for n in self.nodes.values() if n.role is role]

    @property
    def distributors(self) -> dict[str, FacilityNode]:
        """Distributors keyed by region."""
        return {n.region_id: n for n in self.by_role(Role.DISTRIBUTOR)}

    def counts(self) -> dict[str, int]:
        return {r.value: len(self.by_role(r)) for r in Role}

    def route(self, origin: str, destination: str) -> Route:
        key = (origin, destination)
        if key not in self._routes:
            d = distance(self.nodes[origin], self.nodes[destination])
            self._routes[key] = Route(origin, destination, d)
        return self._routes[key]

    def producer_of(self, part_type: str) -> FacilityNode:
        """The sub-assembly plant closest to the assembly facility for ``part_type``."""
        step = next(s for s in self.bom if s.part_type == part_type)
        asm = self.assembly
        return min((self.nodes[p] for p in step.producers),
                   key=lambda n: (distance(n, asm), n.node_id))

    def restrict(self, region_ids: Iterable[str]) -> Network:
        """Copy keeping only the distributors serving ``region_ids``."""
        keep = set(region_ids)
        nodes = {k: n for k, n in self.nodes.items()
                 if n.role is not Role.DISTRIBUTOR or n.region_id in keep}
        missing = keep - {n.region_id for n in nodes.values() if n.role is Role.DISTRIBUTOR}
        if missing:
            raise DanglingReferenceError(f"no distributor for regions {sorted(missing)}")
        return Network(nodes, self.bom)


def distance(a: FacilityNode, b: FacilityNode) -> float:
    """Great-circle distance in miles."""
    return haversine_miles(a.lat, a.lon, b.lat, b.lon)


def haversine_miles(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dlat = p2 - p1
    dlon = math.radians(lon2 - lon1)
    h = math.sin(dlat / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_MILES * math.asin(min(1.0, math.sqrt(h)))


def transit_time(route: Route, mode: Mode, constants: TransportConstants = TransportConstants()) -> float:
    """Door-to-door days for one shipment on ``route``."""
    if mode not in route.modes:
        raise NetworkError(f"mode {mode.value} not permitted on {route.origin}->{route.destination}")
    if mode is Mode.AIR:
        return constants.air_handling + route.distance / constants.air_speed
    return constants.ground_handling + route.distance / constants.ground_speed


def _check_header(path: Path, got: list[str] | None, want: list[str]) -> None:
    if got != want:
        raise HeaderError(f"{path}: expected header {','.join(want)}, got {got}")


def _read_rows(path: Path, header: list[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        _check_header(path, [h.strip() for h in reader.fieldnames], header)
        return [{k.strip(): (v or "").strip() for k, v in row.items()} for row in reader]


def load_network(nodes_csv: str | Path, bom_csv: str | Path) -> Network:
    nodes_csv, bom_csv = Path(nodes_csv), Path(bom_csv)
    nodes: dict[str, FacilityNode] = {}
    for lineno, row in enumerate(_read_rows(nodes_csv, NODE_HEADER), start=2):
        try:
            role = Role(row["role"])
            node = FacilityNode(
                node_id=row["node_id"],
                role=role,
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                region_id=row["region_id"],
                capacity=float(row["capacity"]) if row["capacity"] else None,
            )
        except (KeyError, ValueError) as exc:
            if isinstance(exc, NetworkError):
                raise
            raise NetworkError(f"{nodes_csv}:{lineno}: {exc}") from exc
        if node.node_id in nodes:
            raise DuplicateNodeError(f"{nodes_csv}:{lineno}: duplicate node_id {node.node_id}")
        nodes[node.node_id] = node

    n_asm = sum(1 for n in nodes.values() if n.role is Role.ASSEMBLY)
    if n_asm == 0:
        raise AssemblyCountError("no assembly facility")
    if n_asm > 1:
        raise AssemblyCountError(f"{n_asm} assembly facilities, expected exactly one")
    regions = [n.region_id for n in nodes.values() if n.role is Role.DISTRIBUTOR]
    dup_regions = {r for r in regions if regions.count(r) > 1}
    if dup_regions:
        raise NetworkError(f"regions with several distributors: {sorted(dup_regions)}")

    steps: dict[str, dict] = {}
    for lineno, row in enumerate(_read_rows(bom_csv, BOM_HEADER), start=2):
        try:
            step, qty = int(row["step"]), int(row["qty_per_unit"])
        except ValueError as exc:
            raise BomError(f"{bom_csv}:{lineno}: {exc}") from exc
        part, producer = row["part_type"], row["producer_id"]
        if producer not in nodes:
            raise DanglingReferenceError(f"{bom_csv}:{lineno}: unknown producer {producer!r}")
        if qty < 1:
            raise BomError(f"{bom_csv}:{lineno}: qty_per_unit must be >= 1")
        entry = steps.setdefault(part, {"step": step, "qty": qty, "producers": [], "suppliers": []})
        if (entry["step"], entry["qty"]) != (step, qty):
            raise BomError(f"{bom_csv}:{lineno}: inconsistent step/qty for part {part}")
        role = nodes[producer].role
        if role is Role.SUBASSEMBLY:
            entry["producers"].append(producer)
        elif role is Role.SUPPLIER:
            entry["suppliers"].append(producer)
        else:
            raise BomError(f"{bom_csv}:{lineno}: {producer} ({role.value}) cannot produce parts")

    bom = tuple(sorted(
        (BomStep(e["step"], part, e["qty"], tuple(e["producers"]), tuple(e["suppliers"]))
         for part, e in steps.items()),
        key=lambda s: s.step,
    ))
    if sorted(s.step for s in bom) != list(range(1, ASSEMBLY_STEPS + 1)):
        raise BomError(f"BOM must define steps 1..{ASSEMBLY_STEPS}, got {[s.step for s in bom]}")
    for s in bom:
        if not s.producers:
            raise BomError(f"part {s.part_type} has no sub-assembly producer")
    return Network(nodes, bom)


def bundled_paths() -> tuple[Path, Path]:
    data = Path(__file__).parent / "data"
    return data / "nodes.csv", data / "bom.csv"


def load_bundled() -> Network:
    return load_network(*bundled_paths())
