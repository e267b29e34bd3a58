"""Regenerate the bundled synthetic instance under src/ocsim/data/.

Populations are rounded public census figures; bed counts, initial cases,
supplier locations and contact schedules are synthetic. Run from the repo
root: ``python scripts/make_bundled_data.py``.
"""

from __future__ import annotations

import csv
import math
import zlib
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "ocsim" / "data"
SEED = 20201120
SCHEDULE_DAYS = 400

# region: (population, lat, lon)
STATES = {
    "AL": (4903185, 32.8, -86.8), "AK": (731545, 61.2, -149.9), "AZ": (7278717, 33.5, -112.1),
    "AR": (3017804, 34.9, -92.4), "CA": (39512223, 36.8, -119.4), "CO": (5758736, 39.7, -105.0),
    "CT": (3565287, 41.6, -72.7), "DE": (973764, 39.0, -75.5), "DC": (705749, 38.9, -77.0),
    "FL": (21477737, 28.6, -82.4), "GA": (10617423, 33.7, -84.4), "HI": (1415872, 21.3, -157.8),
    "ID": (1787065, 43.6, -116.2), "IL": (12671821, 41.9, -87.6), "IN": (6732219, 39.8, -86.2),
    "IA": (3155070, 41.6, -93.6), "KS": (2913314, 38.5, -98.4), "KY": (4467673, 38.2, -85.8),
    "LA": (4648794, 30.5, -91.1), "ME": (1344212, 44.3, -69.8), "MD": (6045680, 39.3, -76.6),
    "MA": (6892503, 42.4, -71.1), "MI": (9986857, 42.3, -83.0), "MN": (5639632, 44.98, -93.3),
    "MS": (2976149, 32.3, -90.2), "MO": (6137428, 38.6, -90.2), "MT": (1068778, 46.9, -110.4),
    "NE": (1934408, 41.3, -96.0), "NV": (3080156, 36.2, -115.1), "NH": (1359711, 43.2, -71.5),
    "NJ": (8882190, 40.7, -74.2), "NM": (2096829, 35.1, -106.6), "NY": (19453561, 40.7, -74.0),
    "NC": (10488084, 35.8, -78.6), "ND": (762062, 46.8, -100.8), "OH": (11689100, 39.96, -83.0),
    "OK": (3956971, 35.5, -97.5), "OR": (4217737, 45.5, -122.7), "PA": (12801989, 40.0, -75.2),
    "RI": (1059361, 41.8, -71.4), "SC": (5148714, 34.0, -81.0), "SD": (884659, 43.5, -96.7),
    "TN": (6829174, 36.2, -86.8), "TX": (28995881, 29.8, -95.4), "UT": (3205958, 40.8, -111.9),
    "VT": (623989, 44.5, -73.2), "VA": (8535519, 37.5, -77.4), "WA": (7614893, 47.6, -122.3),
    "WV": (1792147, 38.3, -81.6), "WI": (5822434, 43.1, -89.4), "WY": (578759, 41.1, -104.8),
    "PR": (3193694, 18.4, -66.1),
}
# beds per 1,000 residents; AZ uses its stated statewide capacity
BEDS_PER_1000 = 2.4
FIXED_BEDS = {"AZ": 14000}

PARTS = [  # step, part_type, qty_per_unit, sub-assembly plant (lat, lon)
    (1, "compressor", 1, (35.1, -89.9)),
    (2, "sieve_bed", 2, (41.5, -81.7)),
    (3, "control_board", 1, (31.2, 121.5)),
    (4, "enclosure", 1, (25.7, -100.3)),
]
ASSEMBLY = (40.44, -79.99)
N_SUPPLIERS = 278
# supplier cluster centres (lat, lon, spread in degrees, weight)
CLUSTERS = [
    (40.0, -85.0, 6.0, 0.35), (25.0, -100.0, 4.0, 0.10), (31.0, 118.0, 5.0, 0.30),
    (49.0, 9.0, 4.0, 0.15), (13.0, 101.0, 4.0, 0.10),
]


def _unit(key: str) -> float:
    return (zlib.crc32(key.encode()) % 10000) / 10000.0


def region_rows() -> list[dict]:
    rows = []
    for rid, (pop, _, _) in STATES.items():
        beds = FIXED_BEDS.get(rid, round(pop * BEDS_PER_1000 / 1000))
        active = 0.006 + 0.006 * _unit("cases:" + rid)
        rows.append({"region_id": rid, "population": pop, "hospital_capacity": beds,
                     "initial_infected": round(pop * active)})
    return rows


def contact_schedule(rid: str) -> list[float]:
    """Winter wave: contacts stay high, then ease as mitigation tightens."""
    level = 1.55 + 0.30 * (_unit("level:" + rid) - 0.5)
    ease_day = 55 + 30 * _unit("ease:" + rid)
    floor = 1.00 + 0.15 * _unit("floor:" + rid)
    out = []
    for d in range(SCHEDULE_DAYS):
        w = 1.0 / (1.0 + math.exp(-(d - ease_day) / 8.0))
        seasonal = 0.04 * math.sin(2 * math.pi * d / 7.0)
        out.append(round(level * (1 - w) + floor * w + seasonal, 4))
    return out


def node_rows(rng: np.random.Generator) -> list[dict]:
    rows = [{"node_id": "ASM-1", "role": "assembly", "lat": ASSEMBLY[0], "lon": ASSEMBLY[1],
             "region_id": "", "capacity": ""}]
    for step, part, _, (lat, lon) in PARTS:
        rows.append({"node_id": f"SUB-{step}", "role": "subassembly", "lat": lat, "lon": lon,
                     "region_id": "", "capacity": ""})
    for rid, (_, lat, lon) in STATES.items():
        rows.append({"node_id": f"DIST-{rid}", "role": "distributor", "lat": lat, "lon": lon,
                     "region_id": rid, "capacity": ""})
    weights = np.array([c[3] for c in CLUSTERS])
    picks = rng.choice(len(CLUSTERS), size=N_SUPPLIERS, p=weights / weights.sum())
    for i, k in enumerate(picks):
        clat, clon, spread, _ = CLUSTERS[k]
        lat = float(np.clip(clat + rng.normal(0, spread), -89, 89))
        lon = float(np.clip(clon + rng.normal(0, spread), -179, 179))
        rows.append({"node_id": f"SUP-{i + 1:03d}", "role": "supplier", "lat": round(lat, 4),
                     "lon": round(lon, 4), "region_id": "", "capacity": ""})
    return rows


def bom_rows() -> list[dict]:
    rows = []
    for step, part, qty, _ in PARTS:
        rows.append({"step": step, "part_type": part, "qty_per_unit": qty, "producer_id": f"SUB-{step}"})
    # suppliers split evenly over the four part families, in id order
    for i in range(N_SUPPLIERS):
        step, part, qty, _ = PARTS[i % len(PARTS)]
        rows.append({"step": step, "part_type": part, "qty_per_unit": qty,
                     "producer_id": f"SUP-{i + 1:03d}"})
    return rows


def _write(path: Path, rows: list[dict], header: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    _write(OUT / "regions.csv", region_rows(),
           ["region_id", "population", "hospital_capacity", "initial_infected"])
    _write(OUT / "nodes.csv", node_rows(rng), ["node_id", "role", "lat", "lon", "region_id", "capacity"])
    _write(OUT / "bom.csv", bom_rows(), ["step", "part_type", "qty_per_unit", "producer_id"])
    contacts = [{"region_id": rid, "day": d, "contact_rate": c}
                for rid in STATES for d, c in enumerate(contact_schedule(rid))]
    _write(OUT / "contacts.csv", contacts, ["region_id", "day", "contact_rate"])


if __name__ == "__main__":
    main()
