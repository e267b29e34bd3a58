"""Named random substreams derived from a single 64-bit seed.

Each consumer asks for a stream by name (plus optional integer keys such as a
region index), so adding a new consumer never shifts the draws of another.
"""

from __future__ import annotations

import zlib

import numpy as np

EPIDEMIC = "epidemic"
LOS = "los"
OC_ATTACH = "oc_attachment"
LEAD_TIME = "lead_time_noise"
ARRIVALS = "order_arrivals"


def name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, name, *keys)``."""
    seq = np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
        spawn_key=(name_key(name), *(int(k) for k in keys)),
    )
    return np.random.Generator(np.random.PCG64(seq))
