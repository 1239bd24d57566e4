"""Per-purpose random streams derived from one root seed.

Every stream is ``Generator(PCG64(SeedSequence(seed, spawn_key=(id,))))``,
so drawing more numbers in one phase never shifts another phase.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence(entropy=seed, spawn_key=(stream_id,))"

STREAM_IDS = {
    "choose": 0,
    "compensate": 1,
    "greedy": 2,
    "sample": 3,
    "diagnostics": 4,
}


def stream(seed: int, name: str) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(STREAM_IDS[name],))
    return np.random.Generator(np.random.PCG64(ss))


def streams(seed: int) -> dict[str, np.random.Generator]:
    return {name: stream(seed, name) for name in STREAM_IDS}
