"""Splittable, counter-based random streams.

Every stream is a Philox generator whose key is derived from
``(master_seed, *path)``, so chain ``i`` of a run always sees the same numbers
no matter how chains are scheduled or batched.
"""

from __future__ import annotations

import numpy as np

# sub-stream labels inside one chain
NOISE = 0
ACCEPT = 1
INIT = 2


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator addressed by ``path`` under ``master_seed``."""
    if master_seed < 0 or master_seed >= 2**64:
        raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))


def split(master_seed: int, index: int) -> int:
    """Derive a child 64-bit seed, e.g. for a chain or a grid point."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
