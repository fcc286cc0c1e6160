"""Deterministic random stream splitting.

Every random draw in a run comes from a stream derived from a master seed
and an integer key path, e.g. ``stream(seed, ARM_FLAT, replicate, PURPOSE_GRAPH)``.
Streams are addressed by key rather than spawned in sequence, so replicate
``i`` sees the same numbers no matter how many other replicates exist.
"""

from __future__ import annotations

import numpy as np

from neutralcopy.errors import InvalidParameterError

# Purpose keys for the sub-streams of a single replicate.
PURPOSE_GRAPH = 0
PURPOSE_TRAITS = 1
PURPOSE_DYNAMICS = 2
PURPOSE_PERMUTATION = 3

# Key used in place of a replicate index for the shared graph in fixed-graph mode.
FIXED_GRAPH_KEY = 2**32 - 1

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(master_seed: int, *keys: int) -> np.random.Generator:
    """Return the PCG64 generator for ``(master_seed, *keys)``.

    The stream is ``PCG64(SeedSequence(entropy=master_seed, spawn_key=keys))``.
    With no keys this is the same as ``np.random.default_rng(master_seed)``.
    """
    ss = np.random.SeedSequence(entropy=check_seed(master_seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
