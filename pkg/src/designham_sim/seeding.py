"""Counter-based seed derivation.

Every stochastic sub-task gets its seed from the master seed and a tuple of
integer counters (e.g. ``(time_index, member_index)``) through
``numpy.random.SeedSequence(master, spawn_key=counters)``.  A task's seed
depends only on its counters, never on scheduling, so serial and threaded
runs draw identical numbers.
"""

from __future__ import annotations

import os

import numpy as np


def child_seed(master: int, *counters: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(c) for c in counters))
    return int(ss.generate_state(1, np.uint64)[0])


def child_rng(master: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng(child_seed(master, *counters))


def default_threads() -> int:
    """Worker count from ``DESIGNHAM_THREADS`` (defaults to 1)."""
    value = os.environ.get("DESIGNHAM_THREADS", "").strip()
    try:
        return max(1, int(value)) if value else 1
    except ValueError:
        return 1
