"""Counter-based random streams: one independent generator per trial.

Streams are derived from (master seed, point index, trial index) through a
SeedSequence spawn key, so adding sweep axes or reordering execution never
perturbs any other trial's randomness, and results are identical for any
worker count.
"""
from __future__ import annotations

import numpy as np


def trial_rng(master_seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    """The dedicated generator for one (point, trial) cell of an experiment."""
    seq = np.random.SeedSequence(entropy=master_seed,
                                 spawn_key=(point_index, trial_index))
    return np.random.Generator(np.random.Philox(seq))
