"""Counter-based random streams for trial simulation.

Every trial gets its own Philox stream keyed by ``(seed, trial_index)``, so a
trial's record depends on nothing but those two numbers.  A trial consumes
exactly ``DRAWS_PER_TRIAL`` uniforms, in this order:

    0. Bob's choice of axis
    1. Bob's outcome
    2. Alice's outcome
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 20000601
DRAWS_PER_TRIAL = 3


def trial_stream(seed: int, trial_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.Philox(ss))


def trial_uniforms(seed: int, trial_index: int) -> np.ndarray:
    return trial_stream(seed, trial_index).random(DRAWS_PER_TRIAL)


def pick(weights, u: float) -> int:
    """Inverse-CDF sample of an index from (unnormalized) weights."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError("weights sum to zero")
    cdf = np.cumsum(w) / total
    idx = int(np.searchsorted(cdf, u, side="right"))
    # guard the u ~ 1 rounding edge and skip trailing zero-weight entries
    idx = min(idx, len(w) - 1)
    while w[idx] == 0 and idx > 0:
        idx -= 1
    return idx
