"""Derivation of independent seeds from one root seed."""

import numpy as np

from .exceptions import ArgumentError

PURPOSES = {"graph": 1, "split": 2, "shift": 3, "init": 4, "spikes": 5}


def derive_seed(root, purpose):
    """32-bit seed for one consumer of randomness (``graph``, ``split``, ...)."""
    if purpose not in PURPOSES:
        raise ArgumentError(f"unknown seed purpose {purpose!r}; expected one of {sorted(PURPOSES)}")
    ss = np.random.SeedSequence([int(root), PURPOSES[purpose]])
    return int(ss.generate_state(1)[0])
