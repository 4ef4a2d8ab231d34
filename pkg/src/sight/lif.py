"""Leaky integrate-and-fire neurons.

``V' = beta * V + I``; a unit fires where ``V' >= threshold`` and is then
reset (to zero, or by subtracting the threshold). No refractory period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ArgumentError, DataError, ShapeError

RESET_MODES = ("zero", "subtract")


@dataclass(frozen=True)
class LifParams:
    beta: float = 0.9
    threshold: float = 0.5
    reset: str = "subtract"

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ArgumentError(f"leak beta must lie in [0, 1), got {self.beta}")
        if not self.threshold > 0.0:
            raise ArgumentError(f"threshold must be > 0, got {self.threshold}")
        if self.reset not in RESET_MODES:
            raise ArgumentError(f"reset must be one of {RESET_MODES}, got {self.reset!r}")


@dataclass(frozen=True, eq=False)
class LifState:
    membrane: np.ndarray

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape))


def _integrate(membrane, current, params):
    """In-place LIF update of ``membrane``; returns the float spike mask."""
    membrane *= params.beta
    membrane += current
    fired = membrane >= params.threshold
    if params.reset == "zero":
        membrane[fired] = 0.0
    else:
        membrane[fired] -= params.threshold
    return fired.astype(np.float64)


def _check(membrane, current):
    current = np.asarray(current, dtype=np.float64)
    if membrane.shape != current.shape:
        raise ShapeError(f"membrane shape {membrane.shape} != current shape {current.shape}")
    if np.isnan(current).any():
        raise DataError("NaN input current")
    return current


def lif_step(state, current, params=LifParams()):
    """One LIF timestep. Returns ``(spikes, new_state)``; ``state`` is not modified."""
    membrane = np.array(state.membrane, dtype=np.float64)
    current = _check(membrane, current)
    spikes = _integrate(membrane, current, params)
    return spikes, LifState(membrane)


def lif_signed_step(state_pos, state_neg, signal, params=LifParams()):
    """Signed spiking of a real signal with two LIF populations.

    The positive population is driven by ``max(signal, 0)`` and the negative
    one by ``max(-signal, 0)``; the output is their spike difference in
    {-1, 0, +1}. Returns ``(output, (new_pos, new_neg))``.
    """
    signal = np.asarray(signal, dtype=np.float64)
    pos_spikes, pos = lif_step(state_pos, np.maximum(signal, 0.0), params)
    neg_spikes, neg = lif_step(state_neg, np.maximum(-signal, 0.0), params)
    return pos_spikes - neg_spikes, (pos, neg)
