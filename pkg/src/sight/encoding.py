"""Feature scaling and Bernoulli (Poisson-process) spike encoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ArgumentError, DataError, DomainError, ShapeError


@dataclass(frozen=True)
class EncoderConfig:
    timesteps: int = 25
    seed: int = 0

    def __post_init__(self):
        if int(self.timesteps) < 1:
            raise ArgumentError("timesteps must be >= 1")


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    """Binary T x N x F tensor stored as uint8."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[0] < 1:
            raise ShapeError(f"spike train must be T x N x F with T >= 1, got {data.shape}")
        if data.dtype != np.uint8:
            if not np.all((data == 0) | (data == 1)):
                raise DomainError("spike entries must be 0 or 1")
            data = data.astype(np.uint8)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def timesteps(self):
        return self.data.shape[0]

    @property
    def num_nodes(self):
        return self.data.shape[1]

    @property
    def num_features(self):
        return self.data.shape[2]

    def rates(self):
        return self.data.mean(axis=0)


def _check_finite(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"non-finite feature value at row {bad[0]}, column {bad[1]}")
    return X


def minmax_scale(X, data_min, data_max):
    """Scale columns by the given range and clamp to [0, 1].

    Channels with zero range map to zero.
    """
    X = _check_finite(X)
    span = data_max - data_min
    constant = span <= 0
    safe = np.where(constant, 1.0, span)
    out = (X - data_min) / safe
    out[:, constant] = 0.0
    return np.clip(out, 0.0, 1.0)


def normalize_features(X):
    """Per-channel min-max normalization of ``X`` using its own range."""
    X = _check_finite(X)
    return minmax_scale(X, X.min(axis=0), X.max(axis=0))


def spike_stream(seed, stream=0):
    """Counter-based generator for one encoding pass.

    Element ``(t, i, f)`` of a T x N x F draw consumes counter position
    ``(t * N + i) * F + f``, so any slice can be regenerated independently by
    advancing a Philox generator with the same key.
    """
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(stream) & 0xFFFFFFFF])
    return np.random.Generator(np.random.Philox(key))


def encode(X_norm, cfg=None, *, timesteps=None, seed=None, stream=0):
    """Draw a spike train with ``P(spike[t, i, f] = 1) = X_norm[i, f]``."""
    cfg = cfg or EncoderConfig()
    T = int(cfg.timesteps if timesteps is None else timesteps)
    seed = cfg.seed if seed is None else seed
    if T < 1:
        raise ArgumentError("timesteps must be >= 1")
    X_norm = _check_finite(X_norm)
    if X_norm.size and (X_norm.min() < 0.0 or X_norm.max() > 1.0):
        raise DomainError("spike probabilities must lie in [0, 1]")
    draws = spike_stream(seed, stream).random((T,) + X_norm.shape)
    return SpikeTrain((draws < X_norm[None]).astype(np.uint8))


class SpikeEncoder(TransformerMixin, BaseEstimator):
    """Min-max scaler fitted on training rows, followed by Bernoulli encoding.

    ``transform`` returns the clamped [0, 1] rates; ``encode`` returns a
    :class:`SpikeTrain` sampled from them.

    Parameters
    ----------
    timesteps : int, default=25
        Length of each spike train.
    seed : int, default=0
        Root seed of the spike stream.
    """

    def __init__(self, timesteps=25, seed=0):
        self.timesteps = timesteps
        self.seed = seed

    def fit(self, X, y=None):
        X = _check_finite(X)
        if X.shape[0] == 0:
            raise ArgumentError("cannot fit the encoder on zero rows")
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = _check_finite(X)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return minmax_scale(X, self.data_min_, self.data_max_)

    def encode(self, X, stream=0):
        return encode(self.transform(X), timesteps=self.timesteps, seed=self.seed, stream=stream)
