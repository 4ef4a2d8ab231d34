"""Temperature scaling fitted on validation rates."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import log_softmax
from sklearn.base import BaseEstimator

from .exceptions import ArgumentError, CalibrationWarning, ShapeError
from .metrics import NLL_CLAMP
from .network import predict

TAU_MIN = 0.05
TAU_MAX = 20.0
GRID_POINTS = 400


def temperature_nll(rates, truth, tau):
    """Mean negative log-likelihood of ``softmax(rates / tau)``."""
    logp = log_softmax(rates / tau, axis=1)[np.arange(len(truth)), truth]
    return float(-np.mean(np.maximum(logp, np.log(NLL_CLAMP))))


def fit_temperature(rates, truth, tau_min=TAU_MIN, tau_max=TAU_MAX, grid_points=GRID_POINTS):
    """Return ``(tau, at_endpoint)`` minimizing validation NLL.

    The search evaluates a log-spaced grid, then refines the best grid point
    by golden-section search in ``log tau`` inside its two neighbours. When the
    minimum sits on a grid endpoint a :class:`CalibrationWarning` is issued.
    """
    rates = np.asarray(rates, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.int64)
    if rates.ndim != 2:
        raise ShapeError("rates must be N x C")
    if rates.shape[0] == 0:
        raise ArgumentError("temperature fitting needs a non-empty validation set")
    if truth.shape != (rates.shape[0],):
        raise ShapeError("one label per row expected")

    log_grid = np.linspace(np.log(tau_min), np.log(tau_max), grid_points)
    losses = np.array([temperature_nll(rates, truth, np.exp(t)) for t in log_grid])
    i = int(np.argmin(losses))
    if i == 0 or i == grid_points - 1:
        warnings.warn(f"temperature fit hit the grid endpoint tau={np.exp(log_grid[i]):.4g}",
                      CalibrationWarning, stacklevel=2)
        return float(np.exp(log_grid[i])), True

    best_t, best_loss = log_grid[i], losses[i]
    bracket = (log_grid[i - 1], log_grid[i], log_grid[i + 1])
    if losses[i - 1] > best_loss and losses[i + 1] > best_loss:
        res = minimize_scalar(lambda t: temperature_nll(rates, truth, np.exp(t)),
                              bracket=bracket, method="golden")
        if res.fun <= best_loss and bracket[0] <= res.x <= bracket[2]:
            best_t = res.x
    return float(np.exp(best_t)), False


class TemperatureScaler(BaseEstimator):
    """Post-hoc temperature scaling of final-layer rates.

    After ``fit``, ``temperature_`` holds the fitted tau and
    ``at_endpoint_`` flags a degenerate fit.
    """

    def __init__(self, tau_min=TAU_MIN, tau_max=TAU_MAX, grid_points=GRID_POINTS):
        self.tau_min = tau_min
        self.tau_max = tau_max
        self.grid_points = grid_points

    def fit(self, rates, y):
        self.temperature_, self.at_endpoint_ = fit_temperature(
            rates, y, self.tau_min, self.tau_max, self.grid_points)
        return self

    def predict_proba(self, rates):
        return predict(rates, self.temperature_).probabilities

    def predict(self, rates):
        return np.argmax(np.asarray(rates), axis=1)
