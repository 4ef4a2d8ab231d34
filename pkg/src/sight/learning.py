"""Local Hebbian learning with Adam moment accumulation.

Every layer is updated from its own presynaptic rates and its own residual:
``dW = H_pre.T @ R / n_train``. The top residual is ``Y - H_L``. Hidden
layers either keep their initial random projection (``hidden_rule="frozen"``)
or learn from their time-averaged predictive-coding error
(``hidden_rule="pc_error"``). No error signal is passed between layers.
"""

from __future__ import annotations

import csv
import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .encoding import SpikeEncoder
from .exceptions import ArgumentError, DataError, ShapeError
from .graph import normalize_adjacency
from .network import forward, predict

log = logging.getLogger(__name__)

EVAL_STREAM = 0
HIDDEN_RULES = ("frozen", "pc_error")


def one_hot(labels, num_classes):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DataError(f"label id outside [0, {num_classes})")
    out = np.zeros((labels.shape[0], num_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def top_residual(labels_onehot, rates, train_mask=None):
    """``Y - H`` on training rows, zero elsewhere."""
    Y = np.asarray(labels_onehot, dtype=np.float64)
    H = np.asarray(rates, dtype=np.float64)
    if Y.shape != H.shape:
        raise ShapeError(f"one-hot labels {Y.shape} and rates {H.shape} differ")
    R = Y - H
    if train_mask is not None:
        R[~np.asarray(train_mask, dtype=bool)] = 0.0
    return R


def hidden_residual(trace, layer, train_mask=None):
    """Time-averaged final PC error of hidden ``layer`` (0-based), masked to training rows."""
    R = np.array(trace.mean_errors[layer], dtype=np.float64)
    if train_mask is not None:
        R[~np.asarray(train_mask, dtype=bool)] = 0.0
    return R


def hebbian_delta(H_pre, R, n_rows=None):
    """Outer-product update ``H_pre.T @ R`` divided by the number of training rows.

    ``n_rows`` defaults to the number of rows of ``R`` that are not all zero.
    """
    H_pre = np.asarray(H_pre, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if H_pre.ndim != 2 or R.ndim != 2 or H_pre.shape[0] != R.shape[0]:
        raise ShapeError(f"hebbian_delta: incompatible shapes {H_pre.shape} and {R.shape}")
    if n_rows is None:
        n_rows = max(1, int(np.count_nonzero(np.any(R != 0, axis=1))))
    return (H_pre.T @ R) / n_rows


@dataclass
class AdamState:
    """First/second moments for one weight matrix."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    skipped: int = 0

    @classmethod
    def like(cls, W, **hyper):
        return cls(np.zeros_like(W, dtype=np.float64), np.zeros_like(W, dtype=np.float64), **hyper)


def apply_update(opt, W, dW):
    """Adam ascent step ``W + lr * m_hat / (sqrt(v_hat) + eps)``.

    A non-finite ``dW`` leaves ``W`` and the moments untouched; the skip is
    counted in ``opt.skipped`` and a ``RuntimeWarning`` is issued.
    """
    W = np.asarray(W, dtype=np.float64)
    dW = np.asarray(dW, dtype=np.float64)
    if W.shape != dW.shape or W.shape != opt.m.shape:
        raise ShapeError(f"apply_update: W {W.shape}, dW {dW.shape}, moments {opt.m.shape}")
    if not np.all(np.isfinite(dW)):
        warnings.warn("non-finite weight update skipped", RuntimeWarning, stacklevel=2)
        return W, replace(opt, skipped=opt.skipped + 1)
    step = opt.step + 1
    m = opt.beta1 * opt.m + (1.0 - opt.beta1) * dW
    v = opt.beta2 * opt.v + (1.0 - opt.beta2) * dW * dW
    m_hat = m / (1.0 - opt.beta1 ** step)
    v_hat = v / (1.0 - opt.beta2 ** step)
    W_new = W + opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
    return W_new, replace(opt, m=m, v=v, step=step)


@dataclass(frozen=True)
class TrainConfig:
    """Training-loop settings.

    ``eta_x`` is the PC correction gain; when set it overrides the model's
    ``gamma`` for the run. ``None`` keeps the model value.
    """

    epochs: int = 500
    patience: int = 100
    eta_x: Optional[float] = 0.005
    eta_p: float = 0.0005
    seed: int = 0
    eval_every: int = 1
    hidden_rule: str = "frozen"

    def __post_init__(self):
        if self.hidden_rule not in HIDDEN_RULES:
            raise ArgumentError(f"hidden_rule must be one of {HIDDEN_RULES}, got {self.hidden_rule!r}")
        if self.eta_p <= 0:
            raise ArgumentError("eta_p must be > 0")
        if self.eta_x is not None and self.eta_x < 0:
            raise ArgumentError("eta_x must be >= 0")
        if self.epochs < 1:
            raise ArgumentError("epochs must be >= 1")
        if self.patience < 0 or self.patience > self.epochs:
            raise ArgumentError("patience must lie in [0, epochs]")
        if self.eval_every < 1:
            raise ArgumentError("eval_every must be >= 1")


@dataclass
class History:
    epoch: List[int] = field(default_factory=list)
    train_nll: List[float] = field(default_factory=list)
    val_accuracy: List[float] = field(default_factory=list)
    best_so_far: List[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    skipped_updates: int = 0
    wall_time: float = 0.0

    def __len__(self):
        return len(self.epoch)

    def rows(self):
        return list(zip(self.epoch, self.train_nll, self.val_accuracy, self.best_so_far))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_nll", "val_accuracy", "best_so_far"])
            for e, nll, acc, best in self.rows():
                writer.writerow([e, repr(float(nll)), repr(float(acc)), repr(float(best))])


def _nll(rates, labels):
    probs = predict(rates).probabilities
    p = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(p, 1e-12))))


def evaluate_rates(params, adj, encoder, X):
    """Deterministic evaluation pass on the fixed evaluation spike stream."""
    spikes = encoder.encode(X, stream=EVAL_STREAM)
    return forward(params, adj, spikes)


def fit(graph, masks, params, cfg=TrainConfig(), encoder=None, adj=None):
    """Train ``params`` on ``graph`` with local updates and early stopping.

    Returns ``(best_params, history)``. The spike train is re-sampled every
    epoch from stream ``epoch`` of the encoder seed; validation accuracy is
    measured on the fixed evaluation stream.
    """
    start = time.perf_counter()
    train = np.asarray(masks.train, dtype=bool)
    val = np.asarray(masks.val, dtype=bool)
    n_train = int(train.sum())
    if n_train == 0:
        raise ArgumentError("empty training mask")
    if not val.any():
        log.warning("empty validation mask; early stopping monitors training accuracy")
        val = train
    if params.layer_dims[0] != graph.num_features or params.num_classes != graph.num_classes:
        raise ShapeError(f"model dims {params.layer_dims} incompatible with graph "
                         f"(F={graph.num_features}, C={graph.num_classes})")

    if cfg.eta_x is not None:
        params = params.replace(gamma=cfg.eta_x)
    adj = adj if adj is not None else normalize_adjacency(graph)
    X = graph.features
    if encoder is None:
        encoder = SpikeEncoder(timesteps=params.timesteps, seed=cfg.seed).fit(X[train])
    Y = one_hot(graph.labels, graph.num_classes)
    labels = graph.labels

    weights = [w.copy() for w in params.weights]
    opts = [AdamState.like(w, lr=cfg.eta_p) for w in weights]
    hist = History()
    best_acc = -np.inf
    best_nll = np.inf
    best_weights = [w.copy() for w in weights]
    bad_evals = 0

    for epoch in range(1, cfg.epochs + 1):
        current = params.with_weights(weights)
        spikes = encoder.encode(X, stream=epoch)
        trace = forward(current, adj, spikes)
        H_top = trace.rates[-1]
        train_nll = _nll(H_top[train], labels[train])

        pre_rates = [spikes.data.mean(axis=0)] + trace.rates[:-1]
        L = current.num_layers
        for l in range(L):
            if l == L - 1:
                R = top_residual(Y, H_top, train)
            elif cfg.hidden_rule == "pc_error":
                R = hidden_residual(trace, l, train)
            else:
                continue
            dW = hebbian_delta(pre_rates[l], R, n_rows=n_train)
            weights[l], opts[l] = apply_update(opts[l], weights[l], dW)

        val_acc = float("nan")
        if epoch % cfg.eval_every == 0:
            rates = evaluate_rates(params.with_weights(weights), adj, encoder, X).rates[-1]
            val_acc = float(np.mean(np.argmax(rates[val], axis=1) == labels[val]))
            val_nll = _nll(rates[val], labels[val])
            if val_acc > best_acc:
                bad_evals = 0
            else:
                bad_evals += 1
            # equal accuracy: keep the weights with the lower validation NLL,
            # without resetting patience
            if val_acc > best_acc or (val_acc == best_acc and val_nll < best_nll):
                best_acc, best_nll = val_acc, val_nll
                best_weights = [w.copy() for w in weights]
                hist.best_epoch = epoch

        hist.epoch.append(epoch)
        hist.train_nll.append(train_nll)
        hist.val_accuracy.append(val_acc)
        hist.best_so_far.append(float(best_acc) if np.isfinite(best_acc) else float("nan"))
        log.debug("epoch %d nll %.4f val %.4f", epoch, train_nll, val_acc)

        if bad_evals > cfg.patience:
            hist.stopped_early = True
            break

    if not np.isfinite(best_acc):
        best_weights = weights
    hist.skipped_updates = sum(o.skipped for o in opts)
    hist.wall_time = time.perf_counter() - start
    return params.with_weights(best_weights), hist
