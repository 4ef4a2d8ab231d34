"""Scikit-learn style front end for transductive node classification."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_adjacency, check_features, check_labels, check_mask
from .calibration import fit_temperature
from .encoding import SpikeEncoder
from .exceptions import ArgumentError, CompatibilityError
from .graph import Graph, NormalizedAdjacency, SplitMasks, normalize_adjacency
from .learning import TrainConfig, evaluate_rates, fit as fit_local
from .lif import LifParams
from .network import init_params, predict
from .seeding import derive_seed


class SightClassifier(ClassifierMixin, BaseEstimator):
    """Spiking graph predictive-coding classifier.

    The graph is passed to ``fit`` (and optionally to the predict methods)
    through the ``adjacency`` keyword; ``X`` holds one feature row per node.
    Training is transductive: all nodes are propagated, only ``train_mask``
    rows drive the weight updates and ``val_mask`` rows drive early stopping.

    Parameters
    ----------
    hidden : tuple of int
        Hidden layer widths; the output layer has one unit per class.
    pc_iters, timesteps : int
        Inference iterations per layer and Poisson timesteps.
    gamma : float
        PC correction gain.
    lif_pred, lif_err : LifParams or None
        Neuron parameters of the prediction and error populations.
    spiking : bool
        ``False`` replaces both LIF populations by identity maps.
    epochs, patience, eta_p, eval_every, hidden_rule :
        Training-loop settings, see :class:`sight.learning.TrainConfig`.
    seed : int
        Root seed for weight init and spike sampling.
    """

    def __init__(self, hidden=(128, 128, 64), pc_iters=20, timesteps=25, gamma=0.005,
                 lif_pred=None, lif_err=None, spiking=True, epochs=500, patience=100,
                 eta_p=0.0005, eval_every=1, hidden_rule="frozen", seed=0):
        self.hidden = hidden
        self.pc_iters = pc_iters
        self.timesteps = timesteps
        self.gamma = gamma
        self.lif_pred = lif_pred
        self.lif_err = lif_err
        self.spiking = spiking
        self.epochs = epochs
        self.patience = patience
        self.eta_p = eta_p
        self.eval_every = eval_every
        self.hidden_rule = hidden_rule
        self.seed = seed

    # ------------------------------------------------------------ fitting

    def _init_params(self, num_features, num_classes):
        return init_params(
            num_features, num_classes, hidden=tuple(self.hidden),
            seed=derive_seed(self.seed, "init"),
            lif_pred=self.lif_pred or LifParams(), lif_err=self.lif_err or LifParams(),
            gamma=self.gamma, pc_iters=self.pc_iters, timesteps=self.timesteps,
            spiking=self.spiking)

    def _train_config(self):
        return TrainConfig(epochs=self.epochs, patience=min(self.patience, self.epochs),
                           eta_x=self.gamma, eta_p=self.eta_p,
                           seed=derive_seed(self.seed, "spikes"),
                           eval_every=self.eval_every, hidden_rule=self.hidden_rule)

    def fit(self, X, y, adjacency=None, train_mask=None, val_mask=None):
        """Fit on one graph.

        Labels outside ``train_mask``/``val_mask`` are ignored and may hold
        any placeholder. ``train_mask`` defaults to all nodes.
        """
        X = check_features(X)
        n = X.shape[0]
        if adjacency is None:
            raise ArgumentError("adjacency is required: pass the graph via fit(X, y, adjacency=...)")
        adj = check_adjacency(adjacency, n)
        y = check_labels(y, n)
        train = check_mask(train_mask, n, "train_mask")
        train = np.ones(n, dtype=bool) if train is None else train
        val = check_mask(val_mask, n, "val_mask")
        val = np.zeros(n, dtype=bool) if val is None else val & ~train
        labelled = train | val
        self.classes_ = np.unique(y[labelled])
        y_idx = np.zeros(n, dtype=np.int64)
        y_idx[labelled] = np.searchsorted(self.classes_, y[labelled])
        graph = Graph(adj, X, y_idx, len(self.classes_))
        masks = SplitMasks(train, val, np.zeros(n, bool), np.zeros(n, bool))
        return self.fit_graph(graph, masks, _classes=self.classes_)

    def fit_graph(self, graph, masks, _classes=None):
        """Fit on a :class:`Graph` with its :class:`SplitMasks`."""
        self.classes_ = np.arange(graph.num_classes) if _classes is None else _classes
        self.n_features_in_ = graph.num_features
        self.adjacency_ = normalize_adjacency(graph)
        self.encoder_ = SpikeEncoder(self.timesteps, derive_seed(self.seed, "spikes")).fit(
            graph.features[masks.train])
        params = self._init_params(graph.num_features, graph.num_classes)
        self.params_, self.history_ = fit_local(graph, masks, params, self._train_config(),
                                                encoder=self.encoder_, adj=self.adjacency_)
        self.temperature_ = 1.0
        return self

    @classmethod
    def from_checkpoint(cls, ckpt, adjacency=None):
        """Rebuild a fitted classifier from a :class:`sight.io.Checkpoint`."""
        p = ckpt.params
        est = cls(hidden=tuple(p.layer_dims[1:-1]), pc_iters=p.pc_iters, timesteps=p.timesteps,
                  gamma=p.gamma, lif_pred=p.lif_pred, lif_err=p.lif_err, spiking=p.spiking,
                  seed=int(ckpt.metadata.get("seed", 0)))
        if ckpt.encoder is None:
            raise CompatibilityError("checkpoint has no encoder statistics")
        est.params_ = p
        est.encoder_ = ckpt.encoder
        est.temperature_ = float(ckpt.temperature)
        est.classes_ = np.arange(p.num_classes)
        est.n_features_in_ = p.layer_dims[0]
        if adjacency is not None:
            est.adjacency_ = normalize_adjacency(adjacency) if isinstance(adjacency, Graph) else adjacency
        return est

    # --------------------------------------------------------- inference

    def _adjacency(self, X, adjacency):
        if adjacency is None:
            adj = getattr(self, "adjacency_", None)
            if adj is None:
                raise ArgumentError("no adjacency stored; pass adjacency=...")
        elif isinstance(adjacency, NormalizedAdjacency):
            adj = adjacency
        elif isinstance(adjacency, Graph):
            adj = normalize_adjacency(adjacency)
        else:
            raw = check_adjacency(adjacency, X.shape[0])
            adj = normalize_adjacency(Graph(raw, X, np.zeros(X.shape[0], np.int64), 1))
        if adj.num_nodes != X.shape[0]:
            raise CompatibilityError(f"X has {X.shape[0]} rows, adjacency has {adj.num_nodes} nodes")
        return adj

    def forward(self, X, adjacency=None):
        """Evaluation-stream forward pass; returns the :class:`ForwardResult`."""
        check_is_fitted(self, "params_")
        X = check_features(X)
        if X.shape[1] != self.n_features_in_:
            raise CompatibilityError(f"model expects {self.n_features_in_} features "
                                     f"(shape (N, {self.n_features_in_})), got X of shape {X.shape}")
        return evaluate_rates(self.params_, self._adjacency(X, adjacency), self.encoder_, X)

    def predict_report(self, X, adjacency=None, temperature=None):
        trace = self.forward(X, adjacency)
        tau = self.temperature_ if temperature is None else temperature
        return predict(trace.output_rates, tau, trace.pc_error_norm)

    def predict_proba(self, X, adjacency=None):
        return self.predict_report(X, adjacency).probabilities

    def predict(self, X, adjacency=None):
        check_is_fitted(self, "params_")
        return self.classes_[self.predict_report(X, adjacency).predicted]

    def calibrate(self, X, y, mask, adjacency=None):
        """Fit the softmax temperature on the ``mask`` rows; returns ``self``."""
        X = check_features(X)
        mask = check_mask(mask, X.shape[0], "mask")
        y = np.searchsorted(self.classes_, check_labels(y, X.shape[0])[mask])
        rates = self.forward(X, adjacency).output_rates[mask]
        self.temperature_, self.temperature_at_endpoint_ = fit_temperature(rates, y)
        return self
