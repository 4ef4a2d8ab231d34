"""Spiking graph convolution with predictive-coding inference.

Each layer computes the prediction ``P = (A_norm @ H) @ W`` and then runs
``pc_iters`` correction steps::

    E_k     = P - Z_k
    U_k     = P + gamma * LIF_err(E_k)
    Z_{k+1} = LIF_pred(U_k)

starting from ``Z_0 = P``. Membranes are zeroed at the start of every Poisson
timestep and carried across the inner iterations. Timesteps are independent,
so they are processed as a batch along a leading axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy.special import entr, softmax

from .encoding import SpikeTrain
from .exceptions import ArgumentError, ShapeError
from .graph import spmm
from ._kernels import spiking_pc_loop
from .lif import LifParams, _integrate

DEFAULT_HIDDEN = (128, 128, 64)

# rough cap on floats held per timestep chunk
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Weights and dynamics of a SIGHT network.

    ``layer_dims`` is ``[F, d_1, ..., d_L]`` with ``d_L = C``; ``weights[l]``
    has shape ``(layer_dims[l], layer_dims[l + 1])``. ``spiking=False`` swaps
    both LIF populations for identity maps (the no-spiking ablation).
    """

    layer_dims: tuple
    weights: tuple
    lif_pred: LifParams = LifParams()
    lif_err: LifParams = LifParams()
    gamma: float = 0.005
    pc_iters: int = 20
    timesteps: int = 25
    spiking: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ArgumentError(f"invalid layer_dims {dims}")
        weights = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        if len(weights) != len(dims) - 1:
            raise ShapeError(f"{len(dims) - 1} weight matrices expected, got {len(weights)}")
        for l, w in enumerate(weights):
            if w.shape != (dims[l], dims[l + 1]):
                raise ShapeError(f"layer {l + 1}: weight shape {w.shape}, expected {(dims[l], dims[l + 1])}")
        if int(self.pc_iters) < 1:
            raise ArgumentError("pc_iters must be >= 1")
        if int(self.timesteps) < 1:
            raise ArgumentError("timesteps must be >= 1")
        if self.gamma < 0:
            raise ArgumentError("gamma must be >= 0")
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "pc_iters", int(self.pc_iters))
        object.__setattr__(self, "timesteps", int(self.timesteps))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def num_layers(self):
        return len(self.weights)

    @property
    def num_classes(self):
        return self.layer_dims[-1]

    def with_weights(self, weights):
        return replace(self, weights=tuple(weights))

    def replace(self, **changes):
        return replace(self, **changes)


def init_weights(layer_dims, seed):
    """Uniform ``[-1/sqrt(d_in), 1/sqrt(d_in)]`` initialization, one stream per seed."""
    rng = np.random.default_rng(seed)
    weights = []
    for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = 1.0 / np.sqrt(d_in)
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
    return weights


def init_params(num_features, num_classes, hidden=DEFAULT_HIDDEN, seed=0, **kwargs):
    dims = (int(num_features),) + tuple(int(h) for h in hidden) + (int(num_classes),)
    return ModelParams(dims, init_weights(dims, seed), **kwargs)


def propagate(adj, H, W):
    """``(A_norm @ H) @ W`` for ``H`` of shape (N, d) or (T, N, d)."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[-1] != W.shape[0]:
        raise ShapeError(f"input width {H.shape[-1]} does not match weight rows {W.shape[0]}")
    if H.ndim == 2:
        return spmm(adj, H) @ W
    T, N, d = H.shape
    AH = spmm(adj, H.transpose(1, 0, 2).reshape(N, T * d))
    return AH.reshape(N, T, d).transpose(1, 0, 2) @ W


@dataclass
class LayerResult:
    z: np.ndarray          # Z_K, layer output
    error: np.ndarray      # E_K = P - Z_K
    prediction: np.ndarray  # P
    error_norms: Optional[np.ndarray] = None  # ||E_k||_F for k = 0..K, if recorded


def pc_loop(P, params, z0=None, record=False):
    """Run the predictive-coding correction loop on a fixed prediction ``P``.

    With ``record=True`` the Frobenius norm of every residual ``E_0..E_K`` is
    kept, which forces the (slower) vectorized numpy path.
    """
    P = np.asarray(P, dtype=np.float64)
    Z = np.array(P if z0 is None else z0, dtype=np.float64)
    if Z.shape != P.shape:
        raise ShapeError(f"z0 shape {Z.shape} != prediction shape {P.shape}")
    if params.spiking and not record:
        pred, err = params.lif_pred, params.lif_err
        Z = spiking_pc_loop(P, Z, params.pc_iters, params.gamma,
                            pred.beta, pred.threshold, pred.reset == "subtract",
                            err.beta, err.threshold, err.reset == "subtract")
        return LayerResult(Z, P - Z, P)
    return _pc_loop_numpy(P, Z, params, record)


def _pc_loop_numpy(P, Z, params, record):
    norms = [] if record else None
    if params.spiking:
        v_pred = np.zeros_like(P)
        v_pos = np.zeros_like(P)
        v_neg = np.zeros_like(P)
    for _ in range(params.pc_iters):
        E = P - Z
        if record:
            norms.append(np.linalg.norm(E))
        if params.spiking:
            err = _integrate(v_pos, np.maximum(E, 0.0), params.lif_err)
            err -= _integrate(v_neg, np.maximum(-E, 0.0), params.lif_err)
            U = P + params.gamma * err
            Z = _integrate(v_pred, U, params.lif_pred)
        else:
            Z = P + params.gamma * E
    E = P - Z
    if record:
        norms.append(np.linalg.norm(E))
        norms = np.asarray(norms)
    return LayerResult(Z, E, P, norms)


def layer_forward(adj, H_in, W, params, z0=None, record=False):
    """One spiking graph-convolution layer with PC inference.

    ``H_in`` is (N, d_in) or (T, N, d_in); returns a :class:`LayerResult`
    with arrays of matching leading shape.
    """
    return pc_loop(propagate(adj, H_in, W), params, z0=z0, record=record)


@dataclass
class ForwardResult:
    """Time-averaged outputs of :func:`forward`.

    ``rates[l]`` is the layer-l rate code (the final layer is not rectified);
    ``mean_errors[l]`` and ``mean_predictions[l]`` are time-averaged ``E_K``
    and ``P``; ``error_norms[l]`` is the per-node time average of
    ``||E_K[i]||^2``. Spike counters hold, per layer and timestep, the number
    of nonzero entries entering (``input_counts``) and leaving
    (``output_counts``) the layer.
    """

    rates: List[np.ndarray]
    mean_errors: List[np.ndarray]
    mean_predictions: List[np.ndarray]
    error_norms: List[np.ndarray]
    input_counts: np.ndarray
    output_counts: np.ndarray
    layer_dims: tuple = field(default=())

    @property
    def output_rates(self):
        return self.rates[-1]

    @property
    def pc_error_norm(self):
        return self.error_norms[-1]

    @property
    def pc_uncertainty(self):
        return np.exp(-self.error_norms[-1])


def _chunk_size(T, N, max_width):
    return max(1, min(T, _CHUNK_ELEMENTS // max(1, N * max_width)))


def forward(params, adj, spikes):
    """Run the network over every timestep of ``spikes`` and average."""
    data = spikes.data if isinstance(spikes, SpikeTrain) else np.asarray(spikes)
    if data.ndim != 3:
        raise ShapeError(f"spike input must be T x N x F, got {data.shape}")
    T, N, F = data.shape
    if F != params.layer_dims[0]:
        raise ShapeError(f"spike train has {F} channels, model expects {params.layer_dims[0]}")
    n_adj = adj.num_nodes if hasattr(adj, "num_nodes") else adj.shape[0]
    if N != n_adj:
        raise ShapeError("spike train and adjacency disagree on node count")
    L = params.num_layers
    dims = params.layer_dims
    rate_sum = [np.zeros((N, d)) for d in dims[1:]]
    err_sum = [np.zeros((N, d)) for d in dims[1:]]
    pred_sum = [np.zeros((N, d)) for d in dims[1:]]
    norm_sum = [np.zeros(N) for _ in dims[1:]]
    in_counts = np.zeros((L, T), dtype=np.int64)
    out_counts = np.zeros((L, T), dtype=np.int64)

    chunk = _chunk_size(T, N, max(dims))
    for start in range(0, T, chunk):
        stop = min(T, start + chunk)
        H = data[start:stop].astype(np.float64)
        for l, W in enumerate(params.weights):
            in_counts[l, start:stop] = np.count_nonzero(H, axis=(1, 2))
            res = layer_forward(adj, H, W, params)
            out_counts[l, start:stop] = np.count_nonzero(res.z, axis=(1, 2))
            last = l == L - 1
            H = res.z if last else np.maximum(res.z, 0.0)
            rate_sum[l] += H.sum(axis=0)
            err_sum[l] += res.error.sum(axis=0)
            pred_sum[l] += res.prediction.sum(axis=0)
            norm_sum[l] += np.einsum("tnd,tnd->n", res.error, res.error)

    return ForwardResult(
        rates=[r / T for r in rate_sum],
        mean_errors=[e / T for e in err_sum],
        mean_predictions=[p / T for p in pred_sum],
        error_norms=[s / T for s in norm_sum],
        input_counts=in_counts,
        output_counts=out_counts,
        layer_dims=dims,
    )


def uncertainty(E):
    """``exp(-||E||^2)`` of a residual vector, or row-wise for a matrix."""
    E = np.asarray(E, dtype=np.float64)
    return np.exp(-np.sum(E * E, axis=-1))


@dataclass
class PredictionReport:
    probabilities: np.ndarray
    predicted: np.ndarray
    msp: np.ndarray
    entropy: np.ndarray
    pc_uncertainty: np.ndarray
    pc_error_norm: np.ndarray
    temperature: float = 1.0

    def __len__(self):
        return len(self.predicted)

    def subset(self, mask):
        return PredictionReport(self.probabilities[mask], self.predicted[mask], self.msp[mask],
                                self.entropy[mask], self.pc_uncertainty[mask],
                                self.pc_error_norm[mask], self.temperature)


def predict(rates, temperature=1.0, pc_error_norm=None):
    """Softmax head over final-layer rates, with confidence and PC uncertainty."""
    if not temperature > 0:
        raise ArgumentError(f"temperature must be > 0, got {temperature}")
    rates = np.asarray(rates, dtype=np.float64)
    if rates.ndim != 2:
        raise ShapeError("rates must be N x C")
    probs = softmax(rates / temperature, axis=1)
    if pc_error_norm is None:
        pc_error_norm = np.zeros(rates.shape[0])
    pc_error_norm = np.asarray(pc_error_norm, dtype=np.float64)
    return PredictionReport(
        probabilities=probs,
        # argmax on rates: softmax is monotone, and this keeps ties exact under any temperature
        predicted=np.argmax(rates, axis=1),
        msp=probs.max(axis=1),
        entropy=entr(probs).sum(axis=1),
        pc_uncertainty=np.exp(-pc_error_norm),
        pc_error_norm=pc_error_norm,
        temperature=float(temperature),
    )
