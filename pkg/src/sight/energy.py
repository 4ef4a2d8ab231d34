"""Operation-count energy accounting from measured spike activity.

For layer ``l`` the dense cost of one inference iteration is
``|E| * d_{l-1} + N * d_l`` (sparse aggregation plus the feature transform),
where ``|E|`` is the number of stored entries of the normalized adjacency
(self-loops included). Event-driven execution only touches the inputs that
spiked, so the effective cost scales by the measured input firing fraction
``rho = spikes / (N * d_{l-1})``. Totals multiply by the ``K`` iterations and
sum over layers and timesteps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError


def dense_layer_ops(num_edges, num_nodes, d_in, d_out):
    return int(num_edges) * int(d_in) + int(num_nodes) * int(d_out)


@dataclass
class EnergyReport:
    layer_dims: tuple
    num_nodes: int
    num_edges: int
    timesteps: int
    pc_iters: int
    spike_count: np.ndarray    # (L, T) input spikes per layer and timestep
    neuron_count: np.ndarray   # (L,) input neurons per layer, N * d_{l-1}
    rho: np.ndarray            # (L, T)
    effective_ops: np.ndarray  # (L, T) per inference iteration
    dense_ops: np.ndarray      # (L,) per inference iteration

    @property
    def num_layers(self):
        return len(self.layer_dims) - 1

    @property
    def dense_total(self):
        """``T * K * sum_l (|E| d_{l-1} + N d_l)``, exact integer."""
        return int(self.timesteps * self.pc_iters * int(self.dense_ops.sum()))

    @property
    def effective_total(self):
        """``K * sum_{l,t} rho_{l,t} * dense_l``, correctly rounded."""
        return float(self.pc_iters * math.fsum(self.effective_ops.ravel().tolist()))

    @property
    def mean_rho(self):
        return self.rho.mean(axis=1)

    def formula(self):
        terms = " + ".join(f"({self.num_edges}*{self.layer_dims[l]} + {self.num_nodes}*{self.layer_dims[l + 1]})"
                           for l in range(self.num_layers))
        return f"T*K*sum_l(|E| d_(l-1) + N d_l) = {self.timesteps}*{self.pc_iters}*[{terms}] = {self.dense_total}"

    def to_dict(self):
        layers = []
        for l in range(self.num_layers):
            layers.append({
                "layer": l + 1,
                "d_in": int(self.layer_dims[l]),
                "d_out": int(self.layer_dims[l + 1]),
                "neuron_count": int(self.neuron_count[l]),
                "dense_ops": int(self.dense_ops[l]),
                "spike_count": [int(c) for c in self.spike_count[l]],
                "rho": [float(r) for r in self.rho[l]],
                "effective_ops": [float(e) for e in self.effective_ops[l]],
                "mean_rho": float(self.mean_rho[l]),
            })
        return {
            "num_nodes": int(self.num_nodes),
            "num_edges": int(self.num_edges),
            "timesteps": int(self.timesteps),
            "pc_iters": int(self.pc_iters),
            "layer_dims": [int(d) for d in self.layer_dims],
            "layers": layers,
            "dense_total": self.dense_total,
            "effective_total": self.effective_total,
            "sparsity_ratio": self.effective_total / self.dense_total if self.dense_total else 0.0,
            "formula": self.formula(),
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def energy_report(trace, adj, params):
    """Build an :class:`EnergyReport` from the spike counters of one forward pass."""
    dims = tuple(params.layer_dims)
    counts = np.asarray(trace.input_counts, dtype=np.int64)
    L = len(dims) - 1
    if counts.ndim != 2 or counts.shape[0] != L:
        raise ShapeError(f"spike counters of shape {counts.shape} do not match {L} layers")
    N = adj.num_nodes if hasattr(adj, "num_nodes") else adj.shape[0]
    nnz = adj.nnz
    neurons = np.array([N * dims[l] for l in range(L)], dtype=np.int64)
    dense = np.array([dense_layer_ops(nnz, N, dims[l], dims[l + 1]) for l in range(L)], dtype=np.int64)
    rho = counts / neurons[:, None]
    effective = rho * dense[:, None]
    return EnergyReport(dims, int(N), int(nnz), int(counts.shape[1]), int(params.pc_iters),
                        counts, neurons, rho, effective, dense)
