"""Input checks shared by the estimator front end."""

import numpy as np
import scipy.sparse as sp

from .exceptions import DataError, ShapeError, StructuralError
from .graph import Graph, NormalizedAdjacency


def check_features(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-D (n_nodes, n_features), got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ShapeError("X must have at least one node and one feature")
    if not np.all(np.isfinite(X)):
        raise DataError("X contains NaN or infinite values")
    return X


def check_adjacency(adjacency, num_nodes):
    """Return a symmetric 0/1 CSR matrix without self-loops.

    Accepts a :class:`Graph`, a scipy sparse matrix or a dense square array;
    any nonzero entry counts as an edge.
    """
    if isinstance(adjacency, Graph):
        adj = adjacency.adjacency
    elif isinstance(adjacency, NormalizedAdjacency):
        raise StructuralError("pass the raw adjacency; normalization is applied internally")
    elif sp.issparse(adjacency):
        adj = sp.csr_matrix(adjacency, dtype=np.float64)
    else:
        adj = sp.csr_matrix(np.asarray(adjacency, dtype=np.float64))
    if adj.shape != (num_nodes, num_nodes):
        raise ShapeError(f"adjacency shape {adj.shape} does not match {num_nodes} nodes")
    adj = adj.tocsr(copy=True)
    adj.sum_duplicates()
    adj.eliminate_zeros()
    if (adj.data < 0).any():
        raise StructuralError("adjacency weights must be nonnegative")
    adj.data[:] = 1.0
    adj.setdiag(0.0)
    adj.eliminate_zeros()
    adj.sort_indices()
    if (adj != adj.T).nnz:
        raise StructuralError("adjacency is not symmetric")
    return adj


def check_mask(mask, num_nodes, name):
    if mask is None:
        return None
    m = np.asarray(mask)
    if m.dtype != bool:
        if np.issubdtype(m.dtype, np.integer) and m.ndim == 1 and (m.size != num_nodes or m.max(initial=0) > 1):
            idx = m
            m = np.zeros(num_nodes, dtype=bool)
            if idx.size and (idx.min() < 0 or idx.max() >= num_nodes):
                raise ShapeError(f"{name} index out of range")
            m[idx] = True
        else:
            m = m.astype(bool)
    if m.shape != (num_nodes,):
        raise ShapeError(f"{name} must have shape ({num_nodes},), got {m.shape}")
    return m


def check_labels(y, num_nodes):
    y = np.asarray(y)
    if y.shape != (num_nodes,):
        raise ShapeError(f"y must have shape ({num_nodes},), got {y.shape}")
    return y
