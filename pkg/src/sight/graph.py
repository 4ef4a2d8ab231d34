"""Graph containers, symmetric normalization and sparse-dense products."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import scipy.sparse as sp

from .exceptions import ShapeError, StructuralError

SPLIT_NAMES = ("train", "val", "id", "ood")


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def check_csr(adj, num_nodes=None):
    """Validate the canonical CSR layout used everywhere in the package.

    Raises :class:`StructuralError` for non-square matrices, unsorted or
    duplicate column indices, negative weights and structural asymmetry.
    """
    if not sp.issparse(adj) or adj.format != "csr":
        raise StructuralError("adjacency must be a scipy CSR matrix")
    n_rows, n_cols = adj.shape
    if n_rows != n_cols:
        raise StructuralError(f"adjacency must be square, got {adj.shape}")
    if num_nodes is not None and n_rows != num_nodes:
        raise StructuralError(f"adjacency has {n_rows} rows, expected {num_nodes}")
    indptr, indices = adj.indptr, adj.indices
    if indptr[0] != 0 or np.any(np.diff(indptr) < 0) or indptr[-1] != len(indices):
        raise StructuralError("row offsets are not monotone")
    if len(indices) and (indices.min() < 0 or indices.max() >= n_cols):
        raise StructuralError("column index out of range")
    if len(indices) > 1:
        step = np.diff(indices)
        same_row = np.ones(len(step), dtype=bool)
        starts = indptr[1:-1]
        starts = starts[(starts > 0) & (starts < len(indices))]
        same_row[starts - 1] = False
        bad = np.flatnonzero(same_row & (step <= 0))
        if len(bad):
            row = int(np.searchsorted(indptr, bad[0], side="right") - 1)
            raise StructuralError(f"row {row}: column indices not strictly increasing")
    if np.any(adj.data < 0) or not np.all(np.isfinite(adj.data)):
        raise StructuralError("edge weights must be finite and nonnegative")
    pattern = adj.copy()
    pattern.data = np.ones_like(pattern.data)
    if (pattern != pattern.T).nnz:
        raise StructuralError("adjacency is not structurally symmetric")


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected attributed graph with integer class labels.

    ``adjacency`` is an N x N CSR matrix with strictly increasing column
    indices per row. Self-loops are not expected in raw data; they are added by
    :func:`normalize_adjacency`.
    """

    adjacency: sp.csr_matrix
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {features.shape}")
        n, f = features.shape
        if n == 0 or f == 0:
            raise ShapeError("graph needs at least one node and one feature")
        if labels.shape != (n,):
            raise ShapeError(f"labels must have shape ({n},), got {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise StructuralError("labels must be integer class ids")
        labels = labels.astype(np.int64)
        if int(self.num_classes) <= 0:
            raise StructuralError("num_classes must be positive")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise StructuralError(f"labels must lie in [0, {self.num_classes})")
        adj = sp.csr_matrix(self.adjacency, dtype=np.float64)
        check_csr(adj, n)
        adj.data.setflags(write=False)
        adj.indices.setflags(write=False)
        adj.indptr.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "num_classes", int(self.num_classes))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def num_nodes(self):
        return self.features.shape[0]

    @property
    def num_features(self):
        return self.features.shape[1]

    @property
    def num_edges(self):
        """Undirected edge count (self-loops counted once)."""
        adj = self.adjacency
        loops = int(np.count_nonzero(adj.diagonal()))
        return (adj.nnz - loops) // 2 + loops

    def edge_list(self):
        """Undirected edges as an (E, 2) array with ``src <= dst``, row-major order."""
        coo = self.adjacency.tocoo()
        keep = coo.row <= coo.col
        return np.stack([coo.row[keep], coo.col[keep]], axis=1).astype(np.int64)

    def replace(self, **changes):
        kwargs = dict(adjacency=self.adjacency, features=self.features, labels=self.labels,
                      num_classes=self.num_classes, metadata=self.metadata)
        kwargs.update(changes)
        return Graph(**kwargs)

    def equals(self, other):
        return (
            isinstance(other, Graph)
            and self.num_classes == other.num_classes
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.adjacency.shape == other.adjacency.shape
            and np.array_equal(self.adjacency.indptr, other.adjacency.indptr)
            and np.array_equal(self.adjacency.indices, other.adjacency.indices)
            and np.array_equal(self.adjacency.data, other.adjacency.data)
        )


def graph_from_edges(edges, features, labels, num_classes, metadata=None):
    """Build a :class:`Graph` from an undirected edge list.

    Each edge may be listed once in either orientation; duplicates are merged.
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) and (edges.min() < 0 or edges.max() >= n):
        raise StructuralError("edge endpoint out of range")
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    adj.sum_duplicates()
    adj.data[:] = 1.0
    adj.sort_indices()
    return Graph(adj, features, labels, num_classes, metadata or {})


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """``D^-1/2 (A + I) D^-1/2`` in CSR form, plus the (A + I) degrees."""

    matrix: sp.csr_matrix
    degrees: np.ndarray

    @property
    def num_nodes(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    def toarray(self):
        return self.matrix.toarray()


@dataclass(frozen=True)
class SplitMasks:
    train: np.ndarray
    val: np.ndarray
    test_id: np.ndarray
    test_ood: np.ndarray

    def __post_init__(self):
        masks = [np.asarray(m, dtype=bool) for m in (self.train, self.val, self.test_id, self.test_ood)]
        n = masks[0].shape
        if any(m.ndim != 1 or m.shape != n for m in masks):
            raise ShapeError("split masks must be 1-D with equal length")
        total = np.sum(masks, axis=0)
        if np.any(total > 1):
            raise StructuralError("split masks overlap")
        if not masks[0].any():
            raise StructuralError("train mask is empty")
        for name, m in zip(("train", "val", "test_id", "test_ood"), masks):
            object.__setattr__(self, name, _frozen(m))

    @property
    def num_nodes(self):
        return self.train.shape[0]

    def as_tuple(self):
        return self.train, self.val, self.test_id, self.test_ood

    def names(self):
        """Per-node split token: one of train/val/id/ood/none."""
        out = np.full(self.num_nodes, "none", dtype=object)
        for token, m in zip(SPLIT_NAMES, self.as_tuple()):
            out[m] = token
        return out

    @classmethod
    def from_names(cls, names):
        names = np.asarray(names, dtype=object)
        return cls(*(names == token for token in SPLIT_NAMES))

    def get(self, split):
        key = {"train": "train", "val": "val", "validation": "val", "id": "test_id",
               "test_id": "test_id", "ood": "test_ood", "test_ood": "test_ood"}.get(split)
        if key is None:
            raise KeyError(f"unknown split {split!r}")
        return getattr(self, key)

    def equals(self, other):
        return all(np.array_equal(a, b) for a, b in zip(self.as_tuple(), other.as_tuple()))


def normalize_adjacency(graph):
    """Return ``D^-1/2 (A + I) D^-1/2`` for a graph (or a raw CSR adjacency).

    Any self-loop already present is replaced by a unit loop, so repeated
    application never duplicates diagonal entries.
    """
    adj = graph.adjacency if isinstance(graph, Graph) else graph
    if isinstance(adj, NormalizedAdjacency):
        adj = adj.matrix
    adj = sp.csr_matrix(adj, dtype=np.float64)
    check_csr(adj)
    n = adj.shape[0]
    off_diag = adj - sp.diags(adj.diagonal(), format="csr")
    off_diag.eliminate_zeros()
    a_hat = (off_diag + sp.identity(n, format="csr")).tocsr()
    a_hat.sort_indices()
    deg = np.asarray(a_hat.sum(axis=1)).ravel()
    rows = np.repeat(np.arange(n), np.diff(a_hat.indptr))
    data = a_hat.data / np.sqrt(deg[rows] * deg[a_hat.indices])
    norm = sp.csr_matrix((data, a_hat.indices.copy(), a_hat.indptr.copy()), shape=(n, n))
    return NormalizedAdjacency(norm, _frozen(deg))


def spmm(adj, dense):
    """Sparse-dense product ``adj @ dense``.

    Rows are reduced in ascending column order (scipy's CSR kernel walks the
    stored indices in order), so the result is bit-reproducible.
    """
    mat = adj.matrix if isinstance(adj, NormalizedAdjacency) else adj
    dense = np.asarray(dense, dtype=np.float64)
    squeeze = dense.ndim == 1
    if squeeze:
        dense = dense[:, None]
    if dense.ndim != 2 or dense.shape[0] != mat.shape[1]:
        raise ShapeError(f"spmm: adjacency is {mat.shape}, dense operand is {dense.shape}")
    out = np.asarray(mat @ dense)
    return out[:, 0] if squeeze else out
