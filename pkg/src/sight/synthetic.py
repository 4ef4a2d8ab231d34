"""Desk-scale benchmark construction: SBM graphs, stratified splits, shifts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import ArgumentError, SplitError
from .graph import Graph, SplitMasks


def block_labels(num_nodes, num_classes):
    """Contiguous, size-balanced class blocks: node i gets class ``i * C // N``."""
    return (np.arange(num_nodes) * num_classes) // num_nodes


def generate_synthetic(num_nodes, num_classes, intra_p, inter_p, num_features, seed,
                       class_sep=1.0, noise=1.0):
    """Stochastic block model with Gaussian class-mean features.

    Nodes are laid out in contiguous class blocks. Each unordered pair (i, j)
    is linked independently with probability ``intra_p`` inside a block and
    ``inter_p`` across blocks. Features are ``mu[y_i] + noise * N(0, I)``
    with class means ``mu[c] ~ class_sep * N(0, I)``.
    """
    num_nodes = int(num_nodes)
    num_classes = int(num_classes)
    if num_classes <= 0 or num_nodes <= 0 or int(num_features) <= 0:
        raise ArgumentError("num_nodes, num_classes and num_features must be positive")
    if num_classes > num_nodes:
        raise ArgumentError(f"num_classes ({num_classes}) exceeds num_nodes ({num_nodes})")
    if not 0.0 <= inter_p < intra_p <= 1.0:
        raise ArgumentError(f"need 0 <= inter_p < intra_p <= 1, got {inter_p}, {intra_p}")

    rng = np.random.default_rng(seed)
    labels = block_labels(num_nodes, num_classes)

    rows, cols = np.triu_indices(num_nodes, k=1)
    same = labels[rows] == labels[cols]
    prob = np.where(same, intra_p, inter_p)
    keep = rng.random(len(rows)) < prob
    rows, cols = rows[keep], cols[keep]
    adj = sp.coo_matrix(
        (np.ones(2 * len(rows)), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(num_nodes, num_nodes),
    ).tocsr()
    adj.sort_indices()

    means = class_sep * rng.standard_normal((num_classes, num_features))
    features = means[labels] + noise * rng.standard_normal((num_nodes, num_features))
    meta = dict(generator="sbm", intra_p=intra_p, inter_p=inter_p, seed=seed,
                class_sep=class_sep, noise=noise)
    return Graph(adj, features, labels, num_classes, meta)


def _split_counts(n, fractions):
    counts = [int(np.floor(f * n + 1e-9)) for f in fractions]
    # hand leftover nodes to the largest remainders, but never exceed sum(fractions) * n
    budget = min(n, int(np.floor(sum(fractions) * n + 1e-9)))
    remainders = [f * n - c for f, c in zip(fractions, counts)]
    for k in np.argsort(remainders, kind="stable")[::-1]:
        if sum(counts) >= budget:
            break
        if remainders[k] > 1e-9:
            counts[k] += 1
    return counts


def split_nodes(graph, fractions, seed):
    """Stratified random split into train / val / test-id / test-ood masks.

    ``fractions`` holds four nonnegative numbers summing to at most one; nodes
    not covered go to no split. Within each class the nodes are shuffled and
    spread evenly over a global ordering, so every prefix is close to the
    class proportions, and the ordering is then cut at the requested counts.
    """
    fractions = [float(f) for f in fractions]
    if len(fractions) != 4 or any(f < 0 for f in fractions):
        raise ArgumentError("fractions must be four nonnegative numbers")
    if sum(fractions) > 1.0 + 1e-9:
        raise ArgumentError(f"fractions sum to {sum(fractions)} > 1")
    n = graph.num_nodes
    labels = graph.labels
    rng = np.random.default_rng(seed)

    keys = np.empty(n)
    for c in range(graph.num_classes):
        members = np.flatnonzero(labels == c)
        if not len(members):
            continue
        order = rng.permutation(members)
        keys[order] = (np.arange(len(order)) + rng.random()) / len(order)
    ordering = np.lexsort((rng.random(n), keys))

    counts = _split_counts(n, fractions)
    masks = []
    start = 0
    for count in counts:
        m = np.zeros(n, dtype=bool)
        m[ordering[start:start + count]] = True
        masks.append(m)
        start += count

    present = np.unique(labels)
    missing = [int(c) for c in present if not masks[0][labels == c].any()]
    if missing:
        raise SplitError(f"classes {missing} have no training nodes")
    return SplitMasks(*masks)


@dataclass(frozen=True)
class ShiftSpec:
    """Distribution shift applied to the OOD test nodes.

    ``covariate`` appends spurious, class-correlated feature columns whose
    mean moves by ``environment_gap`` on OOD nodes. ``concept`` relabels a
    ``relabel_fraction`` subset of OOD nodes with ``c -> (c + 1) mod C``.
    """

    kind: str = "covariate"
    num_spurious_features: int = 8
    environment_gap: float = 0.0
    relabel_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("covariate", "concept", "none"):
            raise ArgumentError(f"unknown shift kind {self.kind!r}")
        if self.environment_gap < 0:
            raise ArgumentError("environment_gap must be >= 0")
        if not 0.0 <= self.relabel_fraction <= 1.0:
            raise ArgumentError("relabel_fraction must lie in [0, 1]")
        if self.num_spurious_features < 0:
            raise ArgumentError("num_spurious_features must be >= 0")


def apply_shift(graph, masks, spec):
    """Return a shifted copy of ``graph``; the input is left untouched.

    Warnings (e.g. a no-op concept shift) are recorded under
    ``metadata["shift_warning"]`` of the returned graph.
    """
    if masks.num_nodes != graph.num_nodes:
        raise ArgumentError("masks do not match graph size")
    meta = dict(graph.metadata)
    meta["shift"] = dict(kind=spec.kind, num_spurious_features=spec.num_spurious_features,
                         environment_gap=spec.environment_gap,
                         relabel_fraction=spec.relabel_fraction, seed=spec.seed)
    rng = np.random.default_rng(spec.seed)
    ood = masks.test_ood

    if spec.kind == "none":
        return graph.replace(metadata=meta)

    if spec.kind == "covariate":
        k = spec.num_spurious_features
        if k == 0:
            meta["shift_warning"] = "covariate shift with zero spurious features is a no-op"
            return graph.replace(metadata=meta)
        class_means = rng.standard_normal((graph.num_classes, k))
        spurious = class_means[graph.labels] + rng.standard_normal((graph.num_nodes, k))
        spurious[ood] += spec.environment_gap
        features = np.hstack([graph.features, spurious])
        return graph.replace(features=features, metadata=meta)

    # concept
    labels = graph.labels.copy()
    ood_idx = np.flatnonzero(ood)
    n_relabel = int(round(spec.relabel_fraction * len(ood_idx)))
    if n_relabel == 0:
        meta["shift_warning"] = "concept shift relabels no nodes"
        return graph.replace(metadata=meta)
    chosen = np.sort(rng.permutation(ood_idx)[:n_relabel])
    labels[chosen] = (labels[chosen] + 1) % graph.num_classes
    meta["relabelled_nodes"] = int(n_relabel)
    return graph.replace(labels=labels, metadata=meta)
