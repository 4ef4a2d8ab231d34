import numpy as np
import pytest

from sight.graph import SplitMasks, graph_from_edges
from sight.synthetic import generate_synthetic, split_nodes


def random_graph(n, p, rng, num_features=3, num_classes=2):
    """Erdos-Renyi graph with random features; labels cycle through the classes."""
    upper = np.triu(rng.random((n, n)) < p, k=1)
    edges = np.argwhere(upper)
    features = rng.standard_normal((n, num_features))
    labels = np.arange(n) % num_classes
    return graph_from_edges(edges, features, labels, num_classes)


def dense_normalized(adj_dense):
    """Textbook D^-1/2 (A + I) D^-1/2 with explicit loops."""
    n = adj_dense.shape[0]
    a = adj_dense.copy()
    np.fill_diagonal(a, 0.0)
    a = a + np.eye(n)
    d = a.sum(axis=1)
    out = np.zeros_like(a)
    for i in range(n):
        for j in range(n):
            if a[i, j]:
                out[i, j] = a[i, j] / np.sqrt(d[i] * d[j])
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_graph(rng):
    return random_graph(12, 0.3, rng, num_features=4, num_classes=3)


@pytest.fixture
def toy_dataset():
    """Tiny SBM with a full split, shared by I/O and pipeline tests."""
    g = generate_synthetic(30, 2, 0.4, 0.02, 5, seed=3)
    masks = split_nodes(g, (0.4, 0.2, 0.2, 0.2), seed=3)
    return g, masks


@pytest.fixture
def all_train_masks():
    def make(n):
        return SplitMasks(np.ones(n, bool), np.zeros(n, bool), np.zeros(n, bool), np.zeros(n, bool))
    return make


# one "criterion N: PASS|FAIL ..." line per acceptance check, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
