"""End-to-end steps shared by the command line and the acceptance suite."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .calibration import fit_temperature
from .energy import energy_report
from .exceptions import ArgumentError, CalibrationWarning, CompatibilityError, UndefinedMetricError
from .graph import normalize_adjacency
from .io import load_dataset
from .metrics import SCORE_KINDS, evaluate, ood_detection, pc_confidence_correlation, uncertainty_scores
from .network import predict
from .synthetic import apply_shift, generate_synthetic, split_nodes

log = logging.getLogger(__name__)

ABLATIONS = (
    ("full", False, False),
    ("no_spiking", True, False),
    ("no_pc", False, True),
    ("no_spiking_no_pc", True, True),
)

# below this many nodes in either test split the OOD report carries a flag
SMALL_SAMPLE = 10


def build_dataset(cfg):
    """Load ``cfg.dataset`` or generate the shifted synthetic SBM it describes."""
    if cfg.dataset:
        return load_dataset(cfg.dataset)
    graph = generate_synthetic(cfg.num_nodes, cfg.num_classes, cfg.intra_p, cfg.inter_p,
                               cfg.num_features, cfg.derive_seed("graph"),
                               class_sep=cfg.class_sep, noise=cfg.noise)
    masks = split_nodes(graph, cfg.fractions, cfg.derive_seed("split"))
    graph = apply_shift(graph, masks, cfg.shift_spec())
    return graph, masks


def train(cfg, graph, masks):
    """Fit a classifier with the model/training settings of ``cfg``."""
    return cfg.estimator().fit_graph(graph, masks)


def check_compatible(params, graph):
    F, C = params.layer_dims[0], params.num_classes
    if (F, C) != (graph.num_features, graph.num_classes):
        raise CompatibilityError(
            f"checkpoint expects features x classes = ({F}, {C}), "
            f"dataset has ({graph.num_features}, {graph.num_classes})")


@dataclass
class Evaluation:
    metrics: object
    report: object
    correlation: object
    trace: object


def resolve_temperature(est, trace, graph, masks, policy):
    """Fit tau on validation rows (policy ``fit``) or use a fixed value."""
    if policy != "fit":
        return float(policy), []
    if not masks.val.any():
        return 1.0, ["no validation nodes; temperature left at 1.0"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CalibrationWarning)
        tau, _ = fit_temperature(trace.output_rates[masks.val], graph.labels[masks.val])
    return tau, [str(w.message) for w in caught]


def evaluate_split(est, graph, masks, split="id", bins=15, score="pc", temperature="fit", trace=None):
    """Metric battery for one split, with temperature fitted on validation."""
    check_compatible(est.params_, graph)
    mask = masks.get(split)
    if not mask.any():
        raise ArgumentError(f"split {split!r} is empty")
    if trace is None:
        trace = est.forward(graph.features, graph)
    tau, notes = resolve_temperature(est, trace, graph, masks, temperature)
    est.temperature_ = tau
    full = predict(trace.output_rates, tau, trace.pc_error_norm)
    report = full.subset(mask)
    truth = graph.labels[mask]
    metrics = evaluate(report, truth, n_bins=bins, score_kind=score)
    metrics.notes = notes + metrics.notes
    if masks.test_id.any() and masks.test_ood.any():
        metrics.auroc_ood = ood_auroc(full, masks, score)
    corr = pc_confidence_correlation(report) if mask.sum() >= 3 else None
    return Evaluation(metrics, report, corr, trace)


def ood_auroc(report, masks, kind="pc"):
    scores = uncertainty_scores(report, kind)
    try:
        return ood_detection(scores[masks.test_id], scores[masks.test_ood])
    except UndefinedMetricError:
        return None


def detect_ood(est, graph, masks, trace=None):
    """AUROC of every uncertainty score for ID-vs-OOD separation."""
    check_compatible(est.params_, graph)
    n_id, n_ood = int(masks.test_id.sum()), int(masks.test_ood.sum())
    if n_id == 0 or n_ood == 0:
        raise ArgumentError(f"OOD detection needs both test splits non-empty (id={n_id}, ood={n_ood})")
    if trace is None:
        trace = est.forward(graph.features, graph)
    report = predict(trace.output_rates, est.temperature_, trace.pc_error_norm)
    out = {f"auroc_ood_{kind}": ood_auroc(report, masks, kind) for kind in SCORE_KINDS}
    out.update(n_id=n_id, n_ood=n_ood, small_sample=bool(min(n_id, n_ood) < SMALL_SAMPLE))
    return out


def energy(est, graph):
    check_compatible(est.params_, graph)
    adj = normalize_adjacency(graph)
    trace = est.forward(graph.features, adj)
    return energy_report(trace, adj, est.params_)


def ablation_variants(cfg):
    """The four ablation variants of ``cfg``, all sharing its seed."""
    return [(name, cfg.replace(disable_spiking=s, disable_pc=p)) for name, s, p in ABLATIONS]


def ablation_row(name, cfg, est, graph, masks):
    ev = evaluate_split(est, graph, masks, "ood", bins=cfg.bins, score=cfg.score,
                        temperature=cfg.temperature)
    acc_id = float(np.mean(ev.trace.output_rates[masks.test_id].argmax(axis=1)
                           == graph.labels[masks.test_id])) if masks.test_id.any() else None
    m = ev.metrics
    return {
        "variant": name,
        "seed": cfg.seed,
        "pc_iters": est.params_.pc_iters,
        "spiking": est.params_.spiking,
        "best_epoch": est.history_.best_epoch if hasattr(est, "history_") else None,
        "accuracy_id": acc_id,
        "accuracy_ood": m.accuracy,
        "ece_ood": m.ece,
        "nll_ood": m.nll,
        "brier_ood": m.brier,
        "auroc_error_ood": m.auroc_error,
        "auroc_ood": m.auroc_ood,
        "temperature": m.temperature,
    }
