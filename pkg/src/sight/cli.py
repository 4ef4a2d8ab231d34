"""Command-line front end.

    sight generate|train|eval|detect-ood|energy|ablate
          [--config FILE] [--key value ...] --out DIR [--force]

Every command writes ``manifest.json`` with the fully resolved configuration;
passing that manifest back as ``--config`` replays the run.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, from_mapping, load_config
from .estimator import SightClassifier
from .exceptions import ArgumentError, SightError
from .io import load_checkpoint, save_checkpoint, save_dataset
from . import pipeline

log = logging.getLogger("sight")

COMMANDS = ("generate", "train", "eval", "detect-ood", "energy", "ablate")

OUTPUTS = {
    "generate": ["dataset.txt"],
    "train": ["checkpoint.bin", "history.csv"],
    "eval": ["metrics.json", "bins.csv", "correlation.csv", "correlation_bins.csv"],
    "detect-ood": ["ood.json"],
    "energy": ["energy.json"],
    "ablate": ["ablation.csv"],
}

ABLATION_FIELDS = ["variant", "seed", "pc_iters", "spiking", "best_epoch", "accuracy_id",
                   "accuracy_ood", "ece_ood", "nll_ood", "brier_ood", "auroc_error_ood",
                   "auroc_ood", "temperature"]


def _parse(argv):
    parser = argparse.ArgumentParser(prog="sight", description="Spiking graph predictive coding")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value config file or run manifest")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--force", action="store_true", help="overwrite existing outputs")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"sight {__version__}")
    args, rest = parser.parse_known_args(argv)
    overrides = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            parser.error(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, value = tok[2:].split("=", 1)
            i += 1
        elif i + 1 < len(rest):
            key, value = tok[2:], rest[i + 1]
            i += 2
        else:
            parser.error(f"override {tok} needs a value")
        overrides[key] = value
    return args, overrides


def resolve_config(path, overrides):
    base = load_config(path) if path else RunConfig()
    return from_mapping(overrides, base=base)


def _prepare_out(out, command, force):
    out = Path(out)
    existing = [name for name in OUTPUTS[command] + ["manifest.json"] if (out / name).exists()]
    if existing and not force:
        raise ArgumentError(f"{out} already holds {', '.join(existing)}; use --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out, command, cfg, started, extra=None):
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "wall_time_s": round(time.perf_counter() - started, 3),
        "outputs": OUTPUTS[command],
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _load_model(cfg, out):
    path = cfg.checkpoint or str(out / "checkpoint.bin")
    return SightClassifier.from_checkpoint(load_checkpoint(path))


def _dump_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------- commands

def cmd_generate(cfg, out):
    graph, masks = pipeline.build_dataset(cfg)
    save_dataset(graph, masks, out / "dataset.txt")
    counts = {name: int(masks.get(name).sum()) for name in ("train", "val", "id", "ood")}
    summary = {"nodes": graph.num_nodes, "features": graph.num_features,
               "classes": graph.num_classes, "edges": graph.num_edges, **counts}
    if cfg.shift == "covariate" and cfg.num_spurious_features and masks.test_ood.any():
        spurious = graph.features[:, -cfg.num_spurious_features:]
        rest = masks.train | masks.val | masks.test_id
        summary["spurious_mean_gap"] = float(spurious[masks.test_ood].mean() - spurious[rest].mean())
    if "shift_warning" in graph.metadata:
        summary["warning"] = graph.metadata["shift_warning"]
    print(" ".join(f"{k}={v}" for k, v in summary.items()))
    return {"summary": summary}


def cmd_train(cfg, out):
    graph, masks = pipeline.build_dataset(cfg)
    est = pipeline.train(cfg, graph, masks)
    hist = est.history_
    hist.to_csv(out / "history.csv")
    save_checkpoint(out / "checkpoint.bin", est.params_, encoder=est.encoder_,
                    temperature=est.temperature_,
                    metadata={"seed": cfg.seed, "best_epoch": hist.best_epoch,
                              "epochs_run": len(hist)})
    best = max(hist.best_so_far) if len(hist) else float("nan")
    print(f"epochs={len(hist)} best_epoch={hist.best_epoch} best_val_accuracy={best:.4f} "
          f"stopped_early={hist.stopped_early}")
    return {"best_epoch": hist.best_epoch, "best_val_accuracy": best,
            "stopped_early": hist.stopped_early, "skipped_updates": hist.skipped_updates}


def cmd_eval(cfg, out):
    graph, masks = pipeline.build_dataset(cfg)
    est = _load_model(cfg, out)
    ev = pipeline.evaluate_split(est, graph, masks, cfg.split, bins=cfg.bins, score=cfg.score,
                                 temperature=cfg.temperature)
    ev.metrics.to_json(out / "metrics.json")
    ev.metrics.bin_table.to_csv(out / "bins.csv")
    if ev.correlation is not None:
        ev.correlation.pairs_to_csv(out / "correlation.csv")
        ev.correlation.bins_to_csv(out / "correlation_bins.csv")
    m = ev.metrics
    print(f"split={cfg.split} n={m.n} accuracy={m.accuracy:.4f} ece={m.ece:.4f} nll={m.nll:.4f} "
          f"brier={m.brier:.4f} auroc_error={m.auroc_error} tau={m.temperature:.4g}")
    return {"split": cfg.split}


def cmd_detect_ood(cfg, out):
    graph, masks = pipeline.build_dataset(cfg)
    est = _load_model(cfg, out)
    # calibrate on validation first so msp/entropy scores use the fitted temperature
    trace = est.forward(graph.features, graph)
    est.temperature_, _ = pipeline.resolve_temperature(est, trace, graph, masks, cfg.temperature)
    result = pipeline.detect_ood(est, graph, masks, trace=trace)
    result["temperature"] = est.temperature_
    _dump_json(out / "ood.json", result)
    print(" ".join(f"{k}={v}" for k, v in result.items()))
    return {}


def cmd_energy(cfg, out):
    graph, _ = pipeline.build_dataset(cfg)
    est = _load_model(cfg, out)
    report = pipeline.energy(est, graph)
    report.to_json(out / "energy.json")
    for l, rho in enumerate(report.mean_rho, 1):
        print(f"layer {l}: mean rho={rho:.4f} dense_ops={int(report.dense_ops[l - 1])}")
    print(report.formula())
    print(f"effective total = {report.effective_total:.6g} ({report.effective_total / report.dense_total:.4f} of dense)")
    return {}


def cmd_ablate(cfg, out):
    rows = []
    for name, variant in pipeline.ablation_variants(cfg):
        graph, masks = pipeline.build_dataset(variant)
        est = pipeline.train(variant, graph, masks)
        rows.append(pipeline.ablation_row(name, variant, est, graph, masks))
        sub = out / name
        sub.mkdir(exist_ok=True)
        resolved = variant.replace(pc_iters=variant.effective_pc_iters())
        (sub / "manifest.json").write_text(json.dumps(
            {"command": "ablate", "variant": name, "seed": variant.seed,
             "config": resolved.to_dict()}, indent=2) + "\n")
        print(f"{name}: accuracy_ood={rows[-1]['accuracy_ood']:.4f}")
    with open(out / "ablation.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=ABLATION_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return {"variants": [r["variant"] for r in rows]}


HANDLERS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "detect-ood": cmd_detect_ood,
    "energy": cmd_energy,
    "ablate": cmd_ablate,
}


def main(argv=None):
    args, overrides = _parse(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        cfg = resolve_config(args.config, overrides)
        out = _prepare_out(args.out, args.command, args.force)
        extra = HANDLERS[args.command](cfg, out)
        write_manifest(out, args.command, cfg, started, extra)
    except SightError as exc:
        print(f"sight {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
