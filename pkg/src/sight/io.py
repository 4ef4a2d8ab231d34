"""On-disk formats: the SIGHT-GRAPH text dataset and binary model checkpoints.

Dataset (UTF-8 text, ids 0-based)::

    SIGHT-GRAPH v1 N F C
    <node_id> f_0 ... f_{F-1}        (N lines, node_id = line index)
    EDGES
    <src> <dst>                      (each undirected edge once)
    LABELS
    <label>                          (N lines)
    SPLITS
    train|val|id|ood|none            (N lines)

Floats are written with ``repr`` so a save/load cycle is exact.

Checkpoint (little-endian binary)::

    8 bytes   magic b"SIGHTCK\\0"
    uint32    format version (1)
    uint64    header length H
    H bytes   UTF-8 JSON header (sorted keys): layer_dims, LIF parameters,
              gamma, pc_iters, timesteps, spiking, temperature, encoder
              settings, free-form metadata, and the array table
    ...       float64 arrays in header order: each weight matrix row-major,
              then encoder data_min and data_max when present
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .encoding import SpikeEncoder
from .exceptions import CompatibilityError, ParseError, SightError
from .graph import SPLIT_NAMES, Graph, SplitMasks, graph_from_edges
from .lif import LifParams
from .network import ModelParams

HEADER = "SIGHT-GRAPH"
VERSION = "v1"
SPLIT_TOKENS = SPLIT_NAMES + ("none",)

CKPT_MAGIC = b"SIGHTCK\0"
CKPT_VERSION = 1


# ---------------------------------------------------------------- datasets

def _fmt(x):
    return repr(float(x))


def save_dataset(graph, masks, path):
    """Write ``graph`` and ``masks`` in the SIGHT-GRAPH v1 text format."""
    N, F, C = graph.num_nodes, graph.num_features, graph.num_classes
    if masks.num_nodes != N:
        raise SightError(f"masks cover {masks.num_nodes} nodes, graph has {N}")
    lines = [f"{HEADER} {VERSION} {N} {F} {C}"]
    for i, row in enumerate(graph.features):
        lines.append(" ".join([str(i)] + [_fmt(v) for v in row]))
    lines.append("EDGES")
    lines.extend(f"{s} {d}" for s, d in graph.edge_list())
    lines.append("LABELS")
    lines.extend(str(int(y)) for y in graph.labels)
    lines.append("SPLITS")
    lines.extend(masks.names())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class _Lines:
    def __init__(self, text, path):
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.pos = 0
        self.path = path

    def error(self, msg, lineno=None):
        return ParseError(msg, line=self.pos if lineno is None else lineno, path=self.path)

    def next(self, what):
        if self.pos >= len(self.lines):
            raise ParseError(f"unexpected end of file, expected {what}", line=self.pos + 1, path=self.path)
        line = self.lines[self.pos]
        self.pos += 1
        return line.strip()

    def sentinel(self, token):
        line = self.next(token)
        if line != token:
            raise self.error(f"expected {token!r}, found {line!r}")


def _int(tok, lines, what):
    try:
        return int(tok)
    except ValueError:
        raise lines.error(f"invalid {what} {tok!r}") from None


def load_dataset(path):
    """Parse a SIGHT-GRAPH v1 file into ``(Graph, SplitMasks)``.

    Any malformed content raises :class:`ParseError` with the 1-based line number.
    """
    path = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read dataset: {exc.strerror}", path=path) from None
    lines = _Lines(text, path)

    head = lines.next("header").split()
    if len(head) != 5 or head[0] != HEADER or head[1] != VERSION:
        raise lines.error(f"bad header, expected '{HEADER} {VERSION} N F C'")
    N, F, C = (_int(t, lines, "header count") for t in head[2:])
    if N <= 0 or F <= 0 or C <= 0:
        raise lines.error("N, F and C must be positive")

    X = np.empty((N, F))
    for i in range(N):
        toks = lines.next(f"feature line for node {i}").split()
        if len(toks) != F + 1:
            raise lines.error(f"expected node id and {F} features, found {len(toks)} fields")
        if _int(toks[0], lines, "node id") != i:
            raise lines.error(f"node id {toks[0]} out of order, expected {i}")
        try:
            X[i] = [float(t) for t in toks[1:]]
        except ValueError:
            raise lines.error("non-numeric feature value") from None
        if not np.all(np.isfinite(X[i])):
            raise lines.error("non-finite feature value")

    lines.sentinel("EDGES")
    edges = []
    while True:
        line = lines.next("LABELS")
        if line == "LABELS":
            break
        toks = line.split()
        if len(toks) != 2:
            raise lines.error(f"edge line needs 2 fields, found {len(toks)}")
        s, d = (_int(t, lines, "node id") for t in toks)
        if not (0 <= s < N and 0 <= d < N):
            raise lines.error(f"edge ({s}, {d}) references a node outside [0, {N})")
        edges.append((s, d))

    labels = np.empty(N, dtype=np.int64)
    for i in range(N):
        y = _int(lines.next(f"label for node {i}"), lines, "label")
        if not 0 <= y < C:
            raise lines.error(f"label {y} outside [0, {C})")
        labels[i] = y

    lines.sentinel("SPLITS")
    names = []
    for i in range(N):
        tok = lines.next(f"split for node {i}")
        if tok not in SPLIT_TOKENS:
            raise lines.error(f"unknown split {tok!r}, expected one of {'|'.join(SPLIT_TOKENS)}")
        names.append(tok)
    if lines.pos < len(lines.lines) and any(l.strip() for l in lines.lines[lines.pos:]):
        raise lines.error("unexpected content after SPLITS section", lines.pos + 1)

    try:
        graph = graph_from_edges(np.array(edges, dtype=np.int64).reshape(-1, 2), X, labels, C,
                                 {"source": path})
        masks = SplitMasks.from_names(names)
    except SightError as exc:
        raise ParseError(str(exc), path=path) from None
    return graph, masks


# ------------------------------------------------------------- checkpoints

@dataclass
class Checkpoint:
    params: ModelParams
    encoder: Optional[SpikeEncoder] = None
    temperature: float = 1.0
    metadata: dict = field(default_factory=dict)


def _lif_dict(p):
    return {"beta": p.beta, "threshold": p.threshold, "reset": p.reset}


def save_checkpoint(path, params, encoder=None, temperature=1.0, metadata=None):
    arrays = [np.ascontiguousarray(w, dtype="<f8") for w in params.weights]
    enc = None
    if encoder is not None:
        enc = {"timesteps": int(encoder.timesteps), "seed": int(encoder.seed),
               "n_features": int(encoder.n_features_in_)}
        arrays += [np.ascontiguousarray(encoder.data_min_, dtype="<f8"),
                   np.ascontiguousarray(encoder.data_max_, dtype="<f8")]
    header = {
        "layer_dims": list(params.layer_dims),
        "lif_pred": _lif_dict(params.lif_pred),
        "lif_err": _lif_dict(params.lif_err),
        "gamma": params.gamma,
        "pc_iters": params.pc_iters,
        "timesteps": params.timesteps,
        "spiking": bool(params.spiking),
        "temperature": float(temperature),
        "encoder": enc,
        "metadata": metadata or {},
        "arrays": [list(a.shape) for a in arrays],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<IQ", CKPT_VERSION, len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(a.tobytes(order="C"))


def load_checkpoint(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CompatibilityError(f"cannot read checkpoint {path}: {exc.strerror}") from None
    if raw[:8] != CKPT_MAGIC:
        raise CompatibilityError(f"{path} is not a SIGHT checkpoint")
    if len(raw) < 20:
        raise CompatibilityError(f"checkpoint {path} is truncated")
    version, hlen = struct.unpack_from("<IQ", raw, 8)
    if version != CKPT_VERSION:
        raise CompatibilityError(f"unsupported checkpoint version {version}")
    off = 20
    try:
        header = json.loads(raw[off:off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CompatibilityError(f"checkpoint {path} has a corrupt header") from None
    off += hlen
    arrays = []
    for shape in header["arrays"]:
        count = int(np.prod(shape))
        if off + 8 * count > len(raw):
            raise CompatibilityError(f"checkpoint {path} is truncated")
        arrays.append(np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape).astype(np.float64))
        off += 8 * count
    if off != len(raw):
        raise CompatibilityError(f"checkpoint {path} has {len(raw) - off} trailing bytes")
    L = len(header["layer_dims"]) - 1
    params = ModelParams(
        tuple(header["layer_dims"]), tuple(arrays[:L]),
        lif_pred=LifParams(**header["lif_pred"]), lif_err=LifParams(**header["lif_err"]),
        gamma=header["gamma"], pc_iters=header["pc_iters"], timesteps=header["timesteps"],
        spiking=header["spiking"])
    encoder = None
    if header["encoder"] is not None:
        e = header["encoder"]
        encoder = SpikeEncoder(timesteps=e["timesteps"], seed=e["seed"])
        encoder.data_min_, encoder.data_max_ = arrays[L], arrays[L + 1]
        encoder.n_features_in_ = e["n_features"]
    return Checkpoint(params, encoder, header["temperature"], header["metadata"])
