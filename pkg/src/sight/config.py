"""Run configuration: a flat ``key = value`` text file plus CLI overrides.

Blank lines and ``#`` comments are ignored. Keys are the field names of
:class:`RunConfig`; dashes are accepted in place of underscores. A run
manifest (JSON with a ``config`` object) is accepted wherever a config file
is, so any run can be replayed from its manifest.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .exceptions import ArgumentError, ParseError
from .learning import HIDDEN_RULES
from .lif import LifParams
from .metrics import SCORE_KINDS
from .seeding import derive_seed
from .synthetic import ShiftSpec

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    # root seed; every random draw is derived from it
    seed: int = 0
    # data source: a SIGHT-GRAPH file, or (when empty) the synthetic SBM below
    dataset: str = ""
    num_nodes: int = 200
    num_classes: int = 2
    num_features: int = 16
    intra_p: float = 0.2
    inter_p: float = 0.01
    class_sep: float = 1.0
    noise: float = 1.0
    train_frac: float = 0.4
    val_frac: float = 0.2
    id_frac: float = 0.2
    ood_frac: float = 0.2
    # distribution shift applied to synthetic data: none | covariate | concept
    shift: str = "none"
    num_spurious_features: int = 8
    gap: float = 0.0
    relabel_fraction: float = 0.0
    # model
    hidden: str = "128,128,64"
    pc_iters: int = 20
    timesteps: int = 25
    eta_x: float = 0.005
    beta_pred: float = 0.9
    threshold_pred: float = 0.5
    reset_pred: str = "subtract"
    beta_err: float = 0.9
    threshold_err: float = 0.5
    reset_err: str = "subtract"
    # training
    epochs: int = 500
    patience: int = 100
    eta_p: float = 0.0005
    eval_every: int = 1
    hidden_rule: str = "frozen"
    # evaluation
    checkpoint: str = ""
    split: str = "id"
    bins: int = 15
    score: str = "pc"
    temperature: str = "fit"
    # ablations
    disable_spiking: bool = False
    disable_pc: bool = False

    def __post_init__(self):
        if self.shift not in ("none", "covariate", "concept"):
            raise ArgumentError(f"shift must be none, covariate or concept, got {self.shift!r}")
        if self.score not in SCORE_KINDS:
            raise ArgumentError(f"score must be one of {SCORE_KINDS}, got {self.score!r}")
        if self.temperature != "fit":
            try:
                tau = float(self.temperature)
            except ValueError:
                raise ArgumentError("temperature must be 'fit' or a positive number") from None
            if not tau > 0:
                raise ArgumentError("temperature must be positive")
        if self.split not in ("train", "val", "id", "ood"):
            raise ArgumentError(f"split must be train, val, id or ood, got {self.split!r}")
        if self.hidden_rule not in HIDDEN_RULES:
            raise ArgumentError(f"hidden_rule must be one of {HIDDEN_RULES}, got {self.hidden_rule!r}")
        if self.bins < 1:
            raise ArgumentError("bins must be >= 1")
        self.hidden_dims  # validates

    @property
    def hidden_dims(self):
        try:
            dims = tuple(int(h) for h in self.hidden.replace(" ", "").split(",") if h)
        except ValueError:
            raise ArgumentError(f"hidden must be comma-separated integers, got {self.hidden!r}") from None
        if any(d <= 0 for d in dims):
            raise ArgumentError("hidden sizes must be positive")
        return dims

    @property
    def fractions(self):
        return (self.train_frac, self.val_frac, self.id_frac, self.ood_frac)

    def derive_seed(self, purpose):
        """Independent 32-bit seed for one consumer of randomness."""
        return derive_seed(self.seed, purpose)

    def shift_spec(self):
        return ShiftSpec(kind=self.shift, num_spurious_features=self.num_spurious_features,
                         environment_gap=self.gap, relabel_fraction=self.relabel_fraction,
                         seed=self.derive_seed("shift"))

    def effective_pc_iters(self):
        return 1 if self.disable_pc else self.pc_iters

    def estimator(self):
        """Unfitted :class:`SightClassifier` with the model, training and ablation settings."""
        from .estimator import SightClassifier

        return SightClassifier(
            hidden=self.hidden_dims, pc_iters=self.effective_pc_iters(), timesteps=self.timesteps,
            gamma=self.eta_x,
            lif_pred=LifParams(self.beta_pred, self.threshold_pred, self.reset_pred),
            lif_err=LifParams(self.beta_err, self.threshold_err, self.reset_err),
            spiking=not self.disable_spiking, epochs=self.epochs, patience=self.patience,
            eta_p=self.eta_p, eval_every=self.eval_every, hidden_rule=self.hidden_rule,
            seed=self.seed)

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    def to_text(self):
        return "".join(f"{k} = {_format(v)}\n" for k, v in self.to_dict().items())


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_TYPES = {name: type(f.default) for name, f in _FIELDS.items()}


def _coerce(key, value):
    kind = _TYPES[key]
    if isinstance(value, kind) and not (kind is int and isinstance(value, bool)):
        return value
    text = str(value).strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ArgumentError(f"invalid value {value!r} for {key} (expected {kind.__name__})") from None
    return text


def normalize_key(key):
    key = key.strip().lstrip("-").replace("-", "_")
    if key not in _FIELDS:
        raise ArgumentError(f"unknown config key {key!r}")
    return key


def from_mapping(mapping, base=None):
    """Build a config from ``{key: value}`` pairs (strings are coerced)."""
    values = {} if base is None else base.to_dict()
    for key, value in mapping.items():
        k = normalize_key(key)
        values[k] = _coerce(k, value)
    return RunConfig(**values)


def parse_config_text(text, path=None):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ParseError(f"expected 'key = value', found {raw.strip()!r}", line=lineno, path=path)
            key, value = parts
        try:
            pairs[normalize_key(key)] = value.strip()
        except ArgumentError as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
    try:
        return from_mapping(pairs)
    except ArgumentError as exc:
        raise ParseError(str(exc), path=path) from None


def load_config(path):
    """Read a key-value config file or a run manifest."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror}", path=str(path)) from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=str(path)) from None
        return from_mapping(data.get("config", data))
    return parse_config_text(text, str(path))
