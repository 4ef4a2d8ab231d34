"""Spiking graph predictive coding for node classification with intrinsic uncertainty."""

__version__ = "0.1.0"

from .calibration import TemperatureScaler, fit_temperature
from .config import RunConfig, load_config
from .encoding import EncoderConfig, SpikeEncoder, SpikeTrain, encode, normalize_features
from .energy import EnergyReport, energy_report
from .estimator import SightClassifier
from .exceptions import (ArgumentError, CalibrationWarning, CompatibilityError, DataError, DomainError,
                         NumericalError, ParseError, ShapeError, SightError, SplitError,
                         StructuralError, UndefinedMetricError)
from .graph import Graph, NormalizedAdjacency, SplitMasks, graph_from_edges, normalize_adjacency, spmm
from .io import Checkpoint, load_checkpoint, load_dataset, save_checkpoint, save_dataset
from .learning import AdamState, History, TrainConfig, apply_update, fit, hebbian_delta
from .lif import LifParams, LifState, lif_signed_step, lif_step
from .metrics import (MetricsReport, ScoreSet, accuracy, auroc, brier, ece, error_detection_scores,
                      nll, ood_detection, pc_confidence_correlation)
from .network import ModelParams, PredictionReport, forward, init_params, layer_forward, predict, uncertainty
from .synthetic import ShiftSpec, apply_shift, generate_synthetic, split_nodes
