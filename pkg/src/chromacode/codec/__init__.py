"""Colour codec: encoder, synthesizer, rate model, training, and inference."""

from ..config import TrainingHyperparams
from .nets import (
    ColourEncoder,
    ColourSynthesizer,
    FactorizedRateModel,
    build_modules,
    count_parameters,
)
from .runtime import encode, encode_manifest, entry_rates, estimate_rate, synthesize
from .snapshot import MODEL_VERSION, ModelSnapshot, load_snapshot, save_snapshot
from .training import (
    EpochStats,
    TrainingReport,
    compute_embedding_stats,
    compute_losses,
    train,
)

__all__ = [
    "ColourEncoder",
    "ColourSynthesizer",
    "FactorizedRateModel",
    "EpochStats",
    "MODEL_VERSION",
    "ModelSnapshot",
    "TrainingHyperparams",
    "TrainingReport",
    "build_modules",
    "compute_embedding_stats",
    "compute_losses",
    "count_parameters",
    "encode",
    "encode_manifest",
    "entry_rates",
    "estimate_rate",
    "load_snapshot",
    "save_snapshot",
    "synthesize",
    "train",
]
