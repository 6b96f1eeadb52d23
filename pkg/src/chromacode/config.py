"""Dataclass configs for training, manipulation, augmentation, and the service."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

DECOLOUR_MODES = ("randomized", "naive")
SAMPLERS = ("reuse", "independent_marginal")

CONFIG_ENV_VAR = "CHROMACODE_CONFIG"


@dataclass(frozen=True)
class TrainingHyperparams:
    """Codec training settings. Weights follow the defaults used throughout:
    rate 0.003, diversity 0.05, colour 0.1."""

    lambda_bpp_g: float = 0.003
    lambda_diver: float = 0.05
    lambda_color: float = 0.1
    epochs: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 16
    resolution: int = 64
    seed: int = 0
    epsilon: float = 0.05
    decolour_mode: str = "randomized"
    width: int = 16

    def __post_init__(self):
        if min(self.lambda_bpp_g, self.lambda_diver, self.lambda_color) < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.resolution < 8 or self.resolution % 4 != 0:
            raise ValueError("resolution must be a multiple of 4, at least 8")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.decolour_mode not in DECOLOUR_MODES:
            raise ValueError(f"decolour_mode must be one of {DECOLOUR_MODES}")
        if self.width < 2:
            raise ValueError("width must be >= 2")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingHyperparams":
        return cls(**d)


@dataclass(frozen=True)
class ManipulationConfig:
    """Settings shared by transfer and entry editing."""

    tau: float = 0.1
    h: str = "square"
    epsilon: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class AugmentationConfig:
    """Settings for dataset augmentation: k outputs per source image, embeddings
    drawn from the target set by the chosen sampler."""

    k: int = 1
    sampler: str = "reuse"
    seed: int = 0
    tau: float = 0.1
    h: str = "square"
    epsilon: float = 0.05
    include_originals: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")


@dataclass(frozen=True)
class ClassifierConfig:
    """Small convolutional classifier used by the downstream benchmark.

    Flips and the mild per-channel colour jitter are standard train-time
    augmentation; jitter is far smaller than the domain shifts under study.
    """

    epochs: int = 60
    batch_size: int = 64
    learning_rate: float = 1e-3
    width: int = 16
    resolution: int = 64
    colour_jitter: float = 0.1
    random_flips: bool = True


@dataclass
class RuntimeConfig:
    """Service-level settings; a JSON config file may set any of these keys,
    and CLI flags override the file."""

    resolution: int = 64
    tau: float = 0.1
    h: str = "square"
    epsilon: float = 0.05
    active_threshold: float = 0.01
    upload_limit_mb: float = 16.0
    host: str = "127.0.0.1"
    port: int = 8000


def load_runtime_config(path: str | Path | None = None) -> RuntimeConfig:
    """Load the runtime config from `path`, the CHROMACODE_CONFIG env var, or defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    cfg = RuntimeConfig()
    if path is None:
        return cfg
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    known = {f.name: f.type for f in fields(RuntimeConfig)}
    for key, value in obj.items():
        if key not in known:
            raise ValueError(f"{path}: unknown config key {key!r}")
        setattr(cfg, key, value)
    return cfg
