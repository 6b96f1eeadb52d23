"""Model snapshot container and its single-file serialization.

The on-disk format is a magic line, one JSON header line (sorted keys, array
table with dtypes/shapes/offsets), then the raw little-endian array bytes in
table order. Writing the same snapshot twice produces identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import TrainingHyperparams
from ..core import EMBEDDING_DIM, ModelError

MAGIC = b"chromacode-model\n"
FORMAT_VERSION = 1
MODEL_VERSION = "1.0"

_GROUPS = ("encoder_params", "synthesizer_params", "rate_model_params", "stats")


@dataclass
class ModelSnapshot:
    """Immutable bundle of trained parameters plus training-set embedding stats."""

    version: str
    embedding_dim: int
    training_config: TrainingHyperparams
    encoder_params: dict[str, np.ndarray]
    synthesizer_params: dict[str, np.ndarray]
    rate_model_params: dict[str, np.ndarray]
    embedding_mean: np.ndarray = field(default_factory=lambda: np.zeros(EMBEDDING_DIM))
    embedding_variance: np.ndarray = field(default_factory=lambda: np.zeros(EMBEDDING_DIM))

    def __post_init__(self):
        if self.embedding_dim != EMBEDDING_DIM:
            raise ModelError(
                f"snapshot embedding_dim {self.embedding_dim} != {EMBEDDING_DIM}"
            )
        self.embedding_mean = np.asarray(self.embedding_mean, dtype=np.float64)
        self.embedding_variance = np.asarray(self.embedding_variance, dtype=np.float64)


def _array_groups(snap: ModelSnapshot) -> dict[str, dict[str, np.ndarray]]:
    return {
        "encoder_params": snap.encoder_params,
        "synthesizer_params": snap.synthesizer_params,
        "rate_model_params": snap.rate_model_params,
        "stats": {
            "embedding_mean": snap.embedding_mean,
            "embedding_variance": snap.embedding_variance,
        },
    }


def save_snapshot(snap: ModelSnapshot, path: str | Path) -> None:
    groups = _array_groups(snap)
    table = []
    buffers = []
    for group in _GROUPS:
        for name in sorted(groups[group]):
            arr = np.ascontiguousarray(groups[group][name])
            dtype = arr.dtype.newbyteorder("<")
            raw = arr.astype(dtype, copy=False).tobytes()
            table.append(
                {
                    "group": group,
                    "name": name,
                    "dtype": dtype.str,
                    "shape": list(arr.shape),
                    "nbytes": len(raw),
                }
            )
            buffers.append(raw)
    header = {
        "format": FORMAT_VERSION,
        "version": snap.version,
        "embedding_dim": snap.embedding_dim,
        "training_config": snap.training_config.to_dict(),
        "arrays": table,
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for raw in buffers:
            fh.write(raw)


def load_snapshot(path: str | Path) -> ModelSnapshot:
    path = Path(path)
    if not path.exists():
        raise ModelError(f"model file not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ModelError(f"{path}: not a chromacode model file")
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as err:
            raise ModelError(f"{path}: corrupt header: {err}") from err
        if header.get("format") != FORMAT_VERSION:
            raise ModelError(f"{path}: unsupported format {header.get('format')}")
        if header.get("embedding_dim") != EMBEDDING_DIM:
            raise ModelError(
                f"{path}: embedding_dim {header.get('embedding_dim')} does not match "
                f"the required {EMBEDDING_DIM}"
            )
        groups: dict[str, dict[str, np.ndarray]] = {g: {} for g in _GROUPS}
        for item in header["arrays"]:
            raw = fh.read(item["nbytes"])
            if len(raw) != item["nbytes"]:
                raise ModelError(f"{path}: truncated array data for {item['name']}")
            arr = np.frombuffer(raw, dtype=np.dtype(item["dtype"])).reshape(item["shape"])
            groups[item["group"]][item["name"]] = arr.copy()
    hp = TrainingHyperparams.from_dict(header["training_config"])
    stats = groups["stats"]
    return ModelSnapshot(
        version=header["version"],
        embedding_dim=header["embedding_dim"],
        training_config=hp,
        encoder_params=groups["encoder_params"],
        synthesizer_params=groups["synthesizer_params"],
        rate_model_params=groups["rate_model_params"],
        embedding_mean=stats.get("embedding_mean", np.zeros(EMBEDDING_DIM)),
        embedding_variance=stats.get("embedding_variance", np.zeros(EMBEDDING_DIM)),
    )
