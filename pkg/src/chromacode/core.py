"""Shared image conventions, file IO, and dataset manifests.

Images are numpy float arrays with values in the unit interval: RGB images
are (H, W, 3), colourless images (H, W, 1). On disk everything is 8-bit RGB
PNG. Dataset manifests are JSON-lines files with one entry per line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

EMBEDDING_DIM = 256

VALID_SPLITS = ("train", "test")


class ChromacodeError(Exception):
    """Base class for errors raised by this package."""


class ImageFormatError(ChromacodeError, ValueError):
    """Image file is not an 8-bit-per-channel RGB PNG."""


class ManifestError(ChromacodeError, ValueError):
    """Dataset manifest failed validation."""


class ShapeError(ChromacodeError, ValueError):
    """Array shape violates an operation's contract."""


class ModelError(ChromacodeError, ValueError):
    """Model snapshot is missing, malformed, or incompatible."""


class TrainingDivergedError(ChromacodeError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


def clamp01(a: np.ndarray) -> np.ndarray:
    return np.clip(a, 0.0, 1.0)


def ensure_rgb_image(a: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate an (H, W, 3) unit-interval array and return it as float64."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ShapeError(f"{name} must have shape (H, W, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return a


def ensure_colourless_image(a: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate an (H, W, 1) unit-interval array and return it as float64."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] != 1:
        raise ShapeError(f"{name} must have shape (H, W, 1), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return a


def ensure_embedding(v: np.ndarray, name: str = "embedding") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape != (EMBEDDING_DIM,):
        raise ShapeError(f"{name} must have length {EMBEDDING_DIM}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


# ---------------------------------------------------------------------------
# image IO


def load_image(path: str | Path) -> np.ndarray:
    """Load an 8-bit RGB PNG as an (H, W, 3) float array in [0, 1]."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image file not found: {path}")
    with Image.open(path) as img:
        if img.format != "PNG":
            raise ImageFormatError(f"{path}: expected PNG, got {img.format}")
        if img.mode != "RGB":
            raise ImageFormatError(f"{path}: expected 8-bit RGB, got mode {img.mode}")
        data = np.asarray(img, dtype=np.float64)
    return data / 255.0


def save_image(image: np.ndarray, path: str | Path) -> None:
    """Write an RGB image as an 8-bit PNG. Round-trip error is at most 1/510."""
    image = ensure_rgb_image(image)
    data = np.round(image * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(Path(path), format="PNG")


def save_greyscale(values: np.ndarray, path: str | Path) -> None:
    """Write an (H, W) unit-interval map as an 8-bit greyscale PNG."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f"greyscale map must be 2-D, got {values.shape}")
    data = np.round(clamp01(values) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(Path(path), format="PNG")


def resize_image(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of an (H, W, C) array. Identity when sizes match."""
    image = np.asarray(image, dtype=np.float64)
    squeeze = image.ndim == 2
    if squeeze:
        image = image[:, :, None]
    h, w = image.shape[:2]
    if (h, w) == (height, width):
        return image[:, :, 0] if squeeze else image.copy()
    # align-corners-free sampling: map output pixel centres into input space
    ys = (np.arange(height) + 0.5) * h / height - 0.5
    xs = (np.arange(width) + 0.5) * w / width - 0.5
    y0 = np.clip(np.floor(ys), 0, h - 1).astype(int)
    x0 = np.clip(np.floor(xs), 0, w - 1).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None, None]
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :, None]
    top = image[y0][:, x0] * (1 - fx) + image[y0][:, x1] * fx
    bot = image[y1][:, x0] * (1 - fx) + image[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    return out[:, :, 0] if squeeze else out


# ---------------------------------------------------------------------------
# manifests


@dataclass
class ManifestEntry:
    id: str
    image_path: Path
    label: str | None = None
    split: str = "train"
    extra: dict = field(default_factory=dict)


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def by_id(self, entry_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def subset(self, split: str) -> "DatasetManifest":
        return DatasetManifest([e for e in self.entries if e.split == split])


def load_manifest(path: str | Path, check_paths: bool = True) -> DatasetManifest:
    """Read a JSON-lines manifest; image paths are resolved relative to it."""
    path = Path(path)
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise ManifestError(f"{path}:{lineno}: malformed JSON line: {err}") from err
            if not isinstance(obj, dict) or "id" not in obj or "image_path" not in obj:
                raise ManifestError(f"{path}:{lineno}: entry needs 'id' and 'image_path'")
            entry_id = str(obj["id"])
            if entry_id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate id {entry_id!r}")
            seen.add(entry_id)
            split = obj.get("split", "train")
            if split not in VALID_SPLITS:
                raise ManifestError(f"{path}:{lineno}: split must be one of {VALID_SPLITS}")
            image_path = Path(obj["image_path"])
            if not image_path.is_absolute():
                image_path = base / image_path
            if check_paths and not image_path.exists():
                raise ManifestError(f"{path}:{lineno}: image path does not exist: {image_path}")
            label = obj.get("label")
            extra = {
                k: v
                for k, v in obj.items()
                if k not in ("id", "image_path", "label", "split")
            }
            entries.append(
                ManifestEntry(
                    id=entry_id,
                    image_path=image_path,
                    label=None if label is None else str(label),
                    split=split,
                    extra=extra,
                )
            )
    return DatasetManifest(entries)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write a manifest; image paths are stored relative to the file when possible."""
    path = Path(path)
    base = path.parent.resolve()
    with open(path, "w", encoding="utf-8") as fh:
        for e in manifest.entries:
            image_path = Path(e.image_path)
            try:
                rel = image_path.resolve().relative_to(base)
                stored = rel.as_posix()
            except ValueError:
                stored = image_path.as_posix()
            obj = {"id": e.id, "image_path": stored, "label": e.label, "split": e.split}
            obj.update(e.extra)
            fh.write(json.dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# seeding

_MAX_SEED = 2**63


def derive_rng(seed: int, *tags) -> np.random.Generator:
    """Independent RNG stream for (seed, tags); stable across runs and platforms."""
    digest = hashlib.sha256("\x1f".join(str(t) for t in tags).encode("utf-8")).digest()
    entropy = [int(seed) % _MAX_SEED] + [
        int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)
    ]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))
