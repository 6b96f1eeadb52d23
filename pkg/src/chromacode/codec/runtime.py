"""Inference over a trained snapshot: encoding, synthesis, rate estimation."""

from __future__ import annotations

import numpy as np
import torch

from ..core import (
    EMBEDDING_DIM,
    ShapeError,
    clamp01,
    ensure_colourless_image,
    ensure_embedding,
    ensure_rgb_image,
    resize_image,
)
from ..latent import EmbeddingSet
from .nets import build_modules
from .snapshot import ModelSnapshot


class _Runtime:
    """Torch modules rebuilt from a snapshot, eval-mode, gradient-free."""

    def __init__(self, snap: ModelSnapshot):
        hp = snap.training_config
        self.encoder, self.synthesizer, self.rate_model = build_modules(
            snap.embedding_dim, hp.width
        )
        self.encoder.load_state_dict(
            {k: torch.from_numpy(v.copy()) for k, v in snap.encoder_params.items()}
        )
        self.synthesizer.load_state_dict(
            {k: torch.from_numpy(v.copy()) for k, v in snap.synthesizer_params.items()}
        )
        self.rate_model.load_state_dict(
            {k: torch.from_numpy(v.copy()) for k, v in snap.rate_model_params.items()}
        )
        for module in (self.encoder, self.synthesizer, self.rate_model):
            module.eval()
            for p in module.parameters():
                p.requires_grad_(False)
        self.resolution = hp.resolution


def _runtime(snap: ModelSnapshot) -> _Runtime:
    rt = getattr(snap, "_runtime", None)
    if rt is None:
        rt = _Runtime(snap)
        snap._runtime = rt
    return rt


def encode(model: ModelSnapshot, image: np.ndarray) -> np.ndarray:
    """Map an RGB image to its length-256 colour embedding."""
    image = ensure_rgb_image(image)
    rt = _runtime(model)
    if image.shape[:2] != (rt.resolution, rt.resolution):
        image = resize_image(image, rt.resolution, rt.resolution)
    y = torch.from_numpy(image.transpose(2, 0, 1)[None].astype(np.float32))
    with torch.no_grad():
        e = rt.encoder(y)[0].numpy()
    return e.astype(np.float64)


def synthesize(model: ModelSnapshot, colourless: np.ndarray, embedding: np.ndarray) -> np.ndarray:
    """Render an RGB image from a colourless image and an embedding."""
    colourless = ensure_colourless_image(colourless)
    embedding = ensure_embedding(embedding)
    h, w = colourless.shape[:2]
    if h % 4 != 0 or w % 4 != 0:
        raise ShapeError(f"colourless image sides must be multiples of 4, got {h}x{w}")
    rt = _runtime(model)
    x = torch.from_numpy(colourless.transpose(2, 0, 1)[None].astype(np.float32))
    e = torch.from_numpy(embedding[None].astype(np.float32))
    with torch.no_grad():
        out = rt.synthesizer(x, e)[0].numpy().transpose(1, 2, 0)
    return clamp01(out.astype(np.float64))


def estimate_rate(model: ModelSnapshot, embedding: np.ndarray) -> float:
    """Total bits of an embedding under the learned factorized density."""
    bits = entry_rates(model, embedding)
    return float(bits.sum())


def entry_rates(model: ModelSnapshot, embedding: np.ndarray) -> np.ndarray:
    """Per-entry bit costs, shape (256,)."""
    embedding = ensure_embedding(embedding)
    rt = _runtime(model)
    e = torch.from_numpy(embedding[None].astype(np.float32))
    with torch.no_grad():
        bits = rt.rate_model.bits(e)[0].numpy()
    return bits.astype(np.float64)


def encode_manifest(model: ModelSnapshot, manifest) -> EmbeddingSet:
    """Encode every manifest image, preserving manifest order."""
    from ..core import load_image

    pairs = []
    for entry in manifest.entries:
        image = load_image(entry.image_path)
        pairs.append((entry.id, encode(model, image)))
    return EmbeddingSet.from_pairs(pairs)
