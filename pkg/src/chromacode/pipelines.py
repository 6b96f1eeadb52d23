"""End-user operations: colour transfer, entry editing, dataset augmentation,
and colour normalization.

Every manipulation runs the codec at the model's training resolution and
applies the rejection-weight correction against the caller's image at its
native resolution, so outputs keep the input dimensions and localized detail
survives untouched.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from .codec import ModelSnapshot, encode, synthesize
from .config import AugmentationConfig, ManipulationConfig
from .core import (
    DatasetManifest,
    ManifestEntry,
    derive_rng,
    ensure_rgb_image,
    load_image,
    resize_image,
    save_image,
    save_manifest,
)
from .decolour import apply_decolourization, sample_coefficients
from .latent import EmbeddingSet, independent_marginal_sample, reuse_sample_index
from .postprocess import apply_correction, rejection_weights


def _manipulate(
    model: ModelSnapshot,
    image: np.ndarray,
    e_prime: np.ndarray,
    rng: np.random.Generator,
    tau: float,
    h,
    epsilon: float,
) -> np.ndarray:
    """Shared manipulation path: decolourize with fresh coefficients, synthesize
    the self-reconstruction and the proposal, then gate by self-error."""
    image = ensure_rgb_image(image)
    res = model.training_config.resolution
    h_img, w_img = image.shape[:2]
    at_model_res = (h_img, w_img) == (res, res)
    y_model = image if at_model_res else resize_image(image, res, res)

    coeffs = sample_coefficients(rng, epsilon)
    x = apply_decolourization(y_model, coeffs)
    e_self = encode(model, y_model)
    y_hat = synthesize(model, x, e_self)
    y_prop = synthesize(model, x, e_prime)
    if not at_model_res:
        y_hat = np.clip(resize_image(y_hat, h_img, w_img), 0.0, 1.0)
        y_prop = np.clip(resize_image(y_prop, h_img, w_img), 0.0, 1.0)
    w = rejection_weights(image, y_hat, tau=tau, h=h)
    return apply_correction(image, y_prop, w)


def transfer_colour(
    model: ModelSnapshot,
    structure_image: np.ndarray,
    colour_image: np.ndarray,
    cfg: ManipulationConfig = ManipulationConfig(),
) -> np.ndarray:
    """Re-render the structure image with the colour image's embedding."""
    e_prime = encode(model, ensure_rgb_image(colour_image, "colour_image"))
    rng = derive_rng(cfg.seed, "manipulate")
    return _manipulate(model, structure_image, e_prime, rng, cfg.tau, cfg.h, cfg.epsilon)


def edit_entries(
    model: ModelSnapshot,
    image: np.ndarray,
    edits: dict[int, float],
    cfg: ManipulationConfig = ManipulationConfig(),
) -> np.ndarray:
    """Overwrite chosen embedding entries and re-render."""
    image = ensure_rgb_image(image)
    res = model.training_config.resolution
    y_model = image if image.shape[:2] == (res, res) else resize_image(image, res, res)
    e_prime = encode(model, y_model)
    for index, value in edits.items():
        index = int(index)
        if not (0 <= index < e_prime.shape[0]):
            raise ValueError(f"entry index {index} out of range [0, {e_prime.shape[0]})")
        e_prime[index] = float(value)
    rng = derive_rng(cfg.seed, "manipulate")
    return _manipulate(model, image, e_prime, rng, cfg.tau, cfg.h, cfg.epsilon)


def apply_embedding(
    model: ModelSnapshot,
    image: np.ndarray,
    e_prime: np.ndarray,
    cfg: ManipulationConfig = ManipulationConfig(),
) -> np.ndarray:
    """Re-render an image under an explicit embedding (transfer with a raw code).

    Uses the same coefficient stream as transfer/edit for a given seed, so an
    edit that reproduces an embedding and a direct application of it render
    identically.
    """
    rng = derive_rng(cfg.seed, "manipulate")
    return _manipulate(model, image, e_prime, rng, cfg.tau, cfg.h, cfg.epsilon)


def augment_dataset(
    model: ModelSnapshot,
    source: DatasetManifest,
    target_embeddings: EmbeddingSet,
    cfg: AugmentationConfig,
    out_dir: str | Path,
) -> DatasetManifest:
    """Write k re-coloured copies of every source image, embeddings drawn from
    the target set; labels are inherited and provenance recorded per output."""
    if len(source) == 0:
        raise ValueError("source manifest is empty")
    if len(target_embeddings) == 0:
        raise ValueError("target embedding set is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries: list[ManifestEntry] = []
    for entry in sorted(source.entries, key=lambda e: e.id):
        image = load_image(entry.image_path)
        for k in range(cfg.k):
            rng = derive_rng(cfg.seed, "augment", entry.id, k)
            if cfg.sampler == "reuse":
                pick = reuse_sample_index(target_embeddings, rng)
                e_prime = target_embeddings.values[pick].copy()
                embedding_source = target_embeddings.source_ids[pick]
            else:
                e_prime = independent_marginal_sample(target_embeddings, rng)
                embedding_source = "sampled"
            out = _manipulate(model, image, e_prime, rng, cfg.tau, cfg.h, cfg.epsilon)
            out_id = f"{entry.id}-aug{k}"
            out_path = out_dir / f"{out_id}.png"
            save_image(out, out_path)
            entries.append(
                ManifestEntry(
                    id=out_id,
                    image_path=out_path,
                    label=entry.label,
                    split=entry.split,
                    extra={
                        "source_id": entry.id,
                        "sample_index": k,
                        "embedding_source_id": embedding_source,
                    },
                )
            )
    if cfg.include_originals:
        for entry in sorted(source.entries, key=lambda e: e.id):
            entries.append(
                ManifestEntry(
                    id=entry.id,
                    image_path=entry.image_path,
                    label=entry.label,
                    split=entry.split,
                    extra=dict(entry.extra),
                )
            )
    manifest = DatasetManifest(entries)
    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest


def normalize_dataset(
    model: ModelSnapshot,
    data: DatasetManifest,
    e_bar: np.ndarray,
    cfg: ManipulationConfig = ManipulationConfig(),
    out_dir: str | Path = "normalized",
) -> DatasetManifest:
    """Re-render every image under the fixed mean embedding; labels and splits
    are preserved."""
    if len(data) == 0:
        raise ValueError("manifest is empty")
    e_bar = np.asarray(e_bar, dtype=np.float64)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[ManifestEntry] = []
    for entry in sorted(data.entries, key=lambda e: e.id):
        image = load_image(entry.image_path)
        rng = derive_rng(cfg.seed, "normalize", entry.id)
        out = _manipulate(model, image, e_bar, rng, cfg.tau, cfg.h, cfg.epsilon)
        out_id = f"{entry.id}-norm"
        out_path = out_dir / f"{out_id}.png"
        save_image(out, out_path)
        entries.append(
            ManifestEntry(
                id=out_id,
                image_path=out_path,
                label=entry.label,
                split=entry.split,
                extra={"source_id": entry.id},
            )
        )
    manifest = DatasetManifest(entries)
    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest
