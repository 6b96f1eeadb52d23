"""Rate-penalized training of the colour codec.

Loss terms:
  reconstruction  mean absolute error between synthesized and original image
  rate            bits of the noise-perturbed embedding under the factorized
                  density, normalized by the 8x8 colour-cell count; entries
                  whose spread stays under the unit noise width cost nothing
  diversity       hinge max(0, 1 - mean pairwise embedding distance), which
                  keeps the batch embeddings from collapsing to one point
  colour          squared error between 8x8 average-pooled output and input,
                  tying the embedding to the global colour layout

During training the synthesizer consumes the noise-perturbed embedding, so an
entry only helps reconstruction once its spread clears the noise width, and
keeping that spread costs bits. This is what concentrates information into a
few entries within a short run. Inference uses the continuous embedding.

The rate model's density parameters are per-entry scalar fits and learn at a
higher rate than the networks, as do the encoder head rows; without that the
density cannot track the collapsing entries inside a desk-scale budget.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from ..config import TrainingHyperparams
from ..core import (
    DatasetManifest,
    TrainingDivergedError,
    derive_rng,
    load_image,
    resize_image,
)
from ..decolour import PAIRS, sample_coefficients
from .nets import build_modules
from .snapshot import MODEL_VERSION, ModelSnapshot

# spatial granularity of the pooled colour supervision; also the rate
# term's normalizer (bits per colour cell)
COLOUR_CELLS = 8 * 8

HEAD_LR_MULT = 10.0
RATE_LR_MULT = 30.0


@dataclass(frozen=True)
class EpochStats:
    reconstruction_loss: float
    rate_bits_per_pixel: float
    diversity_loss: float
    colour_loss: float
    total_loss: float


@dataclass
class TrainingReport:
    epochs: list[EpochStats]

    def to_json(self) -> str:
        return json.dumps({"epochs": [asdict(e) for e in self.epochs]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainingReport":
        obj = json.loads(text)
        return cls(epochs=[EpochStats(**e) for e in obj["epochs"]])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def load_training_images(manifest: DatasetManifest, resolution: int) -> np.ndarray:
    """Load every manifest image resized to the training resolution, (N,H,W,3)."""
    images = [
        resize_image(load_image(e.image_path), resolution, resolution)
        for e in manifest.entries
    ]
    return np.stack(images).astype(np.float64)


def decolourize_batch(images: np.ndarray, alphas: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """Vectorized randomized decolourization with per-image coefficients.

    images (B,H,W,3), alphas/betas (B,6) -> (B,H,W,1) clamped.
    """
    comp = 1.0 - images
    out = np.zeros(images.shape[:3], dtype=np.float64)
    for k, (i, j) in enumerate(PAIRS):
        out += alphas[:, k, None, None] * images[..., i] * images[..., j]
        out += betas[:, k, None, None] * (1.0 - comp[..., i] * comp[..., j])
    return np.clip(out, 0.0, 1.0)[..., None]


def naive_batch(images: np.ndarray) -> np.ndarray:
    luma = images @ np.array([0.299, 0.587, 0.114])
    return np.clip(luma, 0.0, 1.0)[..., None]


def compute_losses(
    encoder,
    synthesizer,
    rate_model,
    y: torch.Tensor,
    x: torch.Tensor,
    noise: torch.Tensor,
    hp: TrainingHyperparams,
) -> dict[str, torch.Tensor]:
    """All loss terms for one batch; `noise` must match the embedding shape."""
    e = encoder(y)
    e_noisy = e + noise
    y_hat = synthesizer(x, e_noisy)
    rec = (y_hat - y).abs().mean()
    bits_per_image = rate_model.bits(e_noisy).sum(dim=1).mean()
    rate = bits_per_image / COLOUR_CELLS
    if y.shape[0] >= 2:
        dists = torch.pdist(e)
        diver = F.relu(1.0 - dists.mean())
    else:
        diver = torch.zeros((), dtype=y.dtype)
    pooled_hat = F.adaptive_avg_pool2d(y_hat, 8)
    pooled_y = F.adaptive_avg_pool2d(y, 8)
    colour = ((pooled_hat - pooled_y) ** 2).mean()
    total = (
        rec
        + hp.lambda_bpp_g * rate
        + hp.lambda_diver * diver
        + hp.lambda_color * colour
    )
    return {
        "reconstruction": rec,
        "rate_bpp": bits_per_image / float(y.shape[2] * y.shape[3]),
        "rate": rate,
        "diversity": diver,
        "colour": colour,
        "total": total,
    }


def _epoch_coefficients(manifest_ids, hp: TrainingHyperparams, epoch: int):
    """Fresh per-image coefficient draws, keyed by image id so the stream is
    independent of the shuffle order."""
    alphas = np.empty((len(manifest_ids), 6))
    betas = np.empty((len(manifest_ids), 6))
    for row, image_id in enumerate(manifest_ids):
        rng = derive_rng(hp.seed, "decolour", epoch, image_id)
        coeffs = sample_coefficients(rng, hp.epsilon)
        alphas[row] = coeffs.alpha
        betas[row] = coeffs.beta
    return alphas, betas


def compute_embedding_stats(encoder, images: np.ndarray, batch_size: int = 64):
    """Mean and population variance of clean embeddings over an image stack."""
    encoder.eval()
    outs = []
    with torch.no_grad():
        for start in range(0, images.shape[0], batch_size):
            chunk = images[start : start + batch_size]
            y = torch.from_numpy(chunk.transpose(0, 3, 1, 2).astype(np.float32))
            outs.append(encoder(y).numpy().astype(np.float64))
    all_e = np.concatenate(outs, axis=0)
    return all_e.mean(axis=0), all_e.var(axis=0, ddof=0)


def train(manifest: DatasetManifest, hp: TrainingHyperparams):
    """Train encoder, synthesizer, and rate model; returns (snapshot, report).

    Deterministic given (manifest, hp): data order, coefficient draws, noise,
    and initialization all derive from hp.seed.
    """
    if len(manifest) == 0:
        raise ValueError("training manifest is empty")
    torch.manual_seed(hp.seed)
    images = load_training_images(manifest, hp.resolution)
    ids = manifest.ids()
    n = images.shape[0]

    encoder, synthesizer, rate_model = build_modules(256, hp.width)
    body = [
        p for name, p in encoder.named_parameters() if not name.startswith("head")
    ] + list(synthesizer.parameters())
    optimizer = torch.optim.Adam(
        [
            {"params": body, "lr": hp.learning_rate},
            {"params": list(encoder.head.parameters()), "lr": HEAD_LR_MULT * hp.learning_rate},
            {"params": list(rate_model.parameters()), "lr": RATE_LR_MULT * hp.learning_rate},
        ]
    )
    noise_gen = torch.Generator().manual_seed(hp.seed + 1)
    shuffle_rng = derive_rng(hp.seed, "shuffle")

    report_epochs: list[EpochStats] = []
    for epoch in range(hp.epochs):
        if hp.decolour_mode == "randomized":
            alphas, betas = _epoch_coefficients(ids, hp, epoch)
        perm = shuffle_rng.permutation(n)
        sums = {"reconstruction": 0.0, "rate_bpp": 0.0, "diversity": 0.0, "colour": 0.0, "total": 0.0}
        steps = 0
        encoder.train(), synthesizer.train(), rate_model.train()
        for start in range(0, n, hp.batch_size):
            idx = perm[start : start + hp.batch_size]
            batch_y = images[idx]
            if hp.decolour_mode == "randomized":
                batch_x = decolourize_batch(batch_y, alphas[idx], betas[idx])
            else:
                batch_x = naive_batch(batch_y)
            y = torch.from_numpy(batch_y.transpose(0, 3, 1, 2).astype(np.float32))
            x = torch.from_numpy(batch_x.transpose(0, 3, 1, 2).astype(np.float32))
            noise = (
                torch.rand((y.shape[0], 256), generator=noise_gen, dtype=torch.float32)
                - 0.5
            )
            losses = compute_losses(encoder, synthesizer, rate_model, y, x, noise, hp)
            if not torch.isfinite(losses["total"]):
                raise TrainingDivergedError(epoch)
            optimizer.zero_grad()
            losses["total"].backward()
            optimizer.step()
            for key in sums:
                sums[key] += float(losses[key].detach())
            steps += 1
        report_epochs.append(
            EpochStats(
                reconstruction_loss=sums["reconstruction"] / steps,
                rate_bits_per_pixel=sums["rate_bpp"] / steps,
                diversity_loss=sums["diversity"] / steps,
                colour_loss=sums["colour"] / steps,
                total_loss=sums["total"] / steps,
            )
        )

    mean, var = compute_embedding_stats(encoder, images)
    snapshot = ModelSnapshot(
        version=MODEL_VERSION,
        embedding_dim=256,
        training_config=hp,
        encoder_params={k: v.numpy().copy() for k, v in encoder.state_dict().items()},
        synthesizer_params={
            k: v.numpy().copy() for k, v in synthesizer.state_dict().items()
        },
        rate_model_params={
            k: v.numpy().copy() for k, v in rate_model.state_dict().items()
        },
        embedding_mean=mean,
        embedding_variance=var,
    )
    return snapshot, TrainingReport(epochs=report_epochs)
