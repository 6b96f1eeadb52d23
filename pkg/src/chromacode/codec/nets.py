"""Network definitions for the colour codec.

The encoder squeezes a full-colour image into one global embedding through a
strided convolutional stack and global average pooling. The synthesizer is a
small U-shaped network over the colourless image; the embedding enters as a
spatially broadcast bottleneck input and again as a feature-wise affine
modulation at every decoder stage, so it acts purely as a global conditioning
signal. A factorized rate model prices each embedding entry in bits.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

MIN_LIKELIHOOD = 2.0**-40


class ColourEncoder(nn.Module):
    def __init__(self, embedding_dim: int = 256, width: int = 16):
        super().__init__()
        w = width
        self.stem = nn.Sequential(
            nn.Conv2d(3, w, 3, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(w, 2 * w, 3, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(2 * w, 4 * w, 3, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(4 * w, 4 * w, 3, stride=1, padding=1),
            nn.SiLU(),
        )
        self.head = nn.Linear(4 * w, embedding_dim)
        # start entries spread wider than the unit rate-noise window, so the
        # reconstruction gradient is live from the first step and the rate
        # term decides which entries keep their spread
        nn.init.normal_(self.head.weight, std=0.25)
        nn.init.zeros_(self.head.bias)

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        feats = self.stem(y)
        return self.head(feats.mean(dim=(2, 3)))


class FiLM(nn.Module):
    """Feature-wise affine modulation conditioned on the embedding."""

    def __init__(self, embedding_dim: int, channels: int):
        super().__init__()
        self.proj = nn.Linear(embedding_dim, 2 * channels)
        nn.init.zeros_(self.proj.weight)
        nn.init.zeros_(self.proj.bias)

    def forward(self, x: torch.Tensor, e: torch.Tensor) -> torch.Tensor:
        gamma, beta = self.proj(e).chunk(2, dim=1)
        return x * (1.0 + gamma[:, :, None, None]) + beta[:, :, None, None]


class ColourSynthesizer(nn.Module):
    """Reconstruct a colour image from a colourless image and an embedding."""

    def __init__(self, embedding_dim: int = 256, width: int = 16):
        super().__init__()
        w = width
        self.enc1 = nn.Conv2d(1, w, 3, padding=1)
        self.enc2 = nn.Conv2d(w, 2 * w, 3, stride=2, padding=1)
        self.enc3 = nn.Conv2d(2 * w, 4 * w, 3, stride=2, padding=1)
        self.embed_proj = nn.Linear(embedding_dim, 2 * w)
        nn.init.zeros_(self.embed_proj.weight)
        nn.init.zeros_(self.embed_proj.bias)
        self.bottleneck = nn.Conv2d(6 * w, 4 * w, 3, padding=1)
        self.film_b = FiLM(embedding_dim, 4 * w)
        self.dec2 = nn.Conv2d(6 * w, 2 * w, 3, padding=1)
        self.film2 = FiLM(embedding_dim, 2 * w)
        self.dec1 = nn.Conv2d(3 * w, w, 3, padding=1)
        self.film1 = FiLM(embedding_dim, w)
        self.out = nn.Conv2d(w, 3, 3, padding=1)

    def forward(self, x: torch.Tensor, e: torch.Tensor) -> torch.Tensor:
        a1 = F.silu(self.enc1(x))
        a2 = F.silu(self.enc2(a1))
        a3 = F.silu(self.enc3(a2))
        cond = self.embed_proj(e)[:, :, None, None].expand(-1, -1, a3.shape[2], a3.shape[3])
        b = F.silu(self.film_b(self.bottleneck(torch.cat([a3, cond], dim=1)), e))
        u2 = F.interpolate(b, scale_factor=2, mode="nearest")
        u2 = F.silu(self.film2(self.dec2(torch.cat([u2, a2], dim=1)), e))
        u1 = F.interpolate(u2, scale_factor=2, mode="nearest")
        u1 = F.silu(self.film1(self.dec1(torch.cat([u1, a1], dim=1)), e))
        return torch.sigmoid(self.out(u1))


class FactorizedRateModel(nn.Module):
    """Per-entry logistic density; bits are measured on a unit-width interval."""

    def __init__(self, embedding_dim: int = 256):
        super().__init__()
        self.mu = nn.Parameter(torch.zeros(embedding_dim))
        # softplus(raw) == 1 at init
        self.raw_scale = nn.Parameter(torch.full((embedding_dim,), math.log(math.e - 1.0)))

    def scale(self) -> torch.Tensor:
        return F.softplus(self.raw_scale) + 1e-6

    def bits(self, e: torch.Tensor) -> torch.Tensor:
        """Bits per entry for a batch of embeddings, shape (B, D)."""
        s = self.scale()
        upper = torch.sigmoid((e + 0.5 - self.mu) / s)
        lower = torch.sigmoid((e - 0.5 - self.mu) / s)
        p = torch.clamp(upper - lower, min=MIN_LIKELIHOOD)
        return -torch.log2(p)


def build_modules(embedding_dim: int, width: int):
    return (
        ColourEncoder(embedding_dim, width),
        ColourSynthesizer(embedding_dim, width),
        FactorizedRateModel(embedding_dim),
    )


def count_parameters(*modules: nn.Module) -> int:
    return sum(p.numel() for m in modules for p in m.parameters())
