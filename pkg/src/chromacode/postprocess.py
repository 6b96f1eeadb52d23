"""Geometry-aligned colour correction.

A manipulated output is only trusted where the model could already
reconstruct the original: each pixel gets a rejection weight from the
self-reconstruction error, and the proposed change is blended out where that
weight is high. Pixels the model cannot reproduce (ink marks, scars, other
localized colour patterns) therefore keep their original values.

The per-pixel error measure is the L1 distance across the three channels
(range [0, 3]); the normalized error d saturates at 1, so any pixel whose
error reaches tau + (1 - tau) is rejected outright.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import ShapeError, clamp01, ensure_rgb_image, save_greyscale

DEFAULT_TAU = 0.1

H_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "square": lambda d: d * d,
    "identity": lambda d: d,
    "cube": lambda d: d * d * d,
}


def resolve_h(h: str | Callable[[np.ndarray], np.ndarray]) -> Callable:
    if callable(h):
        return h
    try:
        return H_FUNCTIONS[h]
    except KeyError:
        raise ValueError(f"unknown weight shape {h!r}; choose from {sorted(H_FUNCTIONS)}")


def validate_h(h: Callable[[np.ndarray], np.ndarray]) -> None:
    """h must map [0,1] into [0,1], vanish at 0, and be monotone on a 101-point grid."""
    grid = np.linspace(0.0, 1.0, 101)
    vals = np.asarray(h(grid), dtype=np.float64)
    if vals.shape != grid.shape:
        raise ValueError("h must evaluate elementwise on arrays")
    if abs(float(vals[0])) > 1e-9:
        raise ValueError("h(0) must be 0")
    if vals[-1] > 1.0 + 1e-9 or vals.min() < -1e-9:
        raise ValueError("h must map [0,1] into [0,1]")
    if np.any(np.diff(vals) < -1e-9):
        raise ValueError("h must be monotone non-decreasing")


@dataclass(frozen=True)
class RejectionWeightMap:
    weights: np.ndarray  # (H, W) in [0, 1]
    tau: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if w.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got {w.shape}")
        if w.min() < 0.0 or w.max() > 1.0:
            raise ValueError("weights must lie in [0, 1]")
        if not (0.0 <= self.tau < 1.0):
            raise ValueError("tau must lie in [0, 1)")

    @property
    def shape_of(self) -> tuple[int, int]:
        return self.weights.shape


def pixel_error(y: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    """Per-pixel L1 error across channels, shape (H, W)."""
    return np.abs(y - y_hat).sum(axis=-1)


def rejection_weights(
    y: np.ndarray,
    y_hat: np.ndarray,
    tau: float = DEFAULT_TAU,
    h: str | Callable = "square",
) -> RejectionWeightMap:
    """Weight map w = h(d) with d = min(1, max(err - tau, 0) / (1 - tau))."""
    y = ensure_rgb_image(y, "y")
    y_hat = ensure_rgb_image(y_hat, "y_hat")
    if y.shape != y_hat.shape:
        raise ShapeError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    if not (0.0 <= tau < 1.0):
        raise ValueError("tau must lie in [0, 1)")
    h_fn = resolve_h(h)
    validate_h(h_fn)
    err = pixel_error(y, y_hat)
    d = np.clip(np.maximum(err - tau, 0.0) / (1.0 - tau), 0.0, 1.0)
    w = np.clip(np.asarray(h_fn(d), dtype=np.float64), 0.0, 1.0)
    return RejectionWeightMap(weights=w, tau=tau)


def apply_correction(y: np.ndarray, y_prime: np.ndarray, w: RejectionWeightMap) -> np.ndarray:
    """Blend y + (1 - w) * (y_prime - y) per pixel, weight broadcast over channels.

    Computed in convex-combination form so fully rejected pixels reproduce y
    exactly and fully accepted pixels reproduce y_prime exactly.
    """
    y = ensure_rgb_image(y, "y")
    y_prime = ensure_rgb_image(y_prime, "y_prime")
    if y.shape != y_prime.shape:
        raise ShapeError(f"shape mismatch: {y.shape} vs {y_prime.shape}")
    if w.weights.shape != y.shape[:2]:
        raise ShapeError(f"weight map {w.weights.shape} does not match image {y.shape[:2]}")
    wc = w.weights[:, :, None]
    return clamp01(wc * y + (1.0 - wc) * y_prime)


def corrected_manipulation(
    model,
    y: np.ndarray,
    coeffs,
    e_prime: np.ndarray,
    tau: float = DEFAULT_TAU,
    h: str | Callable = "square",
) -> np.ndarray:
    """Full manipulation path: decolourize, synthesize with e', gate by self-error.

    The colourless input is shared between the self-reconstruction and the
    manipulated synthesis, so the weight map measures only what the
    representation itself cannot carry.
    """
    from .codec import encode, synthesize
    from .decolour import apply_decolourization

    y = ensure_rgb_image(y, "y")
    x = apply_decolourization(y, coeffs)
    e_self = encode(model, y)
    y_hat = synthesize(model, x, e_self)
    y_prop = synthesize(model, x, e_prime)
    w = rejection_weights(y, y_hat, tau=tau, h=h)
    return apply_correction(y, y_prop, w)


def save_weight_map(w: RejectionWeightMap, path: str | Path) -> None:
    """Debug dump of the weight map as a greyscale PNG."""
    save_greyscale(w.weights, path)
