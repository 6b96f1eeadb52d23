"""Randomized, mostly monotonic decolourization.

The mapping takes an RGB pixel c to a single channel through a random convex
combination of monotonic quadratic terms,

    g(c) = sum_{i<=j} alpha_ij * c_i c_j + sum_{i<=j} beta_ij * (1 - (1-c_i)(1-c_j)),

with all twelve coefficients summing to one and each bounded below by
-epsilon. The endpoints are pinned: g(0,0,0) = 0 and g(1,1,1) = 1 for every
valid draw. With epsilon = 0 every term is non-decreasing in each channel, so
g is monotone; a small positive epsilon admits mildly non-monotone draws.

Redrawing the coefficients per image makes the absolute level of the
colourless output an unreliable cue, which is what stops darkness information
from leaking through it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import as_rng, clamp01, ensure_rgb_image

DEFAULT_EPSILON = 0.05

# channel index pairs (i, j) with i <= j, fixed ordering
PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class DecolourCoefficients:
    """Twelve coefficients of one decolourization draw."""

    alpha: np.ndarray  # (6,) ordered as PAIRS
    beta: np.ndarray  # (6,)
    epsilon: float

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64).reshape(6)
        beta = np.asarray(self.beta, dtype=np.float64).reshape(6)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        total = float(alpha.sum() + beta.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"coefficients must sum to 1, got {total!r}")
        floor = -self.epsilon - 1e-12
        if alpha.min() < floor or beta.min() < floor:
            raise ValueError("coefficients must be >= -epsilon")

    def to_json(self) -> str:
        return json.dumps(
            {"alpha": self.alpha.tolist(), "beta": self.beta.tolist(), "epsilon": self.epsilon}
        )

    @classmethod
    def from_json(cls, text: str) -> "DecolourCoefficients":
        obj = json.loads(text)
        return cls(
            alpha=np.array(obj["alpha"], dtype=np.float64),
            beta=np.array(obj["beta"], dtype=np.float64),
            epsilon=float(obj["epsilon"]),
        )


def sample_coefficients(
    seed: int | np.random.Generator, epsilon: float = DEFAULT_EPSILON
) -> DecolourCoefficients:
    """Draw coefficients uniformly from the constraint set.

    Twelve i.i.d. unit exponentials are normalized onto the simplex, then
    affinely mapped u -> (1 + 12*epsilon)*u - epsilon, which keeps the sum at
    one and lowers the floor to -epsilon. Each coefficient has mean 1/12.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    rng = as_rng(seed)
    u = rng.exponential(scale=1.0, size=12)
    u = u / u.sum()
    coeffs = (1.0 + 12.0 * epsilon) * u - epsilon
    # renormalize away float drift so the endpoint identity is exact
    coeffs = coeffs + (1.0 - coeffs.sum()) / 12.0
    return DecolourCoefficients(alpha=coeffs[:6], beta=coeffs[6:], epsilon=epsilon)


def evaluate_mapping(rgb: np.ndarray, coeffs: DecolourCoefficients) -> np.ndarray:
    """Evaluate g on an (..., 3) array without clamping."""
    rgb = np.asarray(rgb, dtype=np.float64)
    out = np.zeros(rgb.shape[:-1], dtype=np.float64)
    comp = 1.0 - rgb
    for k, (i, j) in enumerate(PAIRS):
        out += coeffs.alpha[k] * rgb[..., i] * rgb[..., j]
        out += coeffs.beta[k] * (1.0 - comp[..., i] * comp[..., j])
    return out


def apply_decolourization(image: np.ndarray, coeffs: DecolourCoefficients) -> np.ndarray:
    """Map an (H, W, 3) image to an (H, W, 1) colourless image, clamped to [0, 1]."""
    image = ensure_rgb_image(image)
    out = evaluate_mapping(image, coeffs)
    return clamp01(out)[:, :, None]


# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def naive_decolourize(image: np.ndarray) -> np.ndarray:
    """Fixed luminance conversion (0.299 R + 0.587 G + 0.114 B); ablation baseline."""
    image = ensure_rgb_image(image)
    return clamp01(image @ _LUMA)[:, :, None]


def save_coefficients(coeffs: DecolourCoefficients, path: str | Path) -> None:
    Path(path).write_text(coeffs.to_json() + "\n", encoding="utf-8")


def load_coefficients(path: str | Path) -> DecolourCoefficients:
    return DecolourCoefficients.from_json(Path(path).read_text(encoding="utf-8"))
