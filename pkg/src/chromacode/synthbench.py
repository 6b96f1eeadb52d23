"""Synthetic skin-scene generator with exact ground truth, plus oracle metrics
and the downstream classification harness.

Scenes are deliberately simple so every colour factor is known exactly: a
grey base field set by `base_tone` and modulated by low-frequency texture
noise, a lesion blob with an additive colour offset and an irregularity-driven
boundary, ink-like markers painted on top, and finally a per-channel
multiplicative `tint`. Masks for markers and the lesion are exact by
construction. The benign/malignant label depends only on the lesion boundary
irregularity, never on colour, so colour-shift robustness is what a
downstream classifier gets measured on.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import ClassifierConfig
from .core import (
    DatasetManifest,
    ManifestEntry,
    clamp01,
    derive_rng,
    ensure_rgb_image,
    load_image,
    resize_image,
    save_image,
)

MALIGNANT_IRREGULARITY = 0.25
NOISE_AMPLITUDE = 0.06
NOISE_GRID = 7

DOMAINS = ("light", "dark", "mixed")


@dataclass(frozen=True)
class LesionSpec:
    center: tuple[float, float]  # unit coordinates (y, x)
    radius: float  # fraction of image side
    colour_offset: tuple[float, float, float]
    irregularity: float  # relative boundary jitter amplitude


@dataclass(frozen=True)
class MarkerSpec:
    shape: str  # "disc" or "stroke"
    position: tuple[float, float]  # unit coordinates (y, x)
    size: float  # disc radius / stroke length, fraction of image side
    colour: tuple[float, float, float]
    angle: float = 0.0  # stroke direction, radians


@dataclass(frozen=True)
class SceneSpec:
    base_tone: float
    tint: tuple[float, float, float]
    lesion: LesionSpec
    markers: tuple[MarkerSpec, ...]
    texture_seed: int

    @property
    def label(self) -> str:
        return "malignant" if self.lesion.irregularity > MALIGNANT_IRREGULARITY else "benign"

    def to_json(self) -> str:
        return json.dumps(asdict(self) | {"label": self.label})

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        obj = json.loads(text)
        return cls(
            base_tone=float(obj["base_tone"]),
            tint=tuple(obj["tint"]),
            lesion=LesionSpec(
                center=tuple(obj["lesion"]["center"]),
                radius=float(obj["lesion"]["radius"]),
                colour_offset=tuple(obj["lesion"]["colour_offset"]),
                irregularity=float(obj["lesion"]["irregularity"]),
            ),
            markers=tuple(
                MarkerSpec(
                    shape=m["shape"],
                    position=tuple(m["position"]),
                    size=float(m["size"]),
                    colour=tuple(m["colour"]),
                    angle=float(m.get("angle", 0.0)),
                )
                for m in obj["markers"]
            ),
            texture_seed=int(obj["texture_seed"]),
        )


@dataclass
class SceneRender:
    image: np.ndarray  # (H, W, 3)
    marker_mask: np.ndarray  # (H, W) bool, visible marker pixels
    lesion_mask: np.ndarray  # (H, W) bool, visible lesion pixels (markers excluded)
    spec: SceneSpec


def _low_frequency_noise(rng: np.random.Generator, resolution: int) -> np.ndarray:
    coarse = rng.standard_normal((NOISE_GRID, NOISE_GRID))
    return resize_image(coarse, resolution, resolution)


def _lesion_mask(spec: LesionSpec, rng: np.random.Generator, resolution: int) -> np.ndarray:
    cy, cx = spec.center[0] * resolution, spec.center[1] * resolution
    radius = spec.radius * resolution
    ys, xs = np.mgrid[0:resolution, 0:resolution]
    dy, dx = ys + 0.5 - cy, xs + 0.5 - cx
    dist = np.hypot(dy, dx)
    theta = np.arctan2(dy, dx)
    # band-limited boundary jitter, normalized to unit peak; the higher
    # harmonics give irregular lesions visibly jagged outlines
    harmonics = np.arange(3, 10)
    amps = rng.standard_normal(harmonics.size)
    phases = rng.uniform(0, 2 * math.pi, size=harmonics.size)
    wave = np.zeros_like(theta)
    for k, a, p in zip(harmonics, amps, phases):
        wave += a * np.sin(k * theta + p)
    peak = np.abs(wave).max()
    if peak > 0:
        wave = wave / peak
    r_theta = radius * (1.0 + spec.irregularity * wave)
    return dist <= r_theta


def _marker_mask(marker: MarkerSpec, resolution: int) -> np.ndarray:
    ys, xs = np.mgrid[0:resolution, 0:resolution]
    py, px = marker.position[0] * resolution, marker.position[1] * resolution
    if marker.shape == "disc":
        return np.hypot(ys + 0.5 - py, xs + 0.5 - px) <= marker.size * resolution
    if marker.shape == "stroke":
        length = marker.size * resolution
        ey = py + length * math.sin(marker.angle)
        ex = px + length * math.cos(marker.angle)
        # distance from each pixel centre to the segment
        vy, vx = ey - py, ex - px
        norm2 = vy * vy + vx * vx
        t = ((ys + 0.5 - py) * vy + (xs + 0.5 - px) * vx) / max(norm2, 1e-9)
        t = np.clip(t, 0.0, 1.0)
        dist = np.hypot(ys + 0.5 - (py + t * vy), xs + 0.5 - (px + t * vx))
        return dist <= max(1.2, 0.02 * resolution)
    raise ValueError(f"unknown marker shape {marker.shape!r}")


def generate_scene(spec: SceneSpec, resolution: int = 64) -> SceneRender:
    """Render a scene deterministically from its spec."""
    rng = derive_rng(spec.texture_seed, "scene-texture")
    noise = _low_frequency_noise(rng, resolution)
    base = spec.base_tone * (1.0 + NOISE_AMPLITUDE * noise)
    image = np.repeat(base[:, :, None], 3, axis=2)

    lesion = _lesion_mask(spec.lesion, rng, resolution)
    image[lesion] += np.asarray(spec.lesion.colour_offset)

    marker_mask = np.zeros((resolution, resolution), dtype=bool)
    for marker in spec.markers:
        mask = _marker_mask(marker, resolution)
        image[mask] = np.asarray(marker.colour)
        marker_mask |= mask

    image *= np.asarray(spec.tint)[None, None, :]
    image = clamp01(image)
    return SceneRender(
        image=image,
        marker_mask=marker_mask,
        lesion_mask=lesion & ~marker_mask,
        spec=spec,
    )


# ---------------------------------------------------------------------------
# domain distributions

_INK = {"r": (0.0, 0.06), "g": (0.88, 1.0), "b": (0.92, 1.0)}


def _sample_tint(rng: np.random.Generator, domain: str) -> tuple[float, float, float]:
    if domain == "light":  # warm
        return (
            float(rng.uniform(1.05, 1.40)),
            float(rng.uniform(0.85, 1.10)),
            float(rng.uniform(0.55, 0.90)),
        )
    if domain == "dark":  # cool
        return (
            float(rng.uniform(0.50, 0.85)),
            float(rng.uniform(0.80, 1.05)),
            float(rng.uniform(1.05, 1.40)),
        )
    raise ValueError(f"unknown tint domain {domain!r}")


def _sample_markers(rng: np.random.Generator, count: int | None = None) -> tuple[MarkerSpec, ...]:
    if count is None:
        count = int(rng.choice([0, 1, 2, 3], p=[0.2, 0.3, 0.3, 0.2]))
    markers = []
    for _ in range(count):
        colour = (
            float(rng.uniform(*_INK["r"])),
            float(rng.uniform(*_INK["g"])),
            float(rng.uniform(*_INK["b"])),
        )
        if rng.random() < 0.5:
            markers.append(
                MarkerSpec(
                    shape="disc",
                    position=(float(rng.uniform(0.1, 0.9)), float(rng.uniform(0.1, 0.9))),
                    size=float(rng.uniform(0.025, 0.055)),
                    colour=colour,
                )
            )
        else:
            markers.append(
                MarkerSpec(
                    shape="stroke",
                    position=(float(rng.uniform(0.15, 0.75)), float(rng.uniform(0.15, 0.75))),
                    size=float(rng.uniform(0.15, 0.3)),
                    colour=colour,
                    angle=float(rng.uniform(0, 2 * math.pi)),
                )
            )
    return tuple(markers)


def sample_scene_spec(
    rng: np.random.Generator,
    domain: str = "mixed",
    label: str | None = None,
    marker_count: int | None = None,
) -> SceneSpec:
    """Draw a scene spec from one of the built-in domain distributions."""
    if domain not in DOMAINS:
        raise ValueError(f"domain must be one of {DOMAINS}")
    effective = domain if domain != "mixed" else ("light" if rng.random() < 0.5 else "dark")
    if effective == "light":
        base_tone = float(rng.uniform(0.55, 0.90))
    else:
        base_tone = float(rng.uniform(0.10, 0.45))
    tint = _sample_tint(rng, effective)

    if label is None:
        label = "malignant" if rng.random() < 0.5 else "benign"
    if label == "malignant":
        irregularity = float(rng.uniform(0.45, 0.75))
    else:
        irregularity = float(rng.uniform(0.02, 0.08))
    strength = float(rng.uniform(0.16, 0.30))
    offset = -strength * np.array([0.35, 0.85, 0.65]) + rng.normal(0, 0.015, size=3)
    lesion = LesionSpec(
        center=(float(rng.uniform(0.35, 0.65)), float(rng.uniform(0.35, 0.65))),
        radius=float(rng.uniform(0.16, 0.24)),
        colour_offset=tuple(float(v) for v in offset),
        irregularity=irregularity,
    )
    return SceneSpec(
        base_tone=base_tone,
        tint=tint,
        lesion=lesion,
        markers=_sample_markers(rng, marker_count),
        texture_seed=int(rng.integers(0, 2**31 - 1)),
    )


def generate_corpus(
    n: int,
    domain: str,
    seed: int,
    out_dir: str | Path,
    resolution: int = 64,
    split: str = "train",
    id_prefix: str = "scene",
) -> tuple[DatasetManifest, list[SceneRender]]:
    """Render n scenes to PNG files plus a manifest and a spec sidecar.

    Labels alternate so both classes are always present in equal number.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = derive_rng(seed, "corpus", domain)
    entries: list[ManifestEntry] = []
    renders: list[SceneRender] = []
    spec_lines: list[str] = []
    for i in range(n):
        label = "benign" if i % 2 == 0 else "malignant"
        spec = sample_scene_spec(rng, domain=domain, label=label)
        render = generate_scene(spec, resolution)
        scene_id = f"{id_prefix}-{i:05d}"
        image_path = out_dir / f"{scene_id}.png"
        save_image(render.image, image_path)
        entries.append(
            ManifestEntry(id=scene_id, image_path=image_path, label=spec.label, split=split)
        )
        renders.append(render)
        spec_lines.append(json.dumps({"id": scene_id} | json.loads(spec.to_json())))
    (out_dir / "scenes.jsonl").write_text("\n".join(spec_lines) + "\n", encoding="utf-8")
    manifest = DatasetManifest(entries)
    from .core import save_manifest

    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest, renders


# ---------------------------------------------------------------------------
# oracle metrics


def global_colour_distance(
    a: np.ndarray, b: np.ndarray, exclude_mask: np.ndarray | None = None
) -> float:
    """Euclidean distance between per-channel means over non-excluded pixels."""
    a = ensure_rgb_image(a, "a")
    b = ensure_rgb_image(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if exclude_mask is not None:
        keep = ~np.asarray(exclude_mask, dtype=bool)
        if not keep.any():
            raise ValueError("no pixels left after exclusion")
        mean_a = a[keep].mean(axis=0)
        mean_b = b[keep].mean(axis=0)
    else:
        mean_a = a.mean(axis=(0, 1))
        mean_b = b.mean(axis=(0, 1))
    return float(np.linalg.norm(mean_a - mean_b))


def marker_fidelity(original: SceneRender, output: np.ndarray) -> float:
    """Mean absolute difference on marker pixels; lower is better."""
    output = ensure_rgb_image(output, "output")
    if output.shape != original.image.shape:
        raise ValueError("output shape does not match the render")
    mask = original.marker_mask
    if not mask.any():
        raise ValueError("scene has no marker pixels")
    return float(np.abs(output[mask] - original.image[mask]).mean())


def _pool4(img: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    ph, pw = h // 4, w // 4
    return img[: ph * 4, : pw * 4].reshape(ph, 4, pw, 4, -1).mean(axis=(1, 3))


def masked_perceptual_proxy(
    a: np.ndarray, b: np.ndarray, exclude_mask: np.ndarray | None = None
) -> float:
    """Structural difference proxy: squared error on 4x4 average-pooled images.

    Pooled cells are weighted by the fraction of their pixels that remain
    after exclusion, so partially excluded cells count proportionally.
    """
    a = ensure_rgb_image(a, "a")
    b = ensure_rgb_image(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if exclude_mask is None:
        include = np.ones(a.shape[:2])
    else:
        include = (~np.asarray(exclude_mask, dtype=bool)).astype(np.float64)
    weights = _pool4(include[:, :, None])[:, :, 0]
    if weights.sum() <= 0:
        raise ValueError("no pixels left after exclusion")
    sq = ((_pool4(a) - _pool4(b)) ** 2).mean(axis=2)
    return float((weights * sq).sum() / weights.sum())


# ---------------------------------------------------------------------------
# downstream benchmark


def _load_labelled(manifest: DatasetManifest, resolution: int):
    labels = sorted({e.label for e in manifest.entries if e.label is not None})
    if len(labels) < 2:
        raise ValueError("benchmark manifests need at least two label classes")
    index = {label: i for i, label in enumerate(labels)}
    images, targets = [], []
    for e in manifest.entries:
        if e.label is None:
            raise ValueError(f"entry {e.id} has no label")
        images.append(resize_image(load_image(e.image_path), resolution, resolution))
        targets.append(index[e.label])
    x = np.stack(images).transpose(0, 3, 1, 2).astype(np.float32)
    return x, np.asarray(targets, dtype=np.int64), labels


def _build_classifier(width: int, n_classes: int):
    import torch
    from torch import nn

    def conv_block(cin, cout):
        return nn.Sequential(
            nn.Conv2d(cin, cout, 3, padding=1),
            nn.BatchNorm2d(cout),
            nn.SiLU(),
            nn.MaxPool2d(2),
        )

    w = width
    return nn.Sequential(
        conv_block(3, w),
        conv_block(w, 2 * w),
        conv_block(2 * w, 4 * w),
        nn.AdaptiveAvgPool2d(1),
        nn.Flatten(),
        nn.Linear(4 * w, n_classes),
    )


def run_downstream_benchmark(
    train_manifest: DatasetManifest,
    test_manifest: DatasetManifest,
    seeds: list[int],
    cfg: ClassifierConfig = ClassifierConfig(),
) -> dict:
    """Train one small classifier per seed and report test-accuracy mean/std."""
    import torch

    train_x, train_t, train_labels = _load_labelled(train_manifest, cfg.resolution)
    test_x, test_t, test_labels = _load_labelled(test_manifest, cfg.resolution)
    if train_labels != test_labels:
        raise ValueError(f"label sets differ: {train_labels} vs {test_labels}")

    accuracies = []
    for seed in seeds:
        torch.manual_seed(seed)
        model = _build_classifier(cfg.width, len(train_labels))
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
        loss_fn = torch.nn.CrossEntropyLoss()
        order_rng = derive_rng(seed, "classifier-shuffle")
        aug_rng = derive_rng(seed, "classifier-augment")
        tt = torch.from_numpy(train_t)
        model.train()
        for _ in range(cfg.epochs):
            perm = order_rng.permutation(train_x.shape[0])
            for start in range(0, train_x.shape[0], cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                batch = train_x[idx]
                if cfg.random_flips:
                    if aug_rng.random() < 0.5:
                        batch = batch[:, :, :, ::-1]
                    if aug_rng.random() < 0.5:
                        batch = batch[:, :, ::-1, :]
                if cfg.colour_jitter > 0:
                    scale = aug_rng.uniform(
                        1 - cfg.colour_jitter,
                        1 + cfg.colour_jitter,
                        size=(batch.shape[0], 3, 1, 1),
                    ).astype(np.float32)
                    batch = np.clip(batch * scale, 0.0, 1.0)
                logits = model(torch.from_numpy(np.ascontiguousarray(batch)))
                loss = loss_fn(logits, tt[idx])
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
        model.eval()
        with torch.no_grad():
            preds = []
            for start in range(0, test_x.shape[0], 256):
                chunk = torch.from_numpy(test_x[start : start + 256])
                preds.append(model(chunk).argmax(dim=1).numpy())
        pred = np.concatenate(preds)
        accuracies.append(float((pred == test_t).mean()))

    acc = np.asarray(accuracies)
    return {
        "mean_accuracy": float(acc.mean()),
        "std": float(acc.std(ddof=0)),
        "per_seed": {str(s): a for s, a in zip(seeds, accuracies)},
        "labels": train_labels,
    }
