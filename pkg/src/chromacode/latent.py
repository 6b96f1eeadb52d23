"""Embedding-set statistics, samplers, trajectories, and PCA projection."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import EMBEDDING_DIM, ShapeError, as_rng


@dataclass
class EmbeddingSet:
    """A collection of colour embeddings with parallel source ids."""

    values: np.ndarray  # (N, EMBEDDING_DIM)
    source_ids: list[str]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != EMBEDDING_DIM:
            raise ShapeError(f"embedding set must be (N, {EMBEDDING_DIM}), got {v.shape}")
        if len(self.source_ids) != v.shape[0]:
            raise ValueError("source_ids must parallel the embedding rows")
        self.values = v

    def __len__(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_pairs(cls, pairs) -> "EmbeddingSet":
        ids = [p[0] for p in pairs]
        vals = np.stack([np.asarray(p[1], dtype=np.float64) for p in pairs])
        return cls(values=vals, source_ids=ids)

    def save_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for sid, row in zip(self.source_ids, self.values):
                fh.write(json.dumps({"id": sid, "values": row.tolist()}) + "\n")

    @classmethod
    def load_jsonl(cls, path: str | Path) -> "EmbeddingSet":
        ids: list[str] = []
        rows: list[np.ndarray] = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                ids.append(str(obj["id"]))
                rows.append(np.asarray(obj["values"], dtype=np.float64))
        if not rows:
            raise ValueError(f"{path}: no embeddings found")
        return cls(values=np.stack(rows), source_ids=ids)


def mean_embedding(embedding_set: EmbeddingSet) -> np.ndarray:
    if len(embedding_set) == 0:
        raise ValueError("cannot average an empty embedding set")
    return embedding_set.values.mean(axis=0)


def entry_variances(embedding_set: EmbeddingSet) -> np.ndarray:
    """Population variance of every embedding entry."""
    if len(embedding_set) < 2:
        raise ValueError("variance needs at least two embeddings")
    return embedding_set.values.var(axis=0, ddof=0)


def active_entries_from_variances(
    variances: np.ndarray, threshold_fraction: float
) -> list[int]:
    if not (0.0 < threshold_fraction <= 1.0):
        raise ValueError("threshold_fraction must lie in (0, 1]")
    variances = np.asarray(variances, dtype=np.float64)
    vmax = variances.max()
    if vmax <= 0.0:
        return []
    return sorted(int(i) for i in np.nonzero(variances >= threshold_fraction * vmax)[0])


def active_entries(embedding_set: EmbeddingSet, threshold_fraction: float = 0.01) -> list[int]:
    """Indices whose variance reaches threshold_fraction of the largest entry variance."""
    return active_entries_from_variances(entry_variances(embedding_set), threshold_fraction)


def reuse_sample(embedding_set: EmbeddingSet, seed: int | np.random.Generator) -> np.ndarray:
    """Uniformly pick one stored embedding."""
    if len(embedding_set) == 0:
        raise ValueError("cannot sample from an empty embedding set")
    rng = as_rng(seed)
    idx = int(rng.integers(0, len(embedding_set)))
    return embedding_set.values[idx].copy()


def reuse_sample_index(embedding_set: EmbeddingSet, rng: np.random.Generator) -> int:
    if len(embedding_set) == 0:
        raise ValueError("cannot sample from an empty embedding set")
    return int(rng.integers(0, len(embedding_set)))


def independent_marginal_sample(
    embedding_set: EmbeddingSet, seed: int | np.random.Generator
) -> np.ndarray:
    """Draw each entry independently from that entry's empirical marginal."""
    if len(embedding_set) == 0:
        raise ValueError("cannot sample from an empty embedding set")
    rng = as_rng(seed)
    n, d = embedding_set.values.shape
    rows = rng.integers(0, n, size=d)
    return embedding_set.values[rows, np.arange(d)].copy()


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Piecewise-linear path through embedding space."""

    waypoints: np.ndarray  # (M, EMBEDDING_DIM), M >= 2
    labels: list[str] | None = None

    def __post_init__(self):
        w = np.asarray(self.waypoints, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != EMBEDDING_DIM:
            raise ShapeError(f"waypoints must be (M, {EMBEDDING_DIM}), got {w.shape}")
        if w.shape[0] < 2:
            raise ValueError("a trajectory needs at least two waypoints")
        self.waypoints = w
        if self.labels is not None and len(self.labels) != w.shape[0]:
            raise ValueError("labels must parallel waypoints")

    def __len__(self) -> int:
        return self.waypoints.shape[0]

    def save_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, row in enumerate(self.waypoints):
                label = self.labels[i] if self.labels else None
                fh.write(json.dumps({"label": label, "values": row.tolist()}) + "\n")

    @classmethod
    def load_jsonl(cls, path: str | Path) -> "Trajectory":
        rows, labels = [], []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                rows.append(np.asarray(obj["values"], dtype=np.float64))
                labels.append(obj.get("label"))
        use_labels = [l if l is not None else "" for l in labels] if any(labels) else None
        return cls(waypoints=np.stack(rows), labels=use_labels)


def trajectory_point(traj: Trajectory, t: float) -> np.ndarray:
    """Point at normalized arc length t in [0, 1] along the trajectory."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    w = traj.waypoints
    seg = np.linalg.norm(np.diff(w, axis=0), axis=1)
    total = seg.sum()
    if total == 0.0:
        return w[0].copy()
    target = t * total
    cum = 0.0
    for i, length in enumerate(seg):
        if length == 0.0:
            continue
        if cum + length >= target or i == len(seg) - 1:
            frac = (target - cum) / length
            frac = min(max(frac, 0.0), 1.0)
            return (1.0 - frac) * w[i] + frac * w[i + 1]
        cum += length
    return w[-1].copy()


def parallel_curve(traj: Trajectory, anchor: np.ndarray) -> Trajectory:
    """Translate the trajectory so it starts at anchor; waypoint differences are kept."""
    anchor = np.asarray(anchor, dtype=np.float64).reshape(-1)
    if anchor.shape[0] != traj.waypoints.shape[1]:
        raise ShapeError("anchor dimensionality must match the trajectory")
    shift = anchor - traj.waypoints[0]
    return Trajectory(waypoints=traj.waypoints + shift, labels=traj.labels)


# ---------------------------------------------------------------------------
# PCA


def pca_project(embedding_set: EmbeddingSet, dims: int) -> np.ndarray:
    """Centered projection onto the top principal axes, shape (N, dims)."""
    n = len(embedding_set)
    if dims < 1:
        raise ValueError("dims must be >= 1")
    if n < dims:
        raise ValueError(f"need at least {dims} embeddings for a {dims}-D projection")
    x = embedding_set.values - embedding_set.values.mean(axis=0)
    if not np.any(x):
        return np.zeros((n, dims))
    _, s, vt = np.linalg.svd(x, full_matrices=False)
    axes = vt[:dims]
    # sign convention: largest-magnitude loading of each axis is positive
    for k in range(axes.shape[0]):
        pivot = np.argmax(np.abs(axes[k]))
        if axes[k, pivot] < 0:
            axes[k] = -axes[k]
    proj = x @ axes.T
    if axes.shape[0] < dims:
        proj = np.pad(proj, ((0, 0), (0, dims - axes.shape[0])))
    return proj


def save_pca_csv(points: np.ndarray, path: str | Path) -> None:
    points = np.asarray(points, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index"] + [f"pc{k + 1}" for k in range(points.shape[1])])
        for i, row in enumerate(points):
            writer.writerow([i] + [repr(float(v)) for v in row])
