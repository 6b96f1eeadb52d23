#!/usr/bin/env python3
"""End-to-end desk-scale demo.

Generates a mixed synthetic corpus, trains the colour codec, and produces a
small gallery: a colour transfer pair, single-entry edits over the most
active latent entries, and a decolourization example.

Example:
    python3 scripts/desk_run.py --out runs/demo --n 400 --epochs 5 --seed 0
"""

import argparse
import json
from pathlib import Path

import numpy as np

from chromacode import synthbench
from chromacode.codec import encode, load_snapshot, save_snapshot, train
from chromacode.config import ManipulationConfig, TrainingHyperparams
from chromacode.core import load_manifest, save_image
from chromacode.decolour import apply_decolourization, sample_coefficients
from chromacode.latent import active_entries_from_variances
from chromacode.pipelines import edit_entries, transfer_colour


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--n", type=int, default=400)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--resolution", type=int, default=64)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    corpus_dir = out / "corpus"
    if (corpus_dir / "manifest.jsonl").exists():
        manifest = load_manifest(corpus_dir / "manifest.jsonl")
        print(f"reusing corpus of {len(manifest)} scenes")
    else:
        manifest, _ = synthbench.generate_corpus(
            args.n, "mixed", args.seed, corpus_dir, resolution=args.resolution
        )
        print(f"generated {len(manifest)} scenes")

    model_path = out / "model.bin"
    if model_path.exists():
        snapshot = load_snapshot(model_path)
        print("reusing trained model")
    else:
        hp = TrainingHyperparams(
            epochs=args.epochs, resolution=args.resolution, seed=args.seed
        )
        snapshot, report = train(manifest, hp)
        save_snapshot(snapshot, model_path)
        report.save(out / "report.json")
        last = report.epochs[-1]
        print(f"trained: final reconstruction {last.reconstruction_loss:.4f}")

    rng = np.random.default_rng(args.seed)
    warm = synthbench.generate_scene(
        synthbench.sample_scene_spec(rng, "light", marker_count=2), args.resolution
    )
    cool = synthbench.generate_scene(
        synthbench.sample_scene_spec(rng, "dark"), args.resolution
    )
    gallery = out / "gallery"
    gallery.mkdir(exist_ok=True)
    save_image(warm.image, gallery / "structure.png")
    save_image(cool.image, gallery / "donor.png")

    cfg = ManipulationConfig(seed=args.seed)
    transferred = transfer_colour(snapshot, warm.image, cool.image, cfg)
    save_image(transferred, gallery / "transfer.png")
    print("wrote transfer demo")

    coeffs = sample_coefficients(args.seed, cfg.epsilon)
    save_image(
        np.repeat(apply_decolourization(warm.image, coeffs), 3, axis=2),
        gallery / "colourless.png",
    )

    variances = snapshot.embedding_variance
    top = sorted(
        active_entries_from_variances(variances, 0.01), key=lambda i: -variances[i]
    )[:5]
    stds = np.sqrt(variances[top])
    base = encode(snapshot, warm.image)
    for rank, (idx, std) in enumerate(zip(top, stds)):
        for direction, delta in (("minus", -2.0), ("plus", 2.0)):
            edited = edit_entries(
                snapshot, warm.image, {int(idx): float(base[idx] + delta * std)}, cfg
            )
            save_image(edited, gallery / f"edit-rank{rank}-entry{idx}-{direction}.png")
    (out / "active_entries.json").write_text(
        json.dumps({"indices": [int(i) for i in top], "stds": [float(s) for s in stds]})
    )
    print(f"wrote entry-edit gallery for entries {top}")


if __name__ == "__main__":
    main()
