#!/usr/bin/env python3
"""Domain-shift benchmark: light-skin training cohort, dark-skin deployment.

Builds the two synthetic cohorts, trains the colour codecs, prepares four
training-set variants for a small lesion classifier, and reports accuracy
mean/std over seeds:

  baseline     raw light cohort
  aug_reuse    re-coloured with embeddings reused from the deployment cohort
  aug_indep    re-coloured with independently sampled entry marginals
  normalized   both cohorts mapped to the training-set mean embedding
               (codec trained without any deployment images)

Example:
    python3 scripts/domain_shift_benchmark.py --out runs/shift --seeds 0 1 2 3 4
"""

import argparse
import json
import time
from pathlib import Path

from chromacode import synthbench
from chromacode.codec import encode_manifest, load_snapshot, save_snapshot, train
from chromacode.config import (
    AugmentationConfig,
    ClassifierConfig,
    ManipulationConfig,
    TrainingHyperparams,
)
from chromacode.core import DatasetManifest, load_manifest
from chromacode.latent import mean_embedding
from chromacode.pipelines import augment_dataset, normalize_dataset


def corpus(out, name, n, domain, seed, split):
    path = out / name
    if (path / "manifest.jsonl").exists():
        return load_manifest(path / "manifest.jsonl")
    manifest, _ = synthbench.generate_corpus(
        n, domain, seed, path, resolution=64, split=split, id_prefix=name
    )
    return manifest


def codec_model(out, name, manifest, epochs, seed):
    path = out / f"{name}.bin"
    if path.exists():
        return load_snapshot(path)
    t0 = time.time()
    snapshot, _ = train(manifest, TrainingHyperparams(epochs=epochs, seed=seed))
    save_snapshot(snapshot, path)
    print(f"trained {name} in {time.time() - t0:.0f}s")
    return snapshot


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--n", type=int, default=1000, help="images per cohort")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--codec-epochs", type=int, default=10)
    parser.add_argument("--norm-codec-epochs", type=int, default=25)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    source = corpus(out, "cohort-light", args.n, "light", 21, "train")
    target = corpus(out, "cohort-dark", args.n, "dark", 22, "test")
    extra = corpus(out, "cohort-extra", args.n, "mixed", 23, "train")

    aug_codec = codec_model(
        out, "codec-aug", DatasetManifest(source.entries + target.entries),
        args.codec_epochs, args.seed,
    )
    norm_codec = codec_model(
        out, "codec-norm", DatasetManifest(source.entries + extra.entries),
        args.norm_codec_epochs, args.seed,
    )

    targets = encode_manifest(aug_codec, target)
    arms = {}
    for sampler, name in (("reuse", "aug_reuse"), ("independent_marginal", "aug_indep")):
        if not (out / name / "manifest.jsonl").exists():
            augment_dataset(
                aug_codec, source, targets,
                AugmentationConfig(k=1, sampler=sampler, seed=5), out / name,
            )
        arms[name] = (load_manifest(out / name / "manifest.jsonl"), target)

    e_bar = mean_embedding(encode_manifest(norm_codec, source))
    for name, data, seed in (("norm-train", source, 6), ("norm-test", target, 7)):
        if not (out / name / "manifest.jsonl").exists():
            normalize_dataset(
                norm_codec, data, e_bar, ManipulationConfig(seed=seed), out / name
            )
    arms["normalized"] = (
        load_manifest(out / "norm-train" / "manifest.jsonl"),
        load_manifest(out / "norm-test" / "manifest.jsonl"),
    )
    arms["baseline"] = (source, target)

    cfg = ClassifierConfig()
    results = {}
    for name in ("baseline", "aug_reuse", "aug_indep", "normalized"):
        train_m, test_m = arms[name]
        t0 = time.time()
        res = synthbench.run_downstream_benchmark(train_m, test_m, args.seeds, cfg)
        results[name] = res
        print(
            f"{name}: {res['mean_accuracy']:.3f} +- {res['std']:.3f} "
            f"({time.time() - t0:.0f}s)"
        )

    (out / "report.json").write_text(json.dumps(results, indent=2) + "\n")
    print(f"wrote {out / 'report.json'}")


if __name__ == "__main__":
    main()
