import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from chromacode import codec
from chromacode.codec import encode, encode_manifest, train
from chromacode.config import AugmentationConfig, ManipulationConfig, TrainingHyperparams
from chromacode.core import DatasetManifest, load_image, load_manifest
from chromacode.latent import EmbeddingSet, mean_embedding
from chromacode.pipelines import (
    apply_embedding,
    augment_dataset,
    edit_entries,
    normalize_dataset,
    transfer_colour,
)


def dir_digest(path: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(path.rglob("*")):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


class TestTransfer:
    def test_output_matches_structure_dimensions(self, tiny_model, rng):
        snapshot, _ = tiny_model
        structure = rng.uniform(size=(40, 56, 3))
        colour = rng.uniform(size=(32, 32, 3))
        out = transfer_colour(snapshot, structure, colour)
        assert out.shape == structure.shape
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_deterministic(self, tiny_model, rng):
        snapshot, _ = tiny_model
        a = rng.uniform(size=(32, 32, 3))
        b = rng.uniform(size=(32, 32, 3))
        cfg = ManipulationConfig(seed=3)
        assert np.array_equal(
            transfer_colour(snapshot, a, b, cfg), transfer_colour(snapshot, a, b, cfg)
        )


class TestEditEntries:
    def test_empty_edit_equals_plain_self_blend(self, tiny_model, rng):
        snapshot, _ = tiny_model
        img = rng.uniform(size=(32, 32, 3))
        cfg = ManipulationConfig(seed=1)
        no_op = edit_entries(snapshot, img, {}, cfg)
        direct = apply_embedding(snapshot, img, encode(snapshot, img), cfg)
        assert np.array_equal(no_op, direct)

    def test_sequential_edits_equal_combined(self, tiny_model, rng):
        snapshot, _ = tiny_model
        img = rng.uniform(size=(32, 32, 3))
        cfg = ManipulationConfig(seed=2)
        combined = edit_entries(snapshot, img, {3: 1.5, 17: -0.5}, cfg)
        e = encode(snapshot, img)
        e[3] = 1.5
        e[17] = -0.5
        assert np.array_equal(combined, apply_embedding(snapshot, img, e, cfg))

    def test_out_of_range_index(self, tiny_model, rng):
        snapshot, _ = tiny_model
        img = rng.uniform(size=(32, 32, 3))
        with pytest.raises(ValueError):
            edit_entries(snapshot, img, {256: 1.0})
        with pytest.raises(ValueError):
            edit_entries(snapshot, img, {-1: 1.0})


@pytest.fixture(scope="module")
def aug_setup(tiny_model, tiny_corpus):
    snapshot, _ = tiny_model
    manifest, _ = tiny_corpus
    source = DatasetManifest(manifest.entries[:4])
    targets = encode_manifest(snapshot, DatasetManifest(manifest.entries[4:10]))
    return snapshot, source, targets


class TestAugment:
    def test_cardinality_and_label_propagation(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        cfg = AugmentationConfig(k=3, seed=1)
        out = augment_dataset(snapshot, source, targets, cfg, tmp_path / "aug")
        assert len(out) == 12
        by_source = {}
        for e in out.entries:
            assert e.label == source.by_id(e.extra["source_id"]).label
            assert e.split == source.by_id(e.extra["source_id"]).split
            by_source.setdefault(e.extra["source_id"], []).append(e.extra["sample_index"])
        for sid, indices in by_source.items():
            assert sorted(indices) == [0, 1, 2]

    def test_reuse_support_property(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        cfg = AugmentationConfig(k=2, sampler="reuse", seed=4)
        out = augment_dataset(snapshot, source, targets, cfg, tmp_path / "aug")
        for e in out.entries:
            assert e.extra["embedding_source_id"] in targets.source_ids

    def test_independent_sampler_marks_provenance(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        cfg = AugmentationConfig(k=1, sampler="independent_marginal", seed=4)
        out = augment_dataset(snapshot, source, targets, cfg, tmp_path / "aug")
        assert all(e.extra["embedding_source_id"] == "sampled" for e in out.entries)

    def test_deterministic_bytes(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        cfg = AugmentationConfig(k=2, seed=9)
        augment_dataset(snapshot, source, targets, cfg, tmp_path / "a")
        augment_dataset(snapshot, source, targets, cfg, tmp_path / "b")
        assert dir_digest(tmp_path / "a") == dir_digest(tmp_path / "b")

    def test_include_originals_flag(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        cfg = AugmentationConfig(k=1, seed=1, include_originals=True)
        out = augment_dataset(snapshot, source, targets, cfg, tmp_path / "aug")
        assert len(out) == 2 * len(source)

    def test_empty_inputs_rejected(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        with pytest.raises(ValueError):
            augment_dataset(snapshot, DatasetManifest([]), targets, AugmentationConfig(), tmp_path)
        empty = EmbeddingSet(values=np.zeros((0, 256)), source_ids=[])
        with pytest.raises(ValueError):
            augment_dataset(snapshot, source, empty, AugmentationConfig(), tmp_path)

    def test_outputs_are_valid_images(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        out = augment_dataset(
            snapshot, source, targets, AugmentationConfig(k=1, seed=2), tmp_path / "aug"
        )
        for e in out.entries:
            img = load_image(e.image_path)
            assert img.min() >= 0.0 and img.max() <= 1.0


class TestNormalize:
    def test_preserves_size_labels_splits(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        e_bar = mean_embedding(targets)
        out = normalize_dataset(snapshot, source, e_bar, ManipulationConfig(seed=1), tmp_path / "n")
        assert len(out) == len(source)
        for e in out.entries:
            src = source.by_id(e.extra["source_id"])
            assert e.label == src.label and e.split == src.split

    def test_deterministic_bytes(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        e_bar = mean_embedding(targets)
        cfg = ManipulationConfig(seed=5)
        normalize_dataset(snapshot, source, e_bar, cfg, tmp_path / "a")
        normalize_dataset(snapshot, source, e_bar, cfg, tmp_path / "b")
        assert dir_digest(tmp_path / "a") == dir_digest(tmp_path / "b")

    def test_empty_manifest_rejected(self, aug_setup, tmp_path):
        snapshot, _, targets = aug_setup
        with pytest.raises(ValueError):
            normalize_dataset(snapshot, DatasetManifest([]), mean_embedding(targets))


class TestDeploymentIsolation:
    """Augmentation never reads target labels; the normalization model never
    reads target-cohort images at training time."""

    def test_augmentation_ignores_target_labels(self, aug_setup, tmp_path):
        snapshot, source, targets = aug_setup
        # the embedding set carries only ids and vectors; scrubbing ids changes
        # nothing but provenance strings
        scrubbed = EmbeddingSet(
            values=targets.values.copy(),
            source_ids=["anon"] * len(targets),
        )
        cfg = AugmentationConfig(k=1, seed=3)
        a = augment_dataset(snapshot, source, targets, cfg, tmp_path / "a")
        b = augment_dataset(snapshot, source, scrubbed, cfg, tmp_path / "b")
        for ea, eb in zip(a.entries, b.entries):
            assert np.array_equal(load_image(ea.image_path), load_image(eb.image_path))

    def test_normalization_training_never_touches_test_images(
        self, tiny_corpus, tmp_path, monkeypatch
    ):
        manifest, _ = tiny_corpus
        train_set = DatasetManifest(manifest.entries[:10])
        test_set = DatasetManifest(manifest.entries[10:16])

        accessed = []
        real_load = codec.training.load_image

        def logging_load(path):
            accessed.append(str(path))
            return real_load(path)

        monkeypatch.setattr(codec.training, "load_image", logging_load)
        hp = TrainingHyperparams(epochs=1, batch_size=8, resolution=32, seed=0, width=4)
        snapshot, _ = train(train_set, hp)

        test_paths = {str(e.image_path) for e in test_set.entries}
        assert test_paths.isdisjoint(accessed)
        assert len(accessed) == len(train_set)

        # normalization of the test set afterwards is a pure inference pass
        e_bar = mean_embedding(encode_manifest(snapshot, train_set))
        out = normalize_dataset(snapshot, test_set, e_bar, ManipulationConfig(seed=1), tmp_path / "n")
        assert len(out) == len(test_set)
