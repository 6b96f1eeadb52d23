import numpy as np
import pytest

from chromacode.config import ClassifierConfig
from chromacode.core import DatasetManifest, ManifestEntry, load_manifest
from chromacode.synthbench import (
    LesionSpec,
    MarkerSpec,
    SceneRender,
    SceneSpec,
    generate_corpus,
    generate_scene,
    global_colour_distance,
    marker_fidelity,
    masked_perceptual_proxy,
    run_downstream_benchmark,
    sample_scene_spec,
)


def flat_spec(base_tone=0.5, tint=(1.0, 1.0, 1.0), seed=3, markers=(), lesion_radius=0.0):
    return SceneSpec(
        base_tone=base_tone,
        tint=tint,
        lesion=LesionSpec(
            center=(0.5, 0.5), radius=lesion_radius, colour_offset=(0, 0, 0), irregularity=0.0
        ),
        markers=markers,
        texture_seed=seed,
    )


class TestGenerateScene:
    def test_flat_scene_mean_near_base_tone(self):
        render = generate_scene(flat_spec(), 64)
        assert np.abs(render.image.mean(axis=(0, 1)) - 0.5).max() < 0.05

    def test_determinism(self, rng):
        spec = sample_scene_spec(rng, "mixed", marker_count=2)
        a = generate_scene(spec, 64)
        b = generate_scene(spec, 64)
        assert np.array_equal(a.image, b.image)
        assert np.array_equal(a.marker_mask, b.marker_mask)

    def test_tint_scales_channel_means(self):
        tinted = generate_scene(flat_spec(tint=(1.2, 1.0, 0.8)), 64)
        plain = generate_scene(flat_spec(tint=(1.0, 1.0, 1.0)), 64)
        keep = ~tinted.marker_mask
        ratios = tinted.image[keep].mean(axis=0) / plain.image[keep].mean(axis=0)
        assert np.abs(ratios - np.array([1.2, 1.0, 0.8])).max() < 0.05 * 1.2

    def test_masks_reflect_compositing(self, rng):
        spec = sample_scene_spec(rng, "light", marker_count=3)
        render = generate_scene(spec, 64)
        assert render.marker_mask.any()
        assert not (render.marker_mask & render.lesion_mask).any()
        assert render.image.min() >= 0.0 and render.image.max() <= 1.0

    def test_label_from_irregularity(self, rng):
        benign = sample_scene_spec(rng, "light", label="benign")
        malignant = sample_scene_spec(rng, "light", label="malignant")
        assert benign.label == "benign"
        assert malignant.label == "malignant"

    def test_spec_json_round_trip(self, rng):
        spec = sample_scene_spec(rng, "dark", marker_count=2)
        back = SceneSpec.from_json(spec.to_json())
        assert back == spec
        assert np.array_equal(
            generate_scene(back, 32).image, generate_scene(spec, 32).image
        )


class TestGenerateCorpus:
    def test_label_balance(self, tmp_path):
        manifest, renders = generate_corpus(100, "mixed", 5, tmp_path / "c", resolution=32)
        labels = [e.label for e in manifest.entries]
        assert labels.count("benign") == 50
        assert labels.count("malignant") == 50
        assert len(renders) == 100

    def test_deterministic(self, tmp_path):
        m1, _ = generate_corpus(10, "light", 5, tmp_path / "a", resolution=32)
        m2, _ = generate_corpus(10, "light", 5, tmp_path / "b", resolution=32)
        for a, b in zip(m1.entries, m2.entries):
            assert a.id == b.id and a.label == b.label
        img_a = (tmp_path / "a" / "scene-00003.png").read_bytes()
        img_b = (tmp_path / "b" / "scene-00003.png").read_bytes()
        assert img_a == img_b

    def test_domain_luminance_gap(self, tmp_path):
        luma = np.array([0.299, 0.587, 0.114])
        _, light = generate_corpus(60, "light", 8, tmp_path / "l", resolution=32)
        _, dark = generate_corpus(60, "dark", 9, tmp_path / "d", resolution=32)
        mean_l = np.mean([(r.image @ luma).mean() for r in light])
        mean_d = np.mean([(r.image @ luma).mean() for r in dark])
        assert mean_l - mean_d >= 0.2

    def test_invalid_n(self, tmp_path):
        with pytest.raises(ValueError):
            generate_corpus(0, "light", 1, tmp_path / "x")

    def test_manifest_loadable(self, tmp_path):
        generate_corpus(4, "mixed", 3, tmp_path / "c", resolution=32)
        manifest = load_manifest(tmp_path / "c" / "manifest.jsonl")
        assert len(manifest) == 4


class TestGlobalColourDistance:
    def test_identical_is_zero(self, rng):
        img = rng.uniform(size=(8, 8, 3))
        assert global_colour_distance(img, img) == 0.0

    def test_hand_value(self):
        a = np.full((4, 4, 3), 0.2)
        b = np.full((4, 4, 3), 0.5)
        assert global_colour_distance(a, b) == pytest.approx(0.3 * np.sqrt(3.0))

    def test_symmetric(self, rng):
        a, b = rng.uniform(size=(6, 6, 3)), rng.uniform(size=(6, 6, 3))
        assert global_colour_distance(a, b) == pytest.approx(global_colour_distance(b, a))

    def test_empty_exclusion_rejected(self, rng):
        a = rng.uniform(size=(4, 4, 3))
        with pytest.raises(ValueError):
            global_colour_distance(a, a, exclude_mask=np.ones((4, 4), dtype=bool))

    def test_exclusion_changes_result(self):
        a = np.zeros((2, 2, 3))
        a[0, 0] = 1.0
        b = np.zeros((2, 2, 3))
        mask = np.zeros((2, 2), dtype=bool)
        mask[0, 0] = True
        assert global_colour_distance(a, b, exclude_mask=mask) == 0.0
        assert global_colour_distance(a, b) > 0.0


class TestMarkerFidelity:
    def _render_with_marker(self):
        spec = flat_spec(
            markers=(MarkerSpec(shape="disc", position=(0.5, 0.5), size=0.1, colour=(0.1, 0.5, 0.5)),)
        )
        return generate_scene(spec, 32)

    def test_identical_output(self):
        render = self._render_with_marker()
        assert marker_fidelity(render, render.image.copy()) == 0.0

    def test_constant_shift(self):
        render = self._render_with_marker()
        shifted = render.image.copy()
        shifted[render.marker_mask] += 0.1
        assert shifted.max() <= 1.0
        assert marker_fidelity(render, shifted) == pytest.approx(0.1)

    def test_bounded(self, rng):
        render = self._render_with_marker()
        value = marker_fidelity(render, rng.uniform(size=render.image.shape))
        assert 0.0 <= value <= 1.0

    def test_no_markers_rejected(self):
        render = generate_scene(flat_spec(), 32)
        with pytest.raises(ValueError):
            marker_fidelity(render, render.image)


class TestPerceptualProxy:
    def test_identical_is_zero(self, rng):
        img = rng.uniform(size=(16, 16, 3))
        assert masked_perceptual_proxy(img, img) == 0.0

    def test_symmetric(self, rng):
        a, b = rng.uniform(size=(16, 16, 3)), rng.uniform(size=(16, 16, 3))
        assert masked_perceptual_proxy(a, b) == pytest.approx(masked_perceptual_proxy(b, a))

    def test_uniform_hand_value(self):
        a = np.full((16, 16, 3), 0.3)
        b = np.full((16, 16, 3), 0.5)
        assert masked_perceptual_proxy(a, b) == pytest.approx(0.04)

    def test_empty_include_rejected(self, rng):
        a = rng.uniform(size=(16, 16, 3))
        with pytest.raises(ValueError):
            masked_perceptual_proxy(a, a, exclude_mask=np.ones((16, 16), dtype=bool))

    def test_exclusion_weights(self):
        a = np.zeros((8, 8, 3))
        b = np.zeros((8, 8, 3))
        b[:4] = 1.0  # large error in the top half
        mask = np.zeros((8, 8), dtype=bool)
        mask[:4] = True  # exclude it
        assert masked_perceptual_proxy(a, b, exclude_mask=mask) == 0.0


class TestDownstreamBenchmark:
    def _toy_corpus(self, tmp_path, n, separable=True, shuffle_labels=False, seed=0):
        """Trivially separable data: label follows base tone."""
        rng = np.random.default_rng(seed)
        entries = []
        from chromacode.core import save_image

        out = tmp_path
        out.mkdir(exist_ok=True, parents=True)
        for i in range(n):
            label = "benign" if i % 2 == 0 else "malignant"
            tone = rng.uniform(0.1, 0.3) if label == "benign" else rng.uniform(0.7, 0.9)
            render = generate_scene(flat_spec(base_tone=tone, seed=int(rng.integers(1e6))), 32)
            path = out / f"t{i}.png"
            save_image(render.image, path)
            entries.append(ManifestEntry(id=f"t{i}", image_path=path, label=label))
        if shuffle_labels:
            labels = [e.label for e in entries]
            perm = np.random.default_rng(99).permutation(len(labels))
            for e, k in zip(entries, perm):
                e.label = labels[int(k)]
        return DatasetManifest(entries)

    def test_memorization_sanity(self, tmp_path):
        manifest = self._toy_corpus(tmp_path / "sep", 48)
        cfg = ClassifierConfig(epochs=10, batch_size=16, width=8, resolution=32)
        res = run_downstream_benchmark(manifest, manifest, seeds=[0], cfg=cfg)
        assert res["mean_accuracy"] >= 0.95

    def test_shuffled_labels_are_chance(self, tmp_path):
        # real scenes, so no accidental single-axis shortcut separates the
        # balanced test set for an untrained network
        train, _ = generate_corpus(64, "mixed", 31, tmp_path / "tr", resolution=32)
        test, _ = generate_corpus(64, "mixed", 32, tmp_path / "te", resolution=32)
        labels = [e.label for e in train.entries]
        perm = np.random.default_rng(99).permutation(len(labels))
        for e, k in zip(train.entries, perm):
            e.label = labels[int(k)]
        cfg = ClassifierConfig(epochs=10, batch_size=16, width=8, resolution=32)
        res = run_downstream_benchmark(train, test, seeds=[0, 1, 2], cfg=cfg)
        assert abs(res["mean_accuracy"] - 0.5) <= 0.1

    def test_reproducible_under_fixed_seeds(self, tmp_path):
        manifest = self._toy_corpus(tmp_path / "rep", 32)
        cfg = ClassifierConfig(epochs=4, batch_size=16, width=8, resolution=32)
        a = run_downstream_benchmark(manifest, manifest, seeds=[0, 1], cfg=cfg)
        b = run_downstream_benchmark(manifest, manifest, seeds=[0, 1], cfg=cfg)
        assert abs(a["mean_accuracy"] - b["mean_accuracy"]) <= 0.02
        assert a["per_seed"] == b["per_seed"]

    def test_missing_labels_rejected(self, tmp_path):
        manifest = self._toy_corpus(tmp_path / "ml", 8)
        manifest.entries[0].label = None
        cfg = ClassifierConfig(epochs=1, batch_size=8, width=4, resolution=32)
        with pytest.raises(ValueError):
            run_downstream_benchmark(manifest, manifest, seeds=[0], cfg=cfg)
