import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from chromacode.core import (
    DatasetManifest,
    ImageFormatError,
    ManifestEntry,
    ManifestError,
    ShapeError,
    derive_rng,
    ensure_rgb_image,
    load_image,
    load_manifest,
    resize_image,
    save_image,
    save_manifest,
)


def _write_png(path, pixels):
    arr = np.asarray(pixels, dtype=np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


class TestLoadImage:
    def test_zero_maps_to_zero(self, tmp_path):
        _write_png(tmp_path / "a.png", np.zeros((2, 2, 3)))
        img = load_image(tmp_path / "a.png")
        assert img.shape == (2, 2, 3)
        assert np.all(img == 0.0)

    def test_max_maps_to_one(self, tmp_path):
        _write_png(tmp_path / "a.png", np.full((2, 2, 3), 255))
        assert np.all(load_image(tmp_path / "a.png") == 1.0)

    def test_eight_bit_division(self, tmp_path):
        _write_png(tmp_path / "a.png", np.tile([51, 102, 204], (2, 2, 1)))
        img = load_image(tmp_path / "a.png")
        assert np.all(img[..., 0] == 51 / 255)
        assert np.all(img[..., 1] == 102 / 255)
        assert np.all(img[..., 2] == 204 / 255)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "missing.png")

    def test_non_rgb_rejected(self, tmp_path):
        Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").save(tmp_path / "g.png")
        with pytest.raises(ImageFormatError):
            load_image(tmp_path / "g.png")

    def test_non_png_rejected(self, tmp_path):
        Image.fromarray(np.zeros((2, 2, 3), dtype=np.uint8), mode="RGB").save(
            tmp_path / "a.jpg", format="JPEG"
        )
        with pytest.raises(ImageFormatError):
            load_image(tmp_path / "a.jpg")


class TestSaveImage:
    def test_round_trip_quantization_bound(self, tmp_path):
        img = np.full((3, 3, 3), 0.5)
        save_image(img, tmp_path / "a.png")
        back = load_image(tmp_path / "a.png")
        assert np.abs(back - img).max() <= 1 / 510

    def test_zero_exact(self, tmp_path):
        save_image(np.zeros((2, 2, 3)), tmp_path / "a.png")
        assert np.all(load_image(tmp_path / "a.png") == 0.0)

    def test_third_rounds_to_85(self, tmp_path):
        save_image(np.full((2, 2, 3), 1 / 3), tmp_path / "a.png")
        assert np.all(load_image(tmp_path / "a.png") == 85 / 255)

    @given(
        arrays(
            np.float64,
            (4, 5, 3),
            elements=st.floats(0, 1, allow_nan=False, allow_infinity=False),
        )
    )
    def test_round_trip_property(self, img):
        import tempfile, pathlib

        with tempfile.TemporaryDirectory() as d:
            p = pathlib.Path(d) / "x.png"
            save_image(img, p)
            back = load_image(p)
        assert np.abs(back - img).max() <= 1 / 510

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            save_image(np.zeros((2, 2, 3)), tmp_path / "no" / "dir" / "a.png")

    def test_invalid_image_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            save_image(np.full((2, 2, 3), 1.5), tmp_path / "a.png")
        with pytest.raises(ShapeError):
            save_image(np.zeros((2, 2, 4)), tmp_path / "a.png")


class TestManifest:
    def _image(self, tmp_path, name="img.png"):
        _write_png(tmp_path / name, np.zeros((2, 2, 3)))
        return name

    def test_two_entries(self, tmp_path):
        name = self._image(tmp_path)
        lines = [
            {"id": "a", "image_path": name, "label": "benign", "split": "train"},
            {"id": "b", "image_path": name, "label": None, "split": "test"},
        ]
        path = tmp_path / "m.jsonl"
        path.write_text("\n".join(json.dumps(l) for l in lines))
        manifest = load_manifest(path)
        assert len(manifest) == 2
        assert manifest.by_id("a").label == "benign"
        assert manifest.by_id("b").split == "test"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        assert len(load_manifest(path)) == 0

    def test_duplicate_id(self, tmp_path):
        name = self._image(tmp_path)
        line = json.dumps({"id": "a", "image_path": name})
        path = tmp_path / "m.jsonl"
        path.write_text(line + "\n" + line + "\n")
        with pytest.raises(ManifestError, match="2"):
            load_manifest(path)

    def test_malformed_line_reports_number(self, tmp_path):
        name = self._image(tmp_path)
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps({"id": "a", "image_path": name}) + "\n{bad json\n")
        with pytest.raises(ManifestError, match=":2"):
            load_manifest(path)

    def test_unresolvable_path(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps({"id": "a", "image_path": "gone.png"}) + "\n")
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_bad_split(self, tmp_path):
        name = self._image(tmp_path)
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps({"id": "a", "image_path": name, "split": "val"}) + "\n")
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_round_trip_with_extras(self, tmp_path):
        name = self._image(tmp_path)
        manifest = DatasetManifest(
            [
                ManifestEntry(
                    id="a",
                    image_path=tmp_path / name,
                    label="x",
                    split="train",
                    extra={"source_id": "s1", "sample_index": 0},
                )
            ]
        )
        save_manifest(manifest, tmp_path / "m.jsonl")
        back = load_manifest(tmp_path / "m.jsonl")
        assert back.by_id("a").extra == {"source_id": "s1", "sample_index": 0}

    def test_paths_stored_relative(self, tmp_path):
        name = self._image(tmp_path)
        manifest = DatasetManifest([ManifestEntry(id="a", image_path=tmp_path / name)])
        save_manifest(manifest, tmp_path / "m.jsonl")
        raw = (tmp_path / "m.jsonl").read_text()
        assert str(tmp_path) not in raw


class TestResize:
    def test_identity(self):
        img = np.random.default_rng(0).uniform(size=(6, 8, 3))
        out = resize_image(img, 6, 8)
        assert np.array_equal(out, img)

    def test_constant_preserved(self):
        img = np.full((8, 8, 3), 0.25)
        out = resize_image(img, 4, 4)
        assert np.allclose(out, 0.25)

    def test_range_preserved(self):
        img = np.random.default_rng(1).uniform(size=(16, 16, 1))
        out = resize_image(img, 7, 9)
        assert out.min() >= img.min() - 1e-12 and out.max() <= img.max() + 1e-12


def test_ensure_rgb_rejects_bad_shapes():
    with pytest.raises(ShapeError):
        ensure_rgb_image(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        ensure_rgb_image(np.full((2, 2, 3), np.nan))


def test_derive_rng_stable_and_independent():
    a = derive_rng(7, "x", 1).standard_normal(4)
    b = derive_rng(7, "x", 1).standard_normal(4)
    c = derive_rng(7, "x", 2).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
