import json

import numpy as np
import pytest
from PIL import Image

from logoreveal import document as dm
from logoreveal.fixtures import shape_image


def write_manifest(tmp_path, manifest, images):
    for name, array in images.items():
        dm.save_png(tmp_path / name, array)
    path = tmp_path / "project.json"
    path.write_text(json.dumps(manifest), encoding="utf-8")
    return path


def opaque(w, h, color=(200, 0, 0, 255)):
    return shape_image(w, h, color)


def test_load_assigns_z_from_list_order(tmp_path):
    manifest = {
        "canvas": {"width": 100, "height": 80},
        "layers": [
            {"id": "one", "kind": "image", "bbox": {"left": 0, "top": 0, "width": 10, "height": 10}, "image": "one.png"},
            {"id": "two", "kind": "image", "bbox": {"left": 5, "top": 5, "width": 10, "height": 10}, "image": "two.png"},
        ],
    }
    path = write_manifest(tmp_path, manifest, {"one.png": opaque(10, 10), "two.png": opaque(10, 10)})
    doc = dm.load_project(path)
    assert [l.z_index for l in doc.layers] == [0, 1]


def test_missing_image_error(tmp_path):
    manifest = {
        "canvas": {"width": 100, "height": 80},
        "layers": [{"id": "ghost", "kind": "image", "bbox": {"left": 0, "top": 0, "width": 10, "height": 10}, "image": "nope.png"}],
    }
    path = write_manifest(tmp_path, manifest, {})
    with pytest.raises(dm.MissingImage):
        dm.load_project(path)


def test_duplicate_id_error(tmp_path):
    manifest = {
        "canvas": {"width": 100, "height": 80},
        "layers": [
            {"id": "dup", "kind": "image", "bbox": {"left": 0, "top": 0, "width": 10, "height": 10}, "image": "a.png"},
            {"id": "dup", "kind": "image", "bbox": {"left": 1, "top": 1, "width": 10, "height": 10}, "image": "a.png"},
        ],
    }
    path = write_manifest(tmp_path, manifest, {"a.png": opaque(10, 10)})
    with pytest.raises(dm.DuplicateId):
        dm.load_project(path)


def test_bbox_bleed_zone_enforced(tmp_path):
    manifest = {
        "canvas": {"width": 100, "height": 80},
        "layers": [{"id": "far", "kind": "image", "bbox": {"left": 500, "top": 0, "width": 10, "height": 10}, "image": "a.png"}],
    }
    path = write_manifest(tmp_path, manifest, {"a.png": opaque(10, 10)})
    with pytest.raises(dm.BadDimensions):
        dm.load_project(path)


def test_text_layer_requires_alt_text(tmp_path):
    manifest = {
        "canvas": {"width": 100, "height": 80},
        "layers": [{"id": "w", "kind": "text-word", "bbox": {"left": 0, "top": 0, "width": 10, "height": 10}, "image": "a.png"}],
    }
    path = write_manifest(tmp_path, manifest, {"a.png": opaque(10, 10)})
    with pytest.raises(dm.ManifestError):
        dm.load_project(path)


def test_text_letter_layers_load_like_cat_club(tmp_path):
    letters = [
        {"id": f"t{i}", "kind": "text-letter", "alt_text": c,
         "bbox": {"left": 10 * i, "top": 60, "width": 8, "height": 10}, "image": f"t{i}.png"}
        for i, c in enumerate("CAT")
    ]
    manifest = {
        "canvas": {"width": 100, "height": 80},
        "title": "cat club",
        "layers": [
            {"id": "bgd", "kind": "image", "bbox": {"left": 0, "top": 0, "width": 100, "height": 80}, "image": "bg.png"},
            {"id": "cat", "kind": "image", "bbox": {"left": 30, "top": 10, "width": 40, "height": 40}, "image": "cat.png"},
            *letters,
        ],
    }
    images = {"bg.png": opaque(100, 80), "cat.png": opaque(40, 40)}
    images.update({f"t{i}.png": opaque(8, 10) for i in range(3)})
    doc = dm.load_project(write_manifest(tmp_path, manifest, images))
    assert [l.kind for l in doc.layers] == ["image", "image", "text-letter", "text-letter", "text-letter"]
    assert [l.alt_text for l in doc.layers if l.kind == "text-letter"] == ["C", "A", "T"]


def test_generated_ids_are_deterministic(tmp_path):
    manifest = {
        "canvas": {"width": 100, "height": 80},
        "layers": [
            {"kind": "image", "bbox": {"left": 0, "top": 0, "width": 10, "height": 10}, "image": "a.png"},
            {"kind": "image", "bbox": {"left": 5, "top": 5, "width": 10, "height": 10}, "image": "a.png"},
        ],
    }
    path = write_manifest(tmp_path, manifest, {"a.png": opaque(10, 10)})
    ids_first = [l.id for l in dm.load_project(path).layers]
    ids_second = [l.id for l in dm.load_project(path).layers]
    assert ids_first == ids_second
    assert len(set(ids_first)) == 2
    assert ids_first != [l.id for l in dm.load_project(path, id_seed=7).layers]


def test_omitted_bbox_uses_alpha_tight_crop(tmp_path):
    canvas_sized = np.zeros((80, 100, 4), dtype=np.uint8)
    canvas_sized[20:50, 30:70] = (10, 200, 30, 255)
    manifest = {
        "canvas": {"width": 100, "height": 80},
        "layers": [{"id": "blob", "kind": "image", "image": "blob.png"}],
    }
    path = write_manifest(tmp_path, manifest, {"blob.png": canvas_sized})
    doc = dm.load_project(path)
    layer = doc.layers[0]
    assert (layer.bbox.left, layer.bbox.top, layer.bbox.width, layer.bbox.height) == (30, 20, 40, 30)
    assert layer.image.shape == (30, 40, 4)  # cropped in memory


# --- tight_bbox ---------------------------------------------------------------------


def test_tight_bbox_full_coverage():
    assert dm.tight_bbox(opaque(100, 50)) == dm.BoundingBox(0, 0, 100, 50)


def test_tight_bbox_single_pixel():
    img = np.zeros((20, 20, 4), dtype=np.uint8)
    img[7, 3] = (255, 255, 255, 255)
    assert dm.tight_bbox(img) == dm.BoundingBox(3, 7, 1, 1)


def test_tight_bbox_transparent_raises():
    with pytest.raises(dm.EmptyLayer):
        dm.tight_bbox(np.zeros((10, 10, 4), dtype=np.uint8))


def test_tight_bbox_idempotent_on_cropped(tmp_path):
    img = np.zeros((40, 60, 4), dtype=np.uint8)
    img[10:30, 20:50] = (0, 0, 255, 255)
    cropped, box = dm.crop_to_alpha(img)
    assert dm.tight_bbox(cropped) == dm.BoundingBox(0, 0, box.width, box.height)


# --- magnified_view ------------------------------------------------------------------


def _layer_with_image(img):
    return dm.Layer(
        id="x", kind="image", bbox=dm.BoundingBox(0, 0, img.shape[1], img.shape[0]),
        z_index=0, image=img,
    )


def test_magnified_view_aspect_fit_wide():
    # 100x50 -> scale 5.12 -> content 512x256 centered with 128px margins
    view = dm.magnified_view(_layer_with_image(opaque(100, 50)), size=512)
    assert view.shape == (512, 512, 4)
    alpha = view[:, :, 3]
    ys, xs = np.nonzero(alpha)
    assert (xs.min(), xs.max(), ys.min(), ys.max()) == (0, 511, 128, 383)
    # reference oracle: PIL resize of the same crop
    ref = np.asarray(
        Image.fromarray(opaque(100, 50), "RGBA").resize((512, 256), Image.LANCZOS), dtype=np.uint8
    )
    assert np.array_equal(view[128:384, :, :], ref)


def test_magnified_view_identity_512():
    img = shape_image(512, 512, (10, 20, 30, 255), "circle")
    view = dm.magnified_view(_layer_with_image(img), size=512)
    assert np.array_equal(view, img)


def test_magnified_view_downscale():
    view = dm.magnified_view(_layer_with_image(opaque(1024, 1024)), size=512)
    assert view.shape == (512, 512, 4)
    assert view[:, :, 3].min() == 255  # fills the square exactly


def test_magnified_view_preserves_aspect_within_a_pixel():
    img = opaque(37, 101)
    view = dm.magnified_view(_layer_with_image(img), size=512)
    alpha = view[:, :, 3]
    ys, xs = np.nonzero(alpha)
    content_w = xs.max() - xs.min() + 1
    content_h = ys.max() - ys.min() + 1
    assert abs(content_w - content_h * 37 / 101) <= 1.0


def test_ingest_directory(tmp_path):
    dm.save_png(tmp_path / "01_bg.png", opaque(64, 48))
    dm.save_png(tmp_path / "02_mark.png", opaque(20, 20))
    manifest = dm.ingest_directory(tmp_path)
    assert manifest["canvas"] == {"width": 64, "height": 48}
    assert [l["id"] for l in manifest["layers"]] == ["01_bg", "02_mark"]
