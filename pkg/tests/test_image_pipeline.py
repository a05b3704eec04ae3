import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal
from PIL import Image

from conftest import three_color_image, three_color_truth
from spectral_gng import diagnostics, image_pipeline
from spectral_gng.config import GngParams, RunConfig
from spectral_gng.errors import InputError
from spectral_gng.eval_metrics import segmentation_covering, vi
from spectral_gng.gng import GngModel
from spectral_gng.image_pipeline import (
    ImageFeatures, LabelImage, assign_pixels, extract_features, load_image, median_filter_3x3, read_label_png,
    run_segmentation, save_label_png, segment_image, training_signals,
)

IMAGE_CONFIG = RunConfig(seed=0, kmeans_restarts=3, gng=GngParams(max_epochs=20))


# ---- extract_features ----

def test_single_black_pixel():
    features = extract_features(np.zeros((1, 1, 3), dtype=np.uint8))
    assert_allclose(features.features, [[0.0, 0.0, 0.0]])


def test_rgbxy_normalizes_position():
    image = np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8)
    features = extract_features(image, "rgbxy")
    assert_allclose(features.features, [[0, 0, 0, 0, 0], [1, 1, 1, 1, 0]])


def test_rgb_mode_shape():
    features = extract_features(np.zeros((4, 5, 3), dtype=np.uint8), "rgb")
    assert features.features.shape == (20, 3)
    assert (features.width, features.height) == (5, 4)


def test_unknown_mode_rejected():
    with pytest.raises(InputError):
        extract_features(np.zeros((2, 2, 3), dtype=np.uint8), "lab")


def test_load_image_png_and_ppm(tmp_path):
    array = np.random.default_rng(0).integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    for name in ("img.png", "img.ppm"):
        Image.fromarray(array).save(tmp_path / name)
        assert_array_equal(load_image(tmp_path / name), array)


def test_undecodable_file(tmp_path):
    path = tmp_path / "broken.png"
    path.write_bytes(b"not an image")
    with pytest.raises(InputError):
        load_image(path)


# ---- assign_pixels ----

def _features(rows):
    rows = np.asarray(rows, dtype=float)
    return ImageFeatures(width=rows.shape[0], height=1, features=rows)


def test_pixel_on_a_neuron_takes_its_label():
    model = GngModel(np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]))
    labels = assign_pixels(model, [4, 7], _features([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]))
    assert labels.labels.tolist() == [[7, 4]]


def test_shared_neuron_label_gives_constant_image():
    model = GngModel(np.random.default_rng(1).uniform(size=(5, 3)))
    labels = assign_pixels(model, [2] * 5, _features(np.random.default_rng(2).uniform(size=(6, 3))))
    assert np.all(labels.labels == 2)


def test_pixel_nearer_second_neuron():
    model = GngModel(np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]))
    assert assign_pixels(model, [0, 1], _features([[0.7, 0.6, 0.8]])).labels[0, 0] == 1


def test_assign_pixels_dimension_mismatch():
    model = GngModel(np.array([[0.0] * 5, [1.0] * 5]))
    with pytest.raises(InputError):
        assign_pixels(model, [0, 1], _features([[0.1, 0.2, 0.3]]))


# ---- median_filter_3x3 ----

def test_uniform_image_unchanged():
    labels = LabelImage.from_array(np.full((4, 4), 3))
    assert_array_equal(median_filter_3x3(labels).labels, labels.labels)


def test_dissenting_pixel_is_replaced():
    grid = np.zeros((5, 5), dtype=int)
    grid[2, 2] = 1
    assert np.all(median_filter_3x3(LabelImage.from_array(grid)).labels == 0)


def test_tie_keeps_center_label():
    grid = np.array([[1, 1, 0], [1, 0, 0], [1, 2, 0]])
    assert median_filter_3x3(LabelImage.from_array(grid)).labels[1, 1] == 0


def test_tie_without_center_takes_lowest_label():
    grid = np.array([[1, 1, 0], [1, 2, 0], [1, 0, 0]])
    assert median_filter_3x3(LabelImage.from_array(grid)).labels[1, 1] == 0


@settings(max_examples=60, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.integers(0, 4)))
def test_median_filter_never_invents_labels(grid):
    smoothed = median_filter_3x3(LabelImage.from_array(grid)).labels
    assert smoothed.shape == grid.shape
    assert set(np.unique(smoothed)) <= set(np.unique(grid))


def test_label_image_shape_is_checked():
    with pytest.raises(InputError):
        LabelImage(width=3, height=2, labels=np.zeros((3, 2), dtype=np.int64))


# ---- label PNG ----

def test_label_png_round_trip(tmp_path):
    labels = LabelImage.from_array(np.arange(12).reshape(3, 4) % 5)
    save_label_png(labels, tmp_path / "labels.png")
    assert_array_equal(read_label_png(tmp_path / "labels.png"), labels.labels)


def test_label_png_beyond_palette(tmp_path):
    labels = LabelImage.from_array(np.array([[0, 300], [1000, 2]]))
    save_label_png(labels, tmp_path / "wide.png")
    assert_array_equal(read_label_png(tmp_path / "wide.png"), labels.labels)


# ---- training signals ----

def test_training_signals_subsample_and_jitter():
    features = extract_features(three_color_image(16))
    config = RunConfig(max_training_pixels=100)
    with diagnostics.collect() as found:
        data = training_signals(features, config)
    assert data.shape == (100, 3)
    assert "downsampled" in [d.code for d in found]
    nearest = np.abs(data[:, None, :] - features.features[None, :, :]).max(axis=2).min(axis=1)
    assert np.all(nearest <= 0.5 / 255 + 1e-12)
    assert_array_equal(training_signals(features, config), data)


# ---- full pipeline ----

@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_three_flat_colors_segment_cleanly(monkeypatch, seed):
    requested = []
    real_train = image_pipeline.train

    def recording_train(data, params):
        requested.append(params.m_target)
        return real_train(data, params)

    monkeypatch.setattr(image_pipeline, "train", recording_train)
    config = IMAGE_CONFIG.model_copy(update={"seed": seed})
    label_image, report = segment_image(three_color_image(64), config, include_timings=False)

    truth = three_color_truth(64)
    assert requested == [100]
    assert (label_image.width, label_image.height) == (64, 64)
    assert report.chosen_k == 3
    assert label_image.k == 3
    assert segmentation_covering(label_image.labels, truth) >= 0.95
    assert vi(label_image.labels, truth) <= 0.2
    assert report.timings is None


def test_segmentation_is_deterministic():
    image = three_color_image(24)
    config = RunConfig(seed=3, m=30, kmeans_restarts=2, gng=GngParams(max_epochs=8))
    first = run_segmentation(image, config)
    second = run_segmentation(image, config)
    assert_array_equal(first.label_image.labels, second.label_image.labels)


def test_single_color_image_is_one_segment():
    image = np.full((10, 12, 3), 128, dtype=np.uint8)
    label_image, report = segment_image(image, IMAGE_CONFIG)
    assert label_image.k == 1
    assert report.segments == 1
    assert "single_cluster" in [d.code for d in report.diagnostics]
    assert (label_image.width, label_image.height) == (12, 10)


def test_three_flat_colors_leave_three_graph_components():
    run = run_segmentation(three_color_image(48), IMAGE_CONFIG)
    assert run.outcome.component_count == 3
    assert run.training_pixels == 48 * 48
    winners = set(np.unique(run.raw_labels.labels).tolist())
    assert winners == set(run.outcome.labels.tolist())


def test_default_training_limit_is_half_a_megapixel():
    assert RunConfig().max_training_pixels == 500_000
    features = extract_features(three_color_image(64))
    with diagnostics.collect() as found:
        data = training_signals(features, RunConfig())
    assert data.shape == (64 * 64, 3)
    assert "downsampled" not in [d.code for d in found]
