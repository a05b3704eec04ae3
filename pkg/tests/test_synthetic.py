import numpy as np
import pytest
from numpy.testing import assert_array_equal

from spectral_gng.errors import InputError
from spectral_gng.synthetic import SyntheticParams, gen_synthetic


def test_rings_have_requested_radii():
    params = SyntheticParams(radii=(1.0, 3.0, 5.0), width=0.2)
    points, labels = gen_synthetic("rings", params, seed=0)
    assert points.shape == (900, 2)
    assert_array_equal(np.bincount(labels), [300, 300, 300])
    radius = np.linalg.norm(points, axis=1)
    for label, expected in enumerate(params.radii):
        ring = radius[labels == label]
        assert np.all(np.abs(ring - expected) <= 0.1 + 1e-12)


def test_same_seed_same_points():
    first = gen_synthetic("rings", seed=11)
    second = gen_synthetic("rings", seed=11)
    assert_array_equal(first[0], second[0])
    assert_array_equal(first[1], second[1])
    assert not np.array_equal(first[0], gen_synthetic("rings", seed=12)[0])


def test_well_separated_blobs_match_nearest_center():
    params = SyntheticParams(centers=((0.0, 0.0), (10.0, 0.0)), sigma=1.0, count=200)
    points, labels = gen_synthetic("blobs", params, seed=3)
    centers = np.asarray(params.centers)
    nearest = np.argmin(np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2), axis=1)
    assert_array_equal(nearest, labels)


def test_rings_with_noise_appends_noise_points():
    points, labels = gen_synthetic("rings_with_noise", SyntheticParams(noise_count=60), seed=0)
    assert points.shape == (960, 2)
    assert labels.shape == (960,)
    assert set(np.unique(labels)) == {0, 1, 2}


def test_bad_count_is_rejected():
    with pytest.raises(ValueError):
        SyntheticParams(count=0)


def test_unknown_kind_is_rejected():
    with pytest.raises(InputError):
        gen_synthetic("spirals")
