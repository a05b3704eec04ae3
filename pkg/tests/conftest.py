import logging

import numpy as np
import pytest

from spectral_gng.config import GngParams, RunConfig
from spectral_gng.gng import GngModel
from spectral_gng.pipeline import cluster_points
from spectral_gng.synthetic import gen_synthetic


@pytest.fixture(autouse=True)
def _restore_root_logging():
    """The CLI reconfigures the root logger; put pytest's handlers back afterwards."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for handler in root.handlers[:]:
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)


@pytest.fixture(scope="session")
def rings():
    return gen_synthetic("rings", seed=0)


@pytest.fixture(scope="session")
def fast_config():
    return RunConfig(m=32, kmeans_restarts=3, gng=GngParams(max_epochs=40))


@pytest.fixture(scope="session")
def rings_clustering(rings, fast_config):
    points, _ = rings
    return cluster_points(points, fast_config)


def chain_model(positions, edges) -> GngModel:
    return GngModel.from_edges(np.asarray(positions, dtype=float), edges)


def three_color_image(size: int = 64) -> np.ndarray:
    """Left band red, middle band green, right band blue"""
    image = np.zeros((size, size, 3), dtype=np.uint8)
    third = size // 3
    image[:, :third] = (220, 30, 30)
    image[:, third:2 * third] = (30, 200, 40)
    image[:, 2 * third:] = (20, 40, 230)
    return image


def three_color_truth(size: int = 64) -> np.ndarray:
    truth = np.zeros((size, size), dtype=np.int64)
    third = size // 3
    truth[:, third:2 * third] = 1
    truth[:, 2 * third:] = 2
    return truth
