"""
Shared fixtures: small synthetic scenes (128 x 96 sensor) and
hand-built time images.
"""

import os

import numpy as np
import pytest

from evmotion.compensation import OptimizerConfig
from evmotion.events import MotionModel
from evmotion.projection import TimeImage
from evmotion.synth import SyntheticObject, SyntheticSceneSpec

SCENES_DIR = os.path.join(os.path.dirname(__file__), 'scenes')


@pytest.fixture
def scenes_dir():
    return SCENES_DIR


@pytest.fixture
def optimizer():
    return OptimizerConfig()


@pytest.fixture
def make_scene():
    "Factory of scene specs with test-friendly defaults"
    def make(model=(0, 0, 0, 0), objects=(), **kwargs):
        kwargs.setdefault('sensor_width', 128)
        kwargs.setdefault('sensor_height', 96)
        kwargs.setdefault('n_segments', 12)
        return SyntheticSceneSpec(model=MotionModel(*model),
                                  objects=tuple(objects), **kwargs)
    return make


@pytest.fixture
def moving_square():
    "12 px square moving 15 px per slice to the right"
    def make(x=20.0, y=40.0, speed=15.0, size=12.0):
        return SyntheticObject((x, y, size, size),
                               MotionModel(speed, 0.0, 0.0, 0.0))
    return make


@pytest.fixture
def make_time_image():
    "Time image from a mean-timestamp array (NaN = empty bin)"
    def make(mean, bin_size=1.0, events_per_bin=10):
        mean = np.asarray(mean, dtype=np.float64)
        occupied = ~np.isnan(mean)
        counts = np.where(occupied, events_per_bin, 0).astype(np.int64)
        sums = np.where(occupied, np.nan_to_num(mean) * events_per_bin, 0.0)
        return TimeImage(counts, sums, bin_size)
    return make
