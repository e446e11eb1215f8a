"""
Seeded runs over many synthetic scenes, and a run on a recorded dataset
when one is supplied (deselected by default; run them with
`pytest -m slow`).
"""

import os

import numpy as np
import pytest

from evmotion.cli import main
from evmotion.compensation import OptimizerConfig, compensate
from evmotion.config import RunConfig
from evmotion.errors import EXIT_OK
from evmotion.evaluate import coverage, evaluate_success_rate
from evmotion.eventfile import read_labels, read_records
from evmotion.events import MotionModel
from evmotion.pipeline import Pipeline, box_to_sensor
from evmotion.synth import (SyntheticSceneSpec, moving_objects,
                            random_model, synthesize, synthesize_sequence)

pytestmark = pytest.mark.slow

N_SCENES = 100
# one time-image bin (sensor pixel) for translations
TRANSLATION_TOLERANCE = 1.0
MODEL_TOLERANCE = 0.02


def recovered(model: MotionModel, truth: MotionModel) -> bool:
    return (abs(model.h_x - truth.h_x) <= TRANSLATION_TOLERANCE
            and abs(model.h_y - truth.h_y) <= TRANSLATION_TOLERANCE
            and abs(model.h_z - truth.h_z) <= MODEL_TOLERANCE
            and abs(model.theta - truth.theta) <= MODEL_TOLERANCE)


def run_scenes(noise_fraction=None):
    outcomes = []
    for seed in range(N_SCENES):
        rng = np.random.default_rng(1000 + seed)
        truth = random_model(rng, translation=10, expansion=0.1, rotation=0.1)
        spec = SyntheticSceneSpec(model=truth, n_segments=12,
                                  noise_fraction=noise_fraction)
        cloud, _ = synthesize(spec, seed=seed)
        result = compensate(cloud, MotionModel(), OptimizerConfig())
        outcomes.append((truth, result))
    return outcomes


@pytest.fixture(scope='module')
def noiseless():
    "Shared by the recovery, monotonicity and budget checks"
    return run_scenes()


def test_recovery_without_noise(noiseless):
    hits = sum(recovered(result.model, truth) for truth, result in noiseless)
    assert hits >= 95


def test_recovery_with_noise():
    outcomes = run_scenes(noise_fraction=0.1)
    hits = sum(recovered(result.model, truth) for truth, result in outcomes)
    assert hits >= 85


def test_density_strictly_increasing(noiseless):
    for _, result in noiseless:
        assert np.all(np.diff(result.density_history) > 0)


def test_coarse_iteration_budget(noiseless):
    quick = sum(result.iterations_coarse <= 30 for _, result in noiseless)
    assert quick >= 0.9 * len(noiseless)


def test_detection(make_scene):
    good = total = 0
    for seed in range(30):
        rng = np.random.default_rng(2000 + seed)
        spec = make_scene()
        objects = moving_objects(1 + seed % 3, 12, 15, spec, rng)
        cloud, labels = synthesize(make_scene(objects=objects), seed=seed)
        pipeline = Pipeline()
        result = pipeline.compensate_slice(cloud)
        found = pipeline.detect_objects(cloud, result)
        boxes = [box_to_sensor(obj.bbox, obj.bin_size, cloud, result.model)
                 for obj in found]
        covered = all(any(coverage(box, label.box) >= 0.5 for box in boxes)
                      for label in labels)
        total += 1
        good += len(found) == len(labels) and covered
    assert good >= 0.85 * total


def test_single_object_tracked(make_scene, moving_square):
    spec = make_scene(model=(2, 0, 0, 0), objects=[moving_square(x=10)])
    slices, labels = synthesize_sequence(spec, 6, seed=3)
    pipeline = Pipeline(RunConfig.defaults().merge({'min_object_events': 10}))
    records = []
    for cloud in slices:
        records.extend(pipeline.process_slice(cloud).records)
    assert len({record.track_id for record in records}) == 1
    assert evaluate_success_rate(records, labels) >= 90


def test_two_objects_keep_their_ids(make_scene, moving_square):
    first = moving_square(x=10, y=15)
    second = moving_square(x=106, y=65, speed=-15)
    slices, _ = synthesize_sequence(make_scene(objects=[first, second]), 5,
                                    seed=4)
    pipeline = Pipeline()
    lanes = {}
    for cloud in slices:
        for record in pipeline.process_slice(cloud).records:
            lane = record.cy < 48
            assert lanes.setdefault(record.track_id, lane) == lane
    assert len(lanes) >= 2


# ------------------------------------------
# Recorded dataset (supplied externally)
# ------------------------------------------

EED_EVENTS = os.environ.get('EVMOTION_EED_EVENTS')
EED_LABELS = os.environ.get('EVMOTION_EED_LABELS')
# published success rate on the "Multiple objects" sequence
EED_SUCCESS_RATE = 87.32


@pytest.mark.skipif(not (EED_EVENTS and EED_LABELS),
                    reason="set EVMOTION_EED_EVENTS and EVMOTION_EED_LABELS "
                           "to the 'Multiple objects' recording and labels")
def test_dataset_success_rate(tmp_path):
    tracks = tmp_path / 'tracks.txt'
    assert main(['track', EED_EVENTS, '-o', str(tracks)]) == EXIT_OK
    rate = evaluate_success_rate(read_records(tracks),
                                 read_labels(EED_LABELS))
    assert abs(rate - EED_SUCCESS_RATE) <= 15
