"""
Synthetic scenes
"""

import numpy as np
import pytest

from evmotion.errors import InvalidSpecError
from evmotion.events import MotionModel, warp_event_cloud
from evmotion.projection import event_density, project
from evmotion.synth import (SyntheticObject, SyntheticSceneSpec,
                            moving_objects, random_model, synthesize,
                            synthesize_sequence)


def test_identity_scene_is_static(make_scene):
    cloud, labels = synthesize(make_scene(n_segments=3), seed=1)
    assert len(cloud) > 0
    assert labels == []
    # every event sits on a scene point: few distinct positions
    positions = np.unique(np.column_stack([cloud.x, cloud.y]), axis=0)
    assert len(positions) < len(cloud) / 3


def test_events_inside_window_and_sensor(make_scene):
    cloud, _ = synthesize(make_scene(model=(20, -10, 0.1, 0.1)), seed=2)
    assert cloud.t[0] >= cloud.t0 and cloud.t[-1] < cloud.t0 + cloud.dt
    assert np.all(np.diff(cloud.t) >= 0)
    assert np.all((cloud.x >= 0) & (cloud.x < 128))
    assert np.all((cloud.y >= 0) & (cloud.y < 96))
    # whole microseconds
    micros = cloud.t * 1_000_000
    assert np.allclose(micros, np.round(micros), atol=1e-6)


@pytest.mark.parametrize('model', [(8, -4, 0, 0), (0, 0, 0.08, 0),
                                   (0, 0, 0, 0.1), (5, 3, 0.05, -0.05)])
def test_generating_model_collapses_events(make_scene, model):
    cloud, _ = synthesize(make_scene(model=model), seed=3)
    warped = warp_event_cloud(cloud, MotionModel(*model))
    positions = np.round(np.column_stack([warped.x, warped.y]), 6)
    distinct = np.unique(positions, axis=0)
    # each scene point emits several events
    assert len(distinct) < len(cloud) / 3
    at_truth, _ = project(cloud, MotionModel(*model), 0.3)
    at_identity, _ = project(cloud, MotionModel(), 0.3)
    assert event_density(at_truth) > event_density(at_identity)


def test_object_label(make_scene):
    obj = SyntheticObject((40, 30, 20, 20), MotionModel(10, 0, 0, 0))
    cloud, labels = synthesize(make_scene(objects=[obj]), seed=4)
    label, = labels
    assert label.object_id == 1
    assert label.frame_time == pytest.approx(cloud.t0 + cloud.dt)
    assert label.box == pytest.approx((50, 30, 20, 20))


def test_label_clipped_to_sensor(make_scene):
    obj = SyntheticObject((100, 30, 20, 20), MotionModel(20, 0, 0, 0))
    _, labels = synthesize(make_scene(objects=[obj]), seed=5)
    assert labels[0].box == pytest.approx((120, 30, 8, 20))


def test_object_hides_background(make_scene):
    obj = SyntheticObject((40, 30, 20, 20), MotionModel(), texture_density=0)
    spec = make_scene(objects=[obj], n_segments=0, texture_density=0.5,
                      edge_rate=400)
    cloud, _ = synthesize(spec, seed=6)
    inside = ((cloud.x > 40.5) & (cloud.x < 59.5)
              & (cloud.y > 30.5) & (cloud.y < 49.5))
    assert not inside.any()


def test_sequence_labels_follow_objects(make_scene):
    obj = SyntheticObject((10, 40, 12, 12), MotionModel(15, 0, 0, 0))
    slices, labels = synthesize_sequence(make_scene(objects=[obj]), 3, seed=7)
    assert [cloud.t0 for cloud in slices] == pytest.approx([0, 0.025, 0.05])
    assert [label.x for label in labels] == pytest.approx([25, 40, 55])
    assert [label.frame_time for label in labels] == pytest.approx(
        [0.025, 0.05, 0.075])


def test_deterministic(make_scene, moving_square):
    spec = make_scene(model=(3, 1, 0, 0.02), objects=[moving_square()],
                      noise_fraction=0.1)
    first, _ = synthesize(spec, seed=8)
    second, _ = synthesize(spec, seed=8)
    other, _ = synthesize(spec, seed=9)
    assert np.array_equal(first.x, second.x)
    assert np.array_equal(first.t, second.t)
    assert len(first) != len(other) or not np.array_equal(first.x, other.x)


def test_noise_fraction(make_scene):
    clean, _ = synthesize(make_scene(), seed=10)
    noisy, _ = synthesize(make_scene(noise_fraction=0.5), seed=10)
    # the fraction counts signal events that left the sensor too
    added = len(noisy) - len(clean)
    assert 0.5 * len(clean) - 1 <= added <= len(clean)


def test_quantized_coordinates(make_scene):
    cloud, _ = synthesize(make_scene(model=(6, 0, 0, 0), quantize=True),
                          seed=11)
    assert np.array_equal(cloud.x, np.floor(cloud.x))
    assert np.array_equal(cloud.y, np.floor(cloud.y))


@pytest.mark.parametrize('changes', [dict(dt=0), dict(sensor_width=0),
                                     dict(n_segments=0),
                                     dict(segment_length=(5, 1)),
                                     dict(noise_rate=-1),
                                     dict(model=(float('nan'), 0, 0, 0))])
def test_invalid_spec(changes):
    with pytest.raises(InvalidSpecError):
        SyntheticSceneSpec(**changes).validate()


def test_object_outside_sensor():
    obj = SyntheticObject((120, 10, 20, 20))
    with pytest.raises(InvalidSpecError):
        synthesize(SyntheticSceneSpec(objects=(obj,)))


def test_from_dict():
    spec = SyntheticSceneSpec.from_dict({
        'sensor_width': 64, 'sensor_height': 48, 'model': [1, 2, 0, 0],
        'objects': [{'region': [10, 10, 8, 8], 'model': [5, 0, 0, 0]}]})
    assert spec.model == MotionModel(1, 2, 0, 0)
    assert spec.objects[0].region == (10.0, 10.0, 8.0, 8.0)
    assert spec.objects[0].texture_density == 0.6
    with pytest.raises(InvalidSpecError):
        SyntheticSceneSpec.from_dict({'colour': 'red'})


def test_helpers(make_scene):
    rng = np.random.default_rng(0)
    model = random_model(rng, translation=5, expansion=0.01, rotation=0.02)
    assert abs(model.h_x) <= 5 and abs(model.theta) <= 0.02
    spec = make_scene()
    objects = moving_objects(3, 12, 15, spec, rng)
    assert len(objects) == 3
    for obj in objects:
        x, y, w, h = obj.region
        assert 0 <= x and x + w <= 128 and 0 <= y and y + h <= 96
        assert np.hypot(obj.model.h_x, obj.model.h_y) == pytest.approx(15)
    # fits the sensor
    SyntheticSceneSpec(objects=tuple(objects)).validate()
