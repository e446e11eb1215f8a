"""
Synthetic event clouds with known motion.

Scene points (background edges, object outlines and texture) are moved
along the trajectories a motion model induces, so that warping the
events with that same model collapses each point's events back onto
the point. Every slice comes with the ground-truth boxes of its objects
at the slice end.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from evmotion.errors import InvalidArgumentError, InvalidSpecError
from evmotion.eventfile import GroundTruthRecord
from evmotion.events import EventSlice, MotionModel, unwarp_points

MICROSECONDS = 1_000_000


@dataclass(frozen=True)
class SyntheticObject:
    "An independently moving rectangle with its own motion"
    # region (x, y, w, h) in sensor pixels at the start of the first slice
    region: Tuple[float, float, float, float]
    model: MotionModel = MotionModel()
    # interior texture points per square pixel
    texture_density: float = 0.6

    @classmethod
    def from_dict(cls, data: dict) -> 'SyntheticObject':
        return cls(region=tuple(float(v) for v in data['region']),
                   model=MotionModel(*data.get('model', (0, 0, 0, 0))),
                   texture_density=float(data.get('texture_density', 0.6)))


@dataclass(frozen=True)
class SyntheticSceneSpec:
    "Everything needed to generate a scene"
    sensor_width: int = 128
    sensor_height: int = 96
    dt: float = 0.025
    t_start: float = 0.0
    # background motion
    model: MotionModel = MotionModel()
    # background pattern: random line segments plus random texture points
    n_segments: int = 16
    segment_length: Tuple[float, float] = (10.0, 40.0)
    texture_density: float = 0.0
    edge_spacing: float = 0.5
    # events per second emitted by every scene point
    edge_rate: float = 600.0
    # uniform noise: events per second, or a fraction of the signal events
    noise_rate: float = 0.0
    noise_fraction: Optional[float] = None
    objects: Tuple[SyntheticObject, ...] = field(default=())
    quantize: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'model', MotionModel(*self.model))
        object.__setattr__(self, 'objects', tuple(self.objects))
        object.__setattr__(self, 'segment_length',
                           tuple(self.segment_length))

    @classmethod
    def from_dict(cls, data: dict) -> 'SyntheticSceneSpec':
        "Build a spec from a (YAML) mapping"
        data = dict(data)
        if 'model' in data:
            data['model'] = MotionModel(*data['model'])
        data['objects'] = tuple(SyntheticObject.from_dict(obj)
                                for obj in data.get('objects') or ())
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidSpecError("Unknown scene fields: %s"
                                   % ', '.join(sorted(unknown)))
        return cls(**data)

    def validate(self):
        "Raise InvalidSpecError if the scene cannot be generated"
        if self.sensor_width <= 0 or self.sensor_height <= 0:
            raise InvalidSpecError("Sensor dimensions must be positive")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidSpecError("dt must be > 0")
        if round(self.dt * MICROSECONDS) < 1:
            raise InvalidSpecError("dt is shorter than a microsecond")
        if not self.model.is_finite():
            raise InvalidSpecError("Background model is not finite")
        if self.n_segments <= 0 and self.texture_density <= 0:
            raise InvalidSpecError("Empty background pattern")
        if self.n_segments < 0 or self.texture_density < 0:
            raise InvalidSpecError("Pattern sizes must be >= 0")
        low, high = self.segment_length
        if not 0 < low <= high:
            raise InvalidSpecError("Bad segment length range %s"
                                   % (self.segment_length,))
        if self.edge_spacing <= 0 or self.edge_rate <= 0:
            raise InvalidSpecError("edge_spacing and edge_rate must be > 0")
        if self.noise_rate < 0 or (self.noise_fraction or 0) < 0:
            raise InvalidSpecError("Noise must be >= 0")
        for obj in self.objects:
            x, y, w, h = obj.region
            if not obj.model.is_finite():
                raise InvalidSpecError("Object model is not finite")
            if w <= 0 or h <= 0 or x < 0 or y < 0 \
                    or x + w > self.sensor_width or y + h > self.sensor_height:
                raise InvalidSpecError("Object region %s outside the sensor"
                                       % (obj.region,))
            if obj.texture_density < 0:
                raise InvalidSpecError("Object texture density must be >= 0")
        return self

    @property
    def center(self) -> Tuple[float, float]:
        return (self.sensor_width / 2, self.sensor_height / 2)


# ------------------------------------------
# Scene points
# ------------------------------------------

def _segment_points(spec: SyntheticSceneSpec, rng) -> np.ndarray:
    "Points sampled along random line segments"
    points = []
    low, high = spec.segment_length
    for _ in range(spec.n_segments):
        x0 = rng.uniform(0, spec.sensor_width)
        y0 = rng.uniform(0, spec.sensor_height)
        length = rng.uniform(low, high)
        angle = rng.uniform(0, math.pi)
        steps = np.arange(0, length, spec.edge_spacing)
        points.append(np.column_stack([x0 + steps * math.cos(angle),
                                       y0 + steps * math.sin(angle)]))
    return np.concatenate(points) if points else np.empty((0, 2))


def _texture_points(density: float, x: float, y: float, w: float, h: float,
                    rng) -> np.ndarray:
    count = rng.poisson(density * w * h)
    return np.column_stack([rng.uniform(x, x + w, count),
                            rng.uniform(y, y + h, count)])


def _outline_points(region, spacing: float) -> np.ndarray:
    x, y, w, h = region
    top = np.arange(0, w, spacing)
    side = np.arange(0, h, spacing)
    return np.concatenate([
        np.column_stack([x + top, np.full(len(top), y)]),
        np.column_stack([np.full(len(side), x + w), y + side]),
        np.column_stack([x + w - top, np.full(len(top), y + h)]),
        np.column_stack([np.full(len(side), x), y + h - side]),
    ])


def _background_points(spec: SyntheticSceneSpec, rng) -> np.ndarray:
    points = [_segment_points(spec, rng)]
    if spec.texture_density > 0:
        points.append(_texture_points(spec.texture_density, 0, 0,
                                      spec.sensor_width, spec.sensor_height,
                                      rng))
    return np.concatenate(points)


def _object_points(spec: SyntheticSceneSpec, obj: SyntheticObject,
                   rng) -> np.ndarray:
    return np.concatenate([_outline_points(obj.region, spec.edge_spacing),
                           _texture_points(obj.texture_density, *obj.region,
                                           rng)])


def _corners(region) -> np.ndarray:
    x, y, w, h = region
    return np.array([[x, y], [x + w, y], [x + w, y + h], [x, y + h]],
                    dtype=np.float64)


def _hull(points: np.ndarray) -> Tuple[float, float, float, float]:
    low = points.min(axis=0)
    high = points.max(axis=0)
    return (low[0], low[1], high[0] - low[0], high[1] - low[1])


def _advance(points: np.ndarray, model: MotionModel, center) -> np.ndarray:
    "Positions at the end of a slice"
    x, y = unwarp_points(points[:, 0], points[:, 1], 1.0, model, center)
    return np.column_stack([x, y])


# ------------------------------------------
# Events
# ------------------------------------------

class _Emitter:
    "Events of one slice, collected then sorted"

    def __init__(self, spec: SyntheticSceneSpec, rng, t0_us: int, dt_us: int):
        self.spec = spec
        self.rng = rng
        self.t0_us = t0_us
        self.dt_us = dt_us
        self.t0 = t0_us / MICROSECONDS
        self.dt = dt_us / MICROSECONDS
        self.columns = []

    def _times(self, count: int) -> np.ndarray:
        offsets = self.rng.integers(0, self.dt_us, count)
        return (self.t0_us + offsets) / MICROSECONDS

    def emit(self, points: np.ndarray, model: MotionModel):
        "Events of scene points moving with a model"
        per_point = self.rng.poisson(self.spec.edge_rate * self.dt, len(points))
        origin = np.repeat(points, per_point, axis=0)
        t = self._times(len(origin))
        t_hat = (t - self.t0) / self.dt
        x, y = unwarp_points(origin[:, 0], origin[:, 1], t_hat, model,
                             self.spec.center)
        self.columns.append((t, x, y))
        return len(t)

    def emit_noise(self, count: int):
        t = self._times(count)
        x = self.rng.uniform(0, self.spec.sensor_width, count)
        y = self.rng.uniform(0, self.spec.sensor_height, count)
        self.columns.append((t, x, y))

    def build(self) -> EventSlice:
        t, x, y = (np.concatenate(column) for column in zip(*self.columns))
        if self.spec.quantize:
            x = np.floor(x)
            y = np.floor(y)
        width, height = self.spec.sensor_width, self.spec.sensor_height
        on_sensor = (x >= 0) & (x < width) & (y >= 0) & (y < height)
        t, x, y = t[on_sensor], x[on_sensor], y[on_sensor]
        order = np.argsort(t, kind='stable')
        polarity = self.rng.integers(0, 2, len(order))
        return EventSlice(t[order], x[order], y[order], polarity,
                          self.t0, self.dt, width, height)


def _inside_any(points: np.ndarray, regions) -> np.ndarray:
    hidden = np.zeros(len(points), dtype=bool)
    for x, y, w, h in regions:
        hidden |= ((points[:, 0] >= x) & (points[:, 0] <= x + w)
                   & (points[:, 1] >= y) & (points[:, 1] <= y + h))
    return hidden


def synthesize_sequence(spec: SyntheticSceneSpec, n_slices: int = 1,
                        seed: int = 0
                        ) -> Tuple[List[EventSlice], List[GroundTruthRecord]]:
    """
    Consecutive slices of one scene. The background pattern is laid out
    anew (same points) at the start of every slice; objects keep moving
    with their own models from slice to slice and hide the background
    edges inside the region they sweep.
    """
    spec.validate()
    if n_slices < 1:
        raise InvalidArgumentError("n_slices must be >= 1")
    rng = np.random.default_rng(seed)
    background = _background_points(spec, rng)
    objects = [_object_points(spec, obj, rng) for obj in spec.objects]
    corners = [_corners(obj.region) for obj in spec.objects]
    dt_us = int(round(spec.dt * MICROSECONDS))
    start_us = int(round(spec.t_start * MICROSECONDS))

    slices, labels = [], []
    for index in range(n_slices):
        emitter = _Emitter(spec, rng, start_us + index * dt_us, dt_us)
        ends = [_advance(c, obj.model, spec.center)
                for c, obj in zip(corners, spec.objects)]
        swept = [_hull(np.concatenate([start, end]))
                 for start, end in zip(corners, ends)]
        visible = background[~_inside_any(background, swept)]
        signal = emitter.emit(visible, spec.model)
        for points, obj in zip(objects, spec.objects):
            signal += emitter.emit(points, obj.model)
        if spec.noise_fraction is not None:
            noise = int(round(spec.noise_fraction * signal))
        else:
            noise = rng.poisson(spec.noise_rate * emitter.dt)
        emitter.emit_noise(noise)
        slices.append(emitter.build())

        frame_time = (start_us + (index + 1) * dt_us) / MICROSECONDS
        for object_id, end in enumerate(ends, start=1):
            box = _clip(_hull(end), spec)
            if box is not None:
                labels.append(GroundTruthRecord(frame_time, object_id, *box))
        objects = [_advance(points, obj.model, spec.center)
                   for points, obj in zip(objects, spec.objects)]
        corners = ends
    return slices, labels


def synthesize(spec: SyntheticSceneSpec, seed: int = 0
               ) -> Tuple[EventSlice, List[GroundTruthRecord]]:
    "A single slice and the ground-truth boxes at its end"
    slices, labels = synthesize_sequence(spec, 1, seed)
    return slices[0], labels


def _clip(box, spec: SyntheticSceneSpec):
    x, y, w, h = box
    x0, y0 = max(x, 0.0), max(y, 0.0)
    x1 = min(x + w, spec.sensor_width)
    y1 = min(y + h, spec.sensor_height)
    if x1 <= x0 or y1 <= y0:
        return None
    return (float(x0), float(y0), float(x1 - x0), float(y1 - y0))


def random_model(rng, translation: float = 10.0, expansion: float = 0.1,
                 rotation: float = 0.1) -> MotionModel:
    "A background model drawn uniformly from the given ranges"
    return MotionModel(rng.uniform(-translation, translation),
                       rng.uniform(-translation, translation),
                       rng.uniform(-expansion, expansion),
                       rng.uniform(-rotation, rotation))


def moving_objects(count: int, size: float, speed: float,
                   spec: SyntheticSceneSpec, rng) -> Sequence[SyntheticObject]:
    """
    Square objects spread across the sensor, each translating `speed`
    sensor pixels per slice in a random direction.
    """
    objects = []
    for index in range(count):
        x = (index + 0.5) * spec.sensor_width / count - size / 2
        y = rng.uniform(0.25, 0.75) * spec.sensor_height - size / 2
        x = min(max(x, 0.0), spec.sensor_width - size)
        y = min(max(y, 0.0), spec.sensor_height - size)
        angle = rng.uniform(0, 2 * math.pi)
        objects.append(SyntheticObject(
            (x, y, size, size),
            MotionModel(speed * math.cos(angle), speed * math.sin(angle))))
    return objects
