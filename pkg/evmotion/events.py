"""
Events, event slices and the 4-parameter motion model.

A motion model M = (h_x, h_y, h_z, theta) describes how the camera motion
displaces events across one slice: a shift parallel to the image plane,
an expansion (motion towards the image plane) and a rotation about the
optical axis. Warping maps an event observed at normalized time
t_hat = (t - t0) / dt back to where it would have been seen at t0:

    q  = (x, y) - center
    x' = (x, y) - t_hat * [ (h_x, h_y) + (1 + h_z) * R(theta) q - q ]

Timestamps and polarities are never modified.
"""

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from evmotion.errors import InvalidArgumentError

# Slack allowed when checking that event times lie inside their slice
TIME_SLACK = 1e-9


class Event(NamedTuple):
    "A single sensor reading"
    t: float
    x: float
    y: float
    # carried through I/O, never used in computation
    polarity: int = 0


class MotionModel(NamedTuple):
    """
    The global (or per-object) warp model.

    h_x, h_y: sensor pixels of displacement across one slice
    h_z: expansion rate per slice (dimensionless)
    theta: rotation per slice (radians)
    """
    h_x: float = 0.0
    h_y: float = 0.0
    h_z: float = 0.0
    theta: float = 0.0

    @classmethod
    def identity(cls) -> 'MotionModel':
        "The model that warps every event to itself"
        return cls(0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values) -> 'MotionModel':
        "Build a model from any 4-element sequence"
        h_x, h_y, h_z, theta = (float(v) for v in values)
        return cls(h_x, h_y, h_z, theta)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self)

    def distance(self, other) -> float:
        "L2 distance in model space"
        return float(np.linalg.norm(self.as_array() - np.asarray(other, dtype=np.float64)))

    def check(self) -> 'MotionModel':
        "Raise if a parameter is not finite"
        if not self.is_finite():
            raise InvalidArgumentError("Motion model is not finite: %s" % (self,))
        return self


@dataclass(frozen=True, eq=False)
class EventSlice:
    """
    The events of a temporal window [t0, t0 + dt] (the event cloud),
    stored as parallel arrays sorted by time.
    """
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    polarity: np.ndarray
    t0: float
    dt: float
    sensor_width: int
    sensor_height: int

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.float64)
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        polarity = np.ascontiguousarray(self.polarity, dtype=np.int8)
        if not (t.ndim == x.ndim == y.ndim == polarity.ndim == 1):
            raise InvalidArgumentError("Event arrays must be one-dimensional")
        if not (len(t) == len(x) == len(y) == len(polarity)):
            raise InvalidArgumentError("Event arrays differ in length: "
                                       "%d, %d, %d, %d" %
                                       (len(t), len(x), len(y), len(polarity)))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidArgumentError("Slice duration must be > 0, got %r"
                                       % self.dt)
        if not (math.isfinite(self.t0) and self.t0 >= 0):
            raise InvalidArgumentError("Slice start must be finite and >= 0, "
                                       "got %r" % self.t0)
        if self.sensor_width <= 0 or self.sensor_height <= 0:
            raise InvalidArgumentError("Sensor dimensions must be positive")
        if len(t):
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))
                    and np.all(np.isfinite(y))):
                raise InvalidArgumentError("Event values must be finite")
            if np.any(np.diff(t) < 0):
                raise InvalidArgumentError("Events are not sorted by time")
            slack = TIME_SLACK * max(1.0, abs(self.t0))
            if t[0] < self.t0 - slack or t[-1] > self.t0 + self.dt + slack:
                raise InvalidArgumentError(
                    "Events [%.9f, %.9f] outside slice [%.9f, %.9f]"
                    % (t[0], t[-1], self.t0, self.t0 + self.dt))
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'polarity', polarity)
        object.__setattr__(self, 'sensor_width', int(self.sensor_width))
        object.__setattr__(self, 'sensor_height', int(self.sensor_height))

    @classmethod
    def from_events(cls, events: Sequence[Event], t0: float, dt: float,
                    sensor_width: int, sensor_height: int) -> 'EventSlice':
        "Build a slice from Event tuples"
        if len(events):
            t, x, y, p = (np.array(col) for col in zip(*events))
        else:
            t = x = y = p = np.empty(0)
        return cls(t, x, y, p, t0, dt, sensor_width, sensor_height)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, index: int) -> Event:
        return Event(float(self.t[index]), float(self.x[index]),
                     float(self.y[index]), int(self.polarity[index]))

    def __iter__(self) -> Iterator[Event]:
        for index in range(len(self)):
            yield self[index]

    @property
    def events(self):
        "The events, as a list of Event"
        return list(self)

    @property
    def center(self) -> Tuple[float, float]:
        "Default rotation/expansion center: the image center"
        return (self.sensor_width / 2, self.sensor_height / 2)

    @property
    def half_diagonal(self) -> float:
        "Half of the sensor diagonal, in sensor pixels"
        return math.hypot(self.sensor_width, self.sensor_height) / 2

    def normalized_time(self) -> np.ndarray:
        "t_hat = (t - t0) / dt, in [0, 1]"
        return (self.t - self.t0) / self.dt

    def with_coordinates(self, x, y) -> 'EventSlice':
        "Same events, new coordinates"
        return EventSlice(self.t, x, y, self.polarity, self.t0, self.dt,
                          self.sensor_width, self.sensor_height)

    def subset(self, indices) -> 'EventSlice':
        "The events at the given indices (order preserved)"
        indices = np.sort(np.asarray(indices, dtype=np.int64))
        return EventSlice(self.t[indices], self.x[indices], self.y[indices],
                          self.polarity[indices], self.t0, self.dt,
                          self.sensor_width, self.sensor_height)

    def without(self, indices) -> 'EventSlice':
        "All events except those at the given indices"
        keep = np.ones(len(self), dtype=bool)
        keep[np.asarray(indices, dtype=np.int64)] = False
        return self.subset(np.flatnonzero(keep))


# ------------------------------------------
# Warp transform
# ------------------------------------------

def _flow_terms(model: MotionModel):
    h_x, h_y, h_z, theta = model
    scale = 1.0 + h_z
    return h_x, h_y, scale * math.cos(theta), scale * math.sin(theta)


def warp_coordinates(x, y, t_hat, model: MotionModel,
                     center: Tuple[float, float]):
    """
    Vectorized warp: move coordinates observed at normalized times t_hat
    back to t0. Works on scalars or arrays.
    """
    h_x, h_y, a, b = _flow_terms(model)
    cx, cy = center
    qx = x - cx
    qy = y - cy
    flow_x = h_x + (a * qx - b * qy) - qx
    flow_y = h_y + (b * qx + a * qy) - qy
    return x - t_hat * flow_x, y - t_hat * flow_y


def unwarp_points(x, y, t_hat, model: MotionModel,
                  center: Tuple[float, float]):
    """
    Exact inverse of warp_coordinates for fixed t_hat: the coordinates
    observed at t_hat of points located at (x, y) at t0.
    """
    h_x, h_y, a, b = _flow_terms(model)
    cx, cy = center
    # (I - t_hat * (s R - I)) q = (x - c) + t_hat * h
    diag = 1.0 - t_hat * (a - 1.0)
    off = t_hat * b
    det = diag * diag + off * off
    if np.any(np.asarray(det) <= 1e-12):
        raise InvalidArgumentError("Motion model %s is not invertible"
                                   % (model,))
    rx = (x - cx) + t_hat * h_x
    ry = (y - cy) + t_hat * h_y
    qx = (diag * rx - off * ry) / det
    qy = (off * rx + diag * ry) / det
    return qx + cx, qy + cy


def warp_event(event: Event, model: MotionModel, t0: float, dt: float,
               center: Tuple[float, float]) -> Event:
    "Warp a single event back to t0"
    values = (event.t, event.x, event.y, t0, dt) + tuple(model) + tuple(center)
    if not all(math.isfinite(v) for v in values):
        raise InvalidArgumentError("Non-finite warp input: %s, %s"
                                   % (event, model))
    if dt <= 0:
        raise InvalidArgumentError("Slice duration must be > 0, got %r" % dt)
    t_hat = (event.t - t0) / dt
    x, y = warp_coordinates(event.x, event.y, t_hat, model, center)
    return Event(event.t, x, y, event.polarity)


def warp_event_cloud(cloud: EventSlice, model: MotionModel,
                     center: Optional[Tuple[float, float]] = None) -> EventSlice:
    """
    Warp every event of a slice (warpEventCloud). Length and order are
    preserved; the identity model returns the coordinates untouched.
    """
    MotionModel(*model).check()
    if center is None:
        center = cloud.center
    if not all(math.isfinite(v) for v in center):
        raise InvalidArgumentError("Non-finite warp center %s" % (center,))
    x, y = warp_coordinates(cloud.x, cloud.y, cloud.normalized_time(),
                            model, center)
    return cloud.with_coordinates(x, y)
