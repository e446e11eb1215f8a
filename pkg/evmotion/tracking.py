"""
Kalman tracking of detected objects.

The state of a track is X = [x, y, h_x, h_y, h_z, theta, u, v]:
centroid (bins of the compensated frame), object motion model and
centroid velocity (bins per frame). Model parameters follow identity
dynamics; acceleration is absorbed by the velocity process noise.
The measurement is Z = [x, y, h_x, h_y, h_z, theta], or only the
centroid when no model could be fitted.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from evmotion.detection import BinBox, DetectedObject
from evmotion.errors import InvalidArgumentError, NumericalFailureError
from evmotion.util import start_chatting, trace

NDIM_STATE = 8
NDIM_MEASUREMENT = 6


@dataclass(frozen=True)
class TrackerParams:
    "Association, lifetime and noise settings"
    gate: float = 20.0
    max_missed: int = 5
    q_position: float = 1.0
    q_model: float = 1e-2
    q_velocity: float = 0.5
    r_position: float = 2.0
    r_model: float = 5e-2
    # velocity variance of a new track (bins^2 / frame^2)
    initial_velocity_var: float = 400.0
    # seconds per frame; None: the dt of the first step
    frame_period: Optional[float] = None
    psd_tolerance: float = 1e-9
    singular_tolerance: float = 1e-12

    def __post_init__(self):
        if self.gate <= 0:
            raise InvalidArgumentError("Gate must be > 0")
        if self.max_missed < 0:
            raise InvalidArgumentError("max_missed must be >= 0")
        noise = (self.q_position, self.q_model, self.q_velocity,
                 self.r_position, self.r_model, self.initial_velocity_var)
        if any(value < 0 for value in noise):
            raise InvalidArgumentError("Noise variances must be >= 0")
        if self.frame_period is not None and self.frame_period <= 0:
            raise InvalidArgumentError("frame_period must be > 0")


class KalmanFilter:
    """
    Constant-velocity filter on the centroid, identity on the model.
    Works on (mean, covariance) pairs and never keeps state.
    """

    def __init__(self, params: TrackerParams):
        self.params = params
        self._update_mat = np.eye(NDIM_MEASUREMENT, NDIM_STATE)
        self._process_noise = np.diag(
            [params.q_position] * 2 + [params.q_model] * 4
            + [params.q_velocity] * 2)
        self._measurement_noise = np.diag(
            [params.r_position] * 2 + [params.r_model] * 4)

    @staticmethod
    def transition(steps: float) -> np.ndarray:
        motion_mat = np.eye(NDIM_STATE)
        motion_mat[0, 6] = steps
        motion_mat[1, 7] = steps
        return motion_mat

    def initiate(self, measurement: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        "New track from a full measurement (missing parts set to 0)"
        mean = np.r_[measurement, 0.0, 0.0]
        covariance = np.diag(np.r_[np.diag(self._measurement_noise),
                                   [self.params.initial_velocity_var] * 2])
        return mean, covariance

    def predict(self, mean, covariance, steps: float = 1.0):
        motion_mat = self.transition(steps)
        mean = motion_mat @ mean
        covariance = motion_mat @ covariance @ motion_mat.T + self._process_noise
        return mean, self.check(covariance)

    def update(self, mean, covariance, measurement, position_only=False):
        "Joseph-form measurement update"
        size = 2 if position_only else NDIM_MEASUREMENT
        update_mat = self._update_mat[:size]
        noise = self._measurement_noise[:size, :size]
        innovation_cov = update_mat @ covariance @ update_mat.T + noise
        innovation_cov = (innovation_cov + innovation_cov.T) / 2
        inverse = scipy.linalg.pinvh(innovation_cov,
                                     atol=self.params.singular_tolerance,
                                     rtol=0.0)
        gain = covariance @ update_mat.T @ inverse
        innovation = np.asarray(measurement)[:size] - update_mat @ mean
        mean = mean + gain @ innovation
        joseph = np.eye(NDIM_STATE) - gain @ update_mat
        covariance = joseph @ covariance @ joseph.T + gain @ noise @ gain.T
        return mean, self.check(covariance)

    def check(self, covariance: np.ndarray) -> np.ndarray:
        "Symmetrize, then make sure nothing went negative"
        covariance = (covariance + covariance.T) / 2
        if not np.all(np.isfinite(covariance)):
            raise NumericalFailureError("Covariance is not finite")
        smallest = np.linalg.eigvalsh(covariance)[0]
        if smallest < -self.params.psd_tolerance:
            raise NumericalFailureError("Covariance is not positive "
                                        "semi-definite (eigenvalue %g)"
                                        % smallest)
        return covariance


@dataclass(frozen=True, eq=False)
class TrackState:
    "Snapshot of one track"
    id: int
    mean: np.ndarray = field(repr=False)
    covariance: np.ndarray = field(repr=False)
    box: BinBox
    age: int = 0
    missed: int = 0

    @property
    def centroid(self) -> Tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])

    @property
    def velocity(self) -> Tuple[float, float]:
        return float(self.mean[6]), float(self.mean[7])

    @property
    def model(self) -> Tuple[float, float, float, float]:
        return tuple(float(v) for v in self.mean[2:6])

    def current_box(self) -> BinBox:
        "Last detected box, re-centred on the current centroid if coasting"
        if self.missed == 0:
            return self.box
        x, y = self.centroid
        return BinBox(int(round(x - (self.box.w - 1) / 2)),
                      int(round(y - (self.box.h - 1) / 2)),
                      self.box.w, self.box.h)


def _measurement(detection: DetectedObject) -> Tuple[np.ndarray, bool]:
    model = detection.model if detection.model is not None else (0.0,) * 4
    return (np.r_[detection.centroid, tuple(model)],
            detection.model is None)


class Tracker:
    """
    Owner of the live tracks. track_step() is the only way to change them;
    the `tracks` property returns an immutable snapshot.
    """

    def __init__(self, params: Optional[TrackerParams] = None,
                 verbose: bool = False):
        self.params = params or TrackerParams()
        self.filter = KalmanFilter(self.params)
        self._tracks: Tuple[TrackState, ...] = ()
        self._next_id = 1
        self._frame_period = self.params.frame_period
        self.chatter = start_chatting('Tracker', verbose)

    @property
    def tracks(self) -> Tuple[TrackState, ...]:
        return self._tracks

    def _spawn(self, detection: DetectedObject) -> TrackState:
        measurement, _ = _measurement(detection)
        mean, covariance = self.filter.initiate(measurement)
        track = TrackState(self._next_id, mean, covariance, detection.bbox)
        self._next_id += 1
        self.chatter("Spawned track", track.id, "at", track.centroid)
        return track

    def associate(self, predicted: Sequence[TrackState],
                  detections: Sequence[DetectedObject]) -> dict:
        "Greedy nearest-first matching inside the gate: {track: detection}"
        candidates = []
        for ti, track in enumerate(predicted):
            for di, detection in enumerate(detections):
                distance = float(np.hypot(track.mean[0] - detection.centroid[0],
                                          track.mean[1] - detection.centroid[1]))
                if distance <= self.params.gate:
                    candidates.append((distance, ti, di))
        candidates.sort()
        pairs = {}
        used = set()
        for _, ti, di in candidates:
            if ti not in pairs and di not in used:
                pairs[ti] = di
                used.add(di)
        return pairs

    def track_step(self, detections: Sequence[DetectedObject],
                   dt_frame: float) -> Tuple[TrackState, ...]:
        """
        Predict, associate, update, spawn and retire.
        Tracks whose covariance breaks down are retired.
        """
        if not dt_frame > 0:
            raise InvalidArgumentError("dt_frame must be > 0, got %r"
                                       % dt_frame)
        if self._frame_period is None:
            self._frame_period = dt_frame
        steps = dt_frame / self._frame_period

        predicted = []
        for track in self._tracks:
            try:
                mean, covariance = self.filter.predict(track.mean,
                                                       track.covariance, steps)
            except NumericalFailureError as error:
                trace("Retiring track", track.id, ":", error, level='warning')
                continue
            predicted.append(replace(track, mean=mean, covariance=covariance))

        pairs = self.associate(predicted, detections)
        survivors: List[TrackState] = []
        for ti, track in enumerate(predicted):
            if ti in pairs:
                detection = detections[pairs[ti]]
                measurement, position_only = _measurement(detection)
                try:
                    mean, covariance = self.filter.update(
                        track.mean, track.covariance, measurement,
                        position_only)
                except NumericalFailureError as error:
                    trace("Retiring track", track.id, ":", error,
                          level='warning')
                    continue
                survivors.append(replace(track, mean=mean,
                                         covariance=covariance,
                                         box=detection.bbox,
                                         age=track.age + 1, missed=0))
            elif track.missed + 1 > self.params.max_missed:
                self.chatter("Retired track", track.id, "after",
                             track.missed + 1, "missed frames")
            else:
                survivors.append(replace(track, missed=track.missed + 1))

        matched = set(pairs.values())
        for di, detection in enumerate(detections):
            if di not in matched:
                survivors.append(self._spawn(detection))
        self._tracks = tuple(survivors)
        return self._tracks
