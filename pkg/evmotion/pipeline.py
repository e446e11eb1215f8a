"""
Motion compensation and independent object tracking, slice after slice:

    compensate -> time image -> rho -> detect -> fit object models
        -> refine background -> Kalman step -> records

The background model of a slice warm-starts the next one.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from evmotion.compensation import CompensationResult, compensate
from evmotion.config import RunConfig
from evmotion.detection import (BinBox, DetectedObject, detect,
                                fit_object_model, refine_background,
                                score_field)
from evmotion.errors import EmptyInputError, InsufficientEventsError
from evmotion.eventfile import TrackRecord
from evmotion.events import EventSlice, MotionModel, unwarp_points
from evmotion.tracking import Tracker, TrackState
from evmotion.util import debug, start_chatting


@dataclass(frozen=True, eq=False)
class SliceOutcome:
    "Everything the pipeline learned about one slice"
    cloud: EventSlice = field(repr=False)
    compensation: CompensationResult = field(repr=False)
    background: CompensationResult = field(repr=False)
    objects: Tuple[DetectedObject, ...] = ()
    tracks: Tuple[TrackState, ...] = ()
    records: Tuple[TrackRecord, ...] = ()

    @property
    def frame_time(self) -> float:
        return self.cloud.t0 + self.cloud.dt


def box_to_sensor(box: BinBox, bin_size: float, cloud: EventSlice,
                  model: MotionModel) -> Tuple[float, float, float, float]:
    """
    Carry a box of the compensated frame (bins, slice start) to sensor
    pixels at the slice end.
    """
    x, y, w, h = box.to_pixels(bin_size)
    corners = np.array([[x, y], [x + w, y], [x + w, y + h], [x, y + h]])
    moved_x, moved_y = unwarp_points(corners[:, 0], corners[:, 1], 1.0,
                                     model, cloud.center)
    low_x, low_y = moved_x.min(), moved_y.min()
    return (float(low_x), float(low_y), float(moved_x.max() - low_x),
            float(moved_y.max() - low_y))


def point_to_sensor(point, bin_size: float, cloud: EventSlice,
                    model: MotionModel) -> Tuple[float, float]:
    "Bin coordinates (compensated frame) to sensor pixels at the slice end"
    x, y = unwarp_points((point[0] + 0.5) * bin_size,
                         (point[1] + 0.5) * bin_size, 1.0, model,
                         cloud.center)
    return float(x), float(y)


class Pipeline:
    """
    Runs the loop on consecutive slices. It owns the tracker and the
    current background model; feed it slices in time order.
    """

    def __init__(self, config: Optional[RunConfig] = None):
        self.config = (config or RunConfig.defaults()).validate()
        self.optimizer = self.config.optimizer()
        self.detection = self.config.detection()
        self.tracker = Tracker(self.config.tracker(), self.config.verbose)
        self._model = MotionModel.identity()
        self.chatter = start_chatting('Pipeline', self.config.verbose)

    @property
    def model(self) -> MotionModel:
        "Background model of the last slice"
        return self._model

    def compensate_slice(self, cloud: EventSlice) -> CompensationResult:
        "Background compensation only (warm-started)"
        result = compensate(cloud, self._model, self.optimizer)
        self._model = result.model
        self.chatter("Slice %.6f: model %s, density %.3f"
                     % (cloud.t0, tuple(round(v, 4) for v in result.model),
                        result.final_density))
        return result

    def detect_objects(self, cloud: EventSlice,
                       result: CompensationResult) -> List[DetectedObject]:
        "Detect objects and fit their models (None when too few events)"
        objects = []
        for obj in detect(score_field(result.time_image), **self.detection):
            try:
                model = fit_object_model(
                    cloud, obj, self.optimizer, m0=result.model,
                    min_events=self.config.min_object_events)
            except InsufficientEventsError as error:
                debug("No model for object at", obj.centroid, ":", error)
                model = None
            objects.append(obj.with_model(model))
        return objects

    def process_slice(self, cloud: EventSlice) -> SliceOutcome:
        "The full loop on one slice"
        result = self.compensate_slice(cloud)
        objects = self.detect_objects(cloud, result)
        background = result
        if objects:
            try:
                background = refine_background(cloud, objects, result.model,
                                               self.optimizer)
                self._model = background.model
            except EmptyInputError as error:
                debug("Background not refined:", error)
        tracks = self.tracker.track_step(objects, cloud.dt)
        records = tuple(self.track_record(track, cloud, background)
                        for track in tracks)
        self.chatter("Slice %.6f: %d object(s), %d track(s)"
                     % (cloud.t0, len(objects), len(tracks)))
        return SliceOutcome(cloud, result, background, tuple(objects),
                            tracks, records)

    def track_record(self, track: TrackState, cloud: EventSlice,
                     background: CompensationResult) -> TrackRecord:
        "Report a track in sensor pixels at the slice end"
        bin_size = background.time_image.bin_size
        box = box_to_sensor(track.current_box(), bin_size, cloud,
                            background.model)
        cx, cy = point_to_sensor(track.centroid, bin_size, cloud,
                                 background.model)
        return TrackRecord(cloud.t0 + cloud.dt, track.id, cx, cy, *box,
                           *track.model)

    def detection_records(self, cloud: EventSlice,
                          result: CompensationResult,
                          objects) -> List[TrackRecord]:
        "Detections of one slice as records, numbered from 1"
        bin_size = result.time_image.bin_size
        records = []
        for index, obj in enumerate(objects, start=1):
            box = box_to_sensor(obj.bbox, bin_size, cloud, result.model)
            cx, cy = point_to_sensor(obj.centroid, bin_size, cloud,
                                     result.model)
            model = obj.model if obj.model is not None else MotionModel()
            records.append(TrackRecord(cloud.t0 + cloud.dt, index, cx, cy,
                                       *box, *model))
        return records
