"""
Detection of independently moving objects on a compensated time image.

Once the camera motion is compensated, background bins have mean
timestamps close to the global mean; bins whose events were left
misaligned (objects with their own motion) stand out. The misalignment
score of an occupied bin is

    rho = mean_ts - <mean_ts over occupied bins>

(the slice length is 1 in normalized time, hence |rho| <= 1).
"""

from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from evmotion.compensation import (CompensationResult, OptimizerConfig,
                                   compensate)
from evmotion.errors import (EmptyInputError, InsufficientEventsError,
                             InvalidArgumentError)
from evmotion.events import EventSlice, MotionModel
from evmotion.projection import STENCIL, TimeImage
from evmotion.util import debug

DEFAULT_THRESHOLD = 0.15
DEFAULT_MIN_AREA = 10
DEFAULT_MIN_EVENTS = 50
DEFAULT_GROW_FRACTION = 0.5


class BinBox(NamedTuple):
    "Axis-aligned rectangle of bins (x, y of the top-left bin)"
    x: int
    y: int
    w: int
    h: int

    def to_pixels(self, bin_size: float) -> Tuple[float, float, float, float]:
        return (self.x * bin_size, self.y * bin_size,
                self.w * bin_size, self.h * bin_size)


@dataclass(frozen=True, eq=False)
class MotionScoreField:
    "rho per bin, NaN where the time image is empty"
    values: np.ndarray
    time_image: TimeImage = field(repr=False)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def bin_size(self) -> float:
        return self.time_image.bin_size


@dataclass(frozen=True, eq=False)
class DetectedObject:
    "A connected group of misaligned bins and the events that fell in it"
    pixels: np.ndarray          # (n, 2) bin coordinates (i, j)
    bbox: BinBox
    centroid: Tuple[float, float]
    events: np.ndarray          # indices into the slice
    bin_size: float
    model: Optional[MotionModel] = None

    @property
    def area(self) -> int:
        return len(self.pixels)

    def with_model(self, model: Optional[MotionModel]) -> 'DetectedObject':
        return replace(self, model=model)


def score_field(image: TimeImage) -> MotionScoreField:
    "Misalignment score of every occupied bin"
    occupied = image.occupied
    if not occupied.any():
        raise EmptyInputError("Time image has no occupied bin")
    mean = image.mean_ts
    values = np.full(image.shape, np.nan)
    values[occupied] = mean[occupied] - mean[occupied].mean()
    return MotionScoreField(values, image)


def threshold_mask(scores: MotionScoreField, threshold: float = DEFAULT_THRESHOLD,
                   negative: bool = False) -> np.ndarray:
    "Bins with rho > threshold (or rho < -threshold too, if negative)"
    defined = scores.defined
    mask = np.greater(scores.values, threshold, where=defined,
                      out=np.zeros(scores.values.shape, dtype=bool))
    if negative:
        mask |= np.less(scores.values, -threshold, where=defined,
                        out=np.zeros(scores.values.shape, dtype=bool))
    return mask


def open_mask(mask: np.ndarray) -> np.ndarray:
    "One 3x3 morphological opening"
    return ndimage.binary_opening(mask, structure=STENCIL)


def grow_regions(scores: MotionScoreField, threshold: float,
                 negative: bool = False) -> np.ndarray:
    """
    Labels of the 8-connected regions with rho > threshold (and, if
    negative, of those with rho < -threshold). Regions of either sign
    never share a label.
    """
    positive, _ = ndimage.label(threshold_mask(scores, threshold),
                                structure=STENCIL)
    if not negative:
        return positive
    below = threshold_mask(scores, threshold, negative=True) \
        & ~(positive > 0)
    negative_labels, _ = ndimage.label(below, structure=STENCIL)
    return np.where(negative_labels > 0,
                    negative_labels + positive.max(), positive)


def detect(scores: MotionScoreField, threshold: float = DEFAULT_THRESHOLD,
           min_area: int = DEFAULT_MIN_AREA,
           negative: bool = False,
           grow_fraction: float = DEFAULT_GROW_FRACTION
           ) -> List[DetectedObject]:
    """
    Threshold, open, label 8-connected components, drop the small ones.

    The surviving components are seeds: only the late part of a moving
    object clears the threshold, so each seed is grown through the
    connected bins with rho > grow_fraction * threshold. Seeds reaching
    the same grown region make one object, whose box, centroid and
    events are those of the region; its pixels are the seed bins.
    Objects come in raster order of their first bin.
    """
    if not 0 < threshold < 1:
        raise InvalidArgumentError("Threshold must be in (0, 1), got %r"
                                   % threshold)
    if not 0 < grow_fraction <= 1:
        raise InvalidArgumentError("grow_fraction must be in (0, 1], got %r"
                                   % grow_fraction)
    mask = open_mask(threshold_mask(scores, threshold, negative))
    labels, count = ndimage.label(mask, structure=STENCIL)
    regions = grow_regions(scores, grow_fraction * threshold, negative)
    seeds = {}
    for label, box in enumerate(ndimage.find_objects(labels), start=1):
        if box is None:
            continue
        rows, cols = np.nonzero(labels[box] == label)
        if len(rows) < min_area:
            continue
        rows = rows + box[0].start
        cols = cols + box[1].start
        # seed bins have rho > threshold: always inside a grown region
        seeds.setdefault(int(regions[rows[0], cols[0]]), []).append(
            np.column_stack([cols, rows]))

    columns = labels.shape[1]
    event_bins = scores.time_image.event_bins
    objects = []
    for region, pixels in seeds.items():
        rows, cols = np.nonzero(regions == region)
        if event_bins is not None:
            events = np.flatnonzero(np.isin(event_bins, rows * columns + cols))
        else:
            events = np.empty(0, dtype=np.int64)
        bbox = BinBox(int(cols.min()), int(rows.min()),
                      int(cols.max() - cols.min() + 1),
                      int(rows.max() - rows.min() + 1))
        objects.append(DetectedObject(
            pixels=np.concatenate(pixels),
            bbox=bbox,
            centroid=(float(cols.mean()), float(rows.mean())),
            events=events,
            bin_size=scores.bin_size))
    debug("Detected %d object(s) out of %d component(s)"
          % (len(objects), count))
    return objects


def fit_object_model(cloud: EventSlice, obj: DetectedObject,
                     cfg: Optional[OptimizerConfig] = None,
                     m0: Optional[MotionModel] = None,
                     min_events: int = DEFAULT_MIN_EVENTS) -> MotionModel:
    """
    Motion-compensate the object's events alone.
    m0 (usually the background model) is the starting point.
    """
    if len(obj.events) < min_events:
        raise InsufficientEventsError(len(obj.events), min_events)
    result = compensate(cloud.subset(obj.events), m0, cfg)
    return result.model


def refine_background(cloud: EventSlice, objects: Sequence[DetectedObject],
                      model: MotionModel,
                      cfg: Optional[OptimizerConfig] = None
                      ) -> CompensationResult:
    "Compensate again without the events of the detected objects"
    if objects:
        excluded = np.unique(np.concatenate([obj.events for obj in objects]))
    else:
        excluded = np.empty(0, dtype=np.int64)
    remainder = cloud.without(excluded)
    if len(remainder) == 0:
        raise EmptyInputError("Every event of the slice belongs to an object")
    debug("Refining background on %d of %d events"
          % (len(remainder), len(cloud)))
    return compensate(remainder, model, cfg)
