"""
Projection of a warped event cloud onto a discrete grid.

Two images are built from the same binning:

- the event-count image I (events per bin)
- the time image T (mean normalized timestamp per bin)

Bin (i, j) covers [i*d, (i+1)*d) x [j*d, (j+1)*d) in sensor pixels;
images are stored row-major, as array[j, i].
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import ndimage

from evmotion.errors import EmptyInputError, InvalidArgumentError
from evmotion.events import EventSlice, MotionModel, warp_coordinates

STENCIL = np.ones((3, 3), dtype=bool)


def grid_shape(width: float, height: float, bin_size: float) -> Tuple[int, int]:
    "(rows, columns) of the grid covering the sensor"
    if not (math.isfinite(bin_size) and bin_size > 0):
        raise InvalidArgumentError("Bin size must be > 0, got %r" % bin_size)
    # tolerate 240 / 0.3 = 800.0000000001
    rows = max(1, math.ceil(height / bin_size - 1e-9))
    columns = max(1, math.ceil(width / bin_size - 1e-9))
    return rows, columns


@dataclass(frozen=True, eq=False)
class EventCountImage:
    "Number of warped events per bin"
    counts: np.ndarray
    bin_size: float
    # events warped outside the grid
    clipped: int = 0
    # flat bin index of every event, -1 when clipped
    event_bins: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.counts.shape

    @property
    def occupied(self) -> np.ndarray:
        return self.counts > 0

    @property
    def n_occupied(self) -> int:
        return int(np.count_nonzero(self.counts))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class TimeImage:
    "Mean normalized timestamp per bin (0 where empty)"
    counts: np.ndarray
    sums: np.ndarray
    bin_size: float
    clipped: int = 0
    event_bins: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.counts.shape

    @property
    def occupied(self) -> np.ndarray:
        return self.counts > 0

    @property
    def n_occupied(self) -> int:
        return int(np.count_nonzero(self.counts))

    @cached_property
    def mean_ts(self) -> np.ndarray:
        out = np.zeros(self.counts.shape, dtype=np.float64)
        np.divide(self.sums, self.counts, out=out, where=self.counts > 0)
        return out


class ModelGradient(NamedTuple):
    "Descent direction components (d_x, d_y, d_z, d_theta)"
    d_x: float
    d_y: float
    d_z: float
    d_theta: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


# ------------------------------------------
# Binning
# ------------------------------------------

def _bin_events(cloud: EventSlice, model: MotionModel, bin_size: float,
                center) -> Tuple[np.ndarray, np.ndarray, Tuple[int, int]]:
    "Warp the events and return (flat bin per event, t_hat, grid shape)"
    if len(cloud) == 0:
        raise EmptyInputError("Cannot project an empty slice")
    MotionModel(*model).check()
    if center is None:
        center = cloud.center
    rows, columns = grid_shape(cloud.sensor_width, cloud.sensor_height,
                               bin_size)
    t_hat = cloud.normalized_time()
    x, y = warp_coordinates(cloud.x, cloud.y, t_hat, model, center)
    ix = np.floor(x / bin_size)
    iy = np.floor(y / bin_size)
    inside = (ix >= 0) & (ix < columns) & (iy >= 0) & (iy < rows)
    flat = np.full(len(cloud), -1, dtype=np.int64)
    flat[inside] = (iy[inside].astype(np.int64) * columns
                    + ix[inside].astype(np.int64))
    return flat, t_hat, (rows, columns)


def _accumulate(flat: np.ndarray, weights: Optional[np.ndarray], size: int,
                chunk_size: Optional[int] = None) -> np.ndarray:
    "Histogram of bin indices, optionally merged from per-chunk partials"
    if chunk_size is None or chunk_size >= len(flat):
        chunks = [slice(0, len(flat))]
    else:
        if chunk_size <= 0:
            raise InvalidArgumentError("Chunk size must be > 0")
        chunks = [slice(start, start + chunk_size)
                  for start in range(0, len(flat), chunk_size)]
    total = np.zeros(size, dtype=np.float64 if weights is not None else np.int64)
    for chunk in chunks:
        part = flat[chunk]
        keep = part >= 0
        total += np.bincount(part[keep],
                             weights=None if weights is None
                             else weights[chunk][keep],
                             minlength=size)
    return total


def project_counts(cloud: EventSlice, model: MotionModel, bin_size: float,
                   center=None, chunk_size: Optional[int] = None
                   ) -> EventCountImage:
    "Event-count image only (what density evaluation needs)"
    flat, _, shape = _bin_events(cloud, model, bin_size, center)
    counts = _accumulate(flat, None, shape[0] * shape[1], chunk_size)
    return EventCountImage(counts.reshape(shape), bin_size,
                           int(np.count_nonzero(flat < 0)), flat)


def project(cloud: EventSlice, model: MotionModel, bin_size: float,
            center=None, chunk_size: Optional[int] = None
            ) -> Tuple[EventCountImage, TimeImage]:
    """
    Warp the slice with the model and bin it.
    Events falling outside the grid are dropped (and counted in `clipped`).
    """
    flat, t_hat, shape = _bin_events(cloud, model, bin_size, center)
    size = shape[0] * shape[1]
    counts = _accumulate(flat, None, size, chunk_size).reshape(shape)
    sums = _accumulate(flat, t_hat, size, chunk_size).reshape(shape)
    clipped = int(np.count_nonzero(flat < 0))
    return (EventCountImage(counts, bin_size, clipped, flat),
            TimeImage(counts, sums, bin_size, clipped, flat))


def event_density(image: EventCountImage) -> float:
    "Events per occupied bin"
    occupied = image.n_occupied
    if occupied == 0:
        raise EmptyInputError("Event-count image has no occupied bin")
    return image.total / occupied


# ------------------------------------------
# Gradients
# ------------------------------------------

def time_image_gradients(image: TimeImage) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sobel gradients (G_x, G_y) of the mean timestamps.
    Only bins whose whole 3x3 neighbourhood is occupied get a value.
    """
    mean = image.mean_ts
    g_x = ndimage.sobel(mean, axis=1, mode='constant', cval=0.0)
    g_y = ndimage.sobel(mean, axis=0, mode='constant', cval=0.0)
    complete = ndimage.binary_erosion(image.occupied, structure=STENCIL,
                                      border_value=0)
    return np.where(complete, g_x, 0.0), np.where(complete, g_y, 0.0)


def model_gradient(image: TimeImage, center: Tuple[float, float],
                   literal_assignment: bool = False) -> ModelGradient:
    """
    Aggregate the time-image gradients into a descent direction.

    q is the bin-center offset from the rotation center, in bins:
        d_x = sum G_x / #I      d_y = sum G_y / #I
        d_z = sum G.q / #I      d_theta = sum G x q / #I
    With literal_assignment the last two are swapped.
    """
    occupied = image.n_occupied
    if occupied == 0:
        return ModelGradient(0.0, 0.0, 0.0, 0.0)
    g_x, g_y = time_image_gradients(image)
    rows, columns = image.shape
    q_x = (np.arange(columns) + 0.5 - center[0] / image.bin_size)[None, :]
    q_y = (np.arange(rows) + 0.5 - center[1] / image.bin_size)[:, None]
    d_x = g_x.sum() / occupied
    d_y = g_y.sum() / occupied
    dot = (g_x * q_x + g_y * q_y).sum() / occupied
    cross = (g_x * q_y - g_y * q_x).sum() / occupied
    if literal_assignment:
        dot, cross = cross, dot
    return ModelGradient(float(d_x), float(d_y), float(dot), float(cross))
