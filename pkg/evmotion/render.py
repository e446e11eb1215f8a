"""
Export of event-count and time images as portable graymaps / pixmaps.

Count images become 8-bit graymaps (P5), time images 24-bit pixmaps (P6)
colored from blue (oldest) to green (most recent); empty bins are black.
"""

from functools import singledispatch
from typing import Iterable, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw

from evmotion.errors import InvalidArgumentError
from evmotion.projection import EventCountImage, TimeImage

BOX_COLOR = (255, 0, 0)


def count_pixels(image: EventCountImage,
                 clamp: Optional[int] = None) -> np.ndarray:
    "Counts scaled to 0..255 (by their maximum, or by clamp)"
    counts = image.counts.astype(np.float64)
    if clamp is not None:
        if clamp <= 0:
            raise InvalidArgumentError("clamp must be > 0")
        counts = np.minimum(counts, clamp)
    top = counts.max() if counts.size else 0
    if top <= 0:
        return np.zeros(image.shape, dtype=np.uint8)
    return np.round(255 * counts / top).astype(np.uint8)


def time_pixels(image: TimeImage, colormap: str = 'blue-green') -> np.ndarray:
    "RGB array of mean timestamps"
    mean = np.clip(image.mean_ts, 0.0, 1.0)
    occupied = image.occupied
    rgb = np.zeros(image.shape + (3,), dtype=np.uint8)
    if colormap == 'blue-green':
        rgb[..., 1] = np.round(255 * mean)
        rgb[..., 2] = np.round(255 * (1 - mean))
    elif colormap == 'gray':
        rgb[...] = np.round(255 * mean)[..., None]
    else:
        raise InvalidArgumentError("Unknown colormap %r" % colormap)
    rgb[~occupied] = 0
    return rgb


def _draw_boxes(picture: Image.Image, boxes, color):
    draw = ImageDraw.Draw(picture)
    for x, y, w, h in boxes:
        draw.rectangle([x, y, x + w - 1, y + h - 1], outline=color)
    return picture


@singledispatch
def render_image(image, path, colormap: str = 'blue-green',
                 boxes: Iterable[Tuple[int, int, int, int]] = (), **kwargs):
    "Write an image to disk (boxes are in bins)"
    raise InvalidArgumentError("Cannot render %s" % type(image).__name__)


@render_image.register
def _render_count(image: EventCountImage, path, colormap: str = 'gray',
                  boxes=(), clamp: Optional[int] = None):
    picture = Image.fromarray(count_pixels(image, clamp))
    _draw_boxes(picture, boxes, 255)
    picture.save(path, format='PPM')
    return path


@render_image.register
def _render_time(image: TimeImage, path, colormap: str = 'blue-green',
                 boxes=()):
    picture = Image.fromarray(time_pixels(image, colormap))
    _draw_boxes(picture, boxes, BOX_COLOR)
    picture.save(path, format='PPM')
    return path
