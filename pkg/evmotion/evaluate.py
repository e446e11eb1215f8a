"""
Success rate of tracking against hand (or synthetic) labels.

A labeled object counts as found in a frame when some reported box
covers at least half of its area (or, optionally, when their
intersection over union reaches the threshold).
"""

from collections import defaultdict
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from evmotion.errors import EmptyInputError, InvalidArgumentError

Box = Tuple[float, float, float, float]

DEFAULT_OVERLAP = 0.5
DEFAULT_TIME_TOLERANCE = 1e-3


def intersection(a: Box, b: Box) -> float:
    width = min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0])
    height = min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1])
    return max(width, 0.0) * max(height, 0.0)


def coverage(detected: Box, truth: Box) -> float:
    "Fraction of the labeled box covered by the detection"
    return intersection(detected, truth) / (truth[2] * truth[3])


def iou(detected: Box, truth: Box) -> float:
    inter = intersection(detected, truth)
    union = detected[2] * detected[3] + truth[2] * truth[3] - inter
    return inter / union if union > 0 else 0.0


def _by_frame(records) -> Dict[float, List]:
    frames = defaultdict(list)
    for record in records:
        frames[record.frame_time].append(record)
    return frames


def evaluate_success_rate(tracks: Iterable, truth: Iterable,
                          overlap: float = DEFAULT_OVERLAP,
                          use_iou: bool = False,
                          time_tolerance: float = DEFAULT_TIME_TOLERANCE
                          ) -> float:
    """
    Mean over labeled frames of (objects found / objects labeled),
    as a percentage. Records only need `frame_time` and `box`.
    """
    if not 0 < overlap <= 1:
        raise InvalidArgumentError("overlap must be in (0, 1]")
    labels = _by_frame(truth)
    if not labels:
        raise EmptyInputError("No ground truth to evaluate against")
    reported = _by_frame(tracks)
    times = np.array(sorted(reported))
    score = coverage if not use_iou else iou
    rates = []
    for frame_time, objects in sorted(labels.items()):
        boxes = []
        if len(times):
            nearest = times[np.argmin(np.abs(times - frame_time))]
            if abs(nearest - frame_time) <= time_tolerance:
                boxes = [record.box for record in reported[nearest]]
        found = sum(1 for label in objects
                    if any(score(box, label.box) >= overlap for box in boxes))
        rates.append(found / len(objects))
    return 100.0 * float(np.mean(rates))


def success_rates(sequences: Sequence[Tuple[str, Iterable, Iterable]],
                  **kwargs) -> Dict[str, float]:
    "Per-sequence percentages, keyed by sequence name"
    return {name: evaluate_success_rate(tracks, truth, **kwargs)
            for name, tracks, truth in sequences}
