"""
Text files read and written by evmotion.

- event files: one `t x y p` record per line, sorted by t,
  optional `# sensor: <width> <height>` header
- ground-truth labels: `frame_time object_id x y w h`
- track (and detection) records:
  `frame_time track_id cx cy x y w h h_x h_y h_z theta`
- compensation results:
  `t0 dt h_x h_y h_z theta density iterations_coarse iterations_fine converged`

Lines starting with '#' are comments everywhere.
"""

import math
from pathlib import Path
from typing import Iterable, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np

from evmotion.errors import EmptyInputError, EventFormatError, InvalidArgumentError
from evmotion.events import EventSlice
from evmotion.util import debug

SENSOR_HEADER = 'sensor:'
DEFAULT_SENSOR = (240, 180)


# ------------------------------------------
# Events
# ------------------------------------------

def format_coordinate(value: float) -> str:
    "Integers as integers, anything else with the shortest exact repr"
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def format_event(t: float, x: float, y: float, polarity: int) -> str:
    return "%.6f %s %s %d" % (t, format_coordinate(x), format_coordinate(y),
                              int(polarity))


def write_events(path, slices: Iterable[EventSlice],
                 sensor: Optional[Tuple[int, int]] = None) -> int:
    "Write slices (in order) to an event file; return the event count"
    slices = list(slices)
    if sensor is None and slices:
        sensor = (slices[0].sensor_width, slices[0].sensor_height)
    count = 0
    with open(path, 'w') as f:
        if sensor is not None:
            f.write("# %s %d %d\n" % (SENSOR_HEADER, sensor[0], sensor[1]))
        for cloud in slices:
            for t, x, y, p in zip(cloud.t, cloud.x, cloud.y, cloud.polarity):
                f.write(format_event(t, x, y, p) + '\n')
            count += len(cloud)
    debug("Wrote %d events to %s" % (count, path))
    return count


def read_sensor(path) -> Optional[Tuple[int, int]]:
    "Sensor dimensions declared in the file header, if any"
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if not line.startswith('#'):
                return None
            words = line[1:].split()
            if words and words[0] == SENSOR_HEADER:
                try:
                    return int(words[1]), int(words[2])
                except (IndexError, ValueError):
                    raise EventFormatError("bad sensor header", path, 0, line)
    return None


def _parse_event(fields: List[str]):
    if len(fields) != 4:
        raise ValueError("expected 4 fields 't x y p', got %d" % len(fields))
    t, x, y = (float(value) for value in fields[:3])
    polarity = int(fields[3])
    if not all(math.isfinite(v) for v in (t, x, y)):
        raise ValueError("non-finite value")
    if t < 0:
        raise ValueError("negative timestamp")
    if polarity not in (0, 1):
        raise ValueError("polarity must be 0 or 1")
    return t, x, y, polarity


def iter_events(path) -> Iterator[Tuple[float, float, float, int]]:
    "Stream (t, x, y, p) records, checking format and ordering"
    last_t = -math.inf
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith('#'):
                continue
            try:
                record = _parse_event(text.split())
            except ValueError as error:
                raise EventFormatError(str(error), path, line_no, text)
            if record[0] < last_t:
                raise EventFormatError("timestamps are not sorted",
                                       path, line_no, text)
            last_t = record[0]
            yield record


def _make_slice(buffer, t0, dt, sensor) -> EventSlice:
    t, x, y, p = (np.array(column) for column in zip(*buffer))
    return EventSlice(t, x, y, p, t0, dt, sensor[0], sensor[1])


def parse_events(path, dt: float = 0.025,
                 events_per_slice: Optional[int] = None,
                 sensor: Optional[Tuple[int, int]] = None
                 ) -> Iterator[EventSlice]:
    """
    Stream consecutive slices out of an event file.

    Time windows [origin + k dt, origin + (k+1) dt), origin being the
    multiple of dt just below the first event (empty windows skipped),
    or, with events_per_slice, windows of exactly that many events
    (the last one may be shorter).
    """
    if not dt > 0:
        raise InvalidArgumentError("dt must be > 0, got %r" % dt)
    if events_per_slice is not None and events_per_slice < 1:
        raise InvalidArgumentError("events_per_slice must be >= 1")
    sensor = sensor or read_sensor(path) or DEFAULT_SENSOR
    buffer = []
    if events_per_slice:
        for record in iter_events(path):
            buffer.append(record)
            if len(buffer) == events_per_slice:
                yield _count_slice(buffer, sensor)
                buffer = []
        if buffer:
            yield _count_slice(buffer, sensor)
        return

    origin = None
    window = None
    for record in iter_events(path):
        if origin is None:
            origin = math.floor(record[0] / dt) * dt
        index = math.floor((record[0] - origin) / dt)
        if index != window and buffer:
            yield _make_slice(buffer, origin + window * dt, dt, sensor)
            buffer = []
        window = index
        buffer.append(record)
    if buffer:
        yield _make_slice(buffer, origin + window * dt, dt, sensor)


def _count_slice(buffer, sensor) -> EventSlice:
    "A slice spanning exactly its events"
    t0 = buffer[0][0]
    # a single instant still needs a positive duration
    dt = max(buffer[-1][0] - t0, 1e-6)
    return _make_slice(buffer, t0, dt, sensor)


# ------------------------------------------
# Ground truth labels
# ------------------------------------------

class GroundTruthRecord(NamedTuple):
    "Box of one object at one frame time, in sensor pixels"
    frame_time: float
    object_id: int
    x: float
    y: float
    w: float
    h: float

    @property
    def box(self) -> Tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


class TrackRecord(NamedTuple):
    "One track (or detection) at one frame time, in sensor pixels"
    frame_time: float
    track_id: int
    cx: float
    cy: float
    x: float
    y: float
    w: float
    h: float
    h_x: float = 0.0
    h_y: float = 0.0
    h_z: float = 0.0
    theta: float = 0.0

    @property
    def box(self) -> Tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def _read_records(path, record_type, converters):
    records = []
    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith('#'):
                continue
            fields = text.split()
            if len(fields) != len(converters):
                raise EventFormatError("expected %d fields, got %d"
                                       % (len(converters), len(fields)),
                                       path, line_no, text)
            try:
                records.append(record_type(*(convert(value) for convert, value
                                             in zip(converters, fields))))
            except ValueError as error:
                raise EventFormatError(str(error), path, line_no, text)
    return records


def read_labels(path) -> List[GroundTruthRecord]:
    labels = _read_records(path, GroundTruthRecord,
                           [float, int, float, float, float, float])
    for label in labels:
        if label.w <= 0 or label.h <= 0:
            raise EventFormatError("empty box for object %d at %.6f"
                                   % (label.object_id, label.frame_time), path)
    return labels


def write_labels(path, labels: Iterable[GroundTruthRecord]):
    with open(path, 'w') as f:
        f.write("# frame_time object_id x y w h\n")
        for label in labels:
            f.write("%.6f %d %.3f %.3f %.3f %.3f\n" % tuple(label))


def read_records(path) -> List[TrackRecord]:
    return _read_records(path, TrackRecord, [float, int] + [float] * 10)


def format_record(record: TrackRecord) -> str:
    return ("%.6f %d %.3f %.3f %.3f %.3f %.3f %.3f %.6g %.6g %.6g %.6g"
            % tuple(record))


class RecordWriter:
    """
    Line-delimited output, flushed after every slice so that partial
    results survive a failure.
    """
    def __init__(self, path, header_lines: Iterable[str] = (),
                 columns: str = ''):
        self.path = Path(path)
        self._file = open(self.path, 'w')
        for line in header_lines:
            self._file.write(line.rstrip('\n') + '\n')
        if columns:
            self._file.write("# %s\n" % columns)
        self._file.flush()
        self.count = 0

    def write_line(self, line: str):
        self._file.write(line + '\n')
        self.count += 1

    def flush(self):
        self._file.flush()

    def close(self):
        if not self._file.closed:
            self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


RESULT_COLUMNS = ("t0 dt h_x h_y h_z theta density "
                  "iterations_coarse iterations_fine converged")
RECORD_COLUMNS = "frame_time track_id cx cy x y w h h_x h_y h_z theta"


def format_result(cloud: EventSlice, result) -> str:
    "One results-file row for a compensated slice"
    return ("%.6f %.6f %.6g %.6g %.6g %.6g %.6f %d %d %d"
            % ((cloud.t0, cloud.dt) + tuple(result.model)
               + (result.final_density, result.iterations_coarse,
                  result.iterations_fine, int(result.converged))))


class ResultRow(NamedTuple):
    t0: float
    dt: float
    h_x: float
    h_y: float
    h_z: float
    theta: float
    density: float
    iterations_coarse: int
    iterations_fine: int
    converged: bool


def read_results(path) -> List[ResultRow]:
    rows = _read_records(path, ResultRow,
                         [float] * 7 + [int, int, lambda v: bool(int(v))])
    if not rows:
        raise EmptyInputError("No result rows in %s" % path)
    return rows
