"""
Run configuration.

Every setting is declared once in CONFIG_SCHEME; sources are layered
with util.update:

    defaults <- config file (YAML or key=value lines) <- command line
"""

import os
from typing import Any, NamedTuple, Optional

import yaml

from evmotion.compensation import OptimizerConfig
from evmotion.errors import InvalidArgumentError, InvalidConfigError
from evmotion.tracking import TrackerParams
from evmotion.util import SuperDict, trace, update


class Option(NamedTuple):
    "Declaration of one setting"
    type: type
    default: Any = None
    help: str = ''
    # None is an accepted value
    optional: bool = False


NULLABLE = dict(optional=True)

CONFIG_SCHEME = (
    # slicing
    ('dt', Option(float, 0.025, "slice duration (seconds)")),
    ('events_per_slice', Option(int, None, "slice every N events instead of "
                                "every dt", **NULLABLE)),
    ('sensor_width', Option(int, None, "sensor width (pixels), when the "
                            "event file has no header", **NULLABLE)),
    ('sensor_height', Option(int, None, "sensor height (pixels)",
                             **NULLABLE)),
    # optimizer
    ('bin_size', Option(float, 0.3, "count-image bin size (sensor pixels)")),
    ('time_bin_size', Option(float, 1.0, "time-image bin size "
                             "(sensor pixels)")),
    ('step_x', Option(float, 2.0, "coarse learning rate for h_x")),
    ('step_y', Option(float, 2.0, "coarse learning rate for h_y")),
    ('step_z', Option(float, None, "coarse learning rate for h_z",
                      **NULLABLE)),
    ('step_theta', Option(float, None, "coarse learning rate for theta",
                          **NULLABLE)),
    ('max_step', Option(float, 4.0, "largest coarse step (time-image bins)")),
    ('step_growth', Option(float, 1.5, "learning-rate growth while the "
                           "gradient keeps its sign")),
    ('step_shrink', Option(float, 0.5, "learning-rate shrink on sign flip")),
    ('tolerance', Option(float, 1e-3, "coarse convergence tolerance "
                         "(model space)")),
    ('max_iterations', Option(int, 50, "coarse iteration budget")),
    ('coarse_levels', Option(int, 2, "coarse descents, each on a time grid "
                             "twice as fine")),
    ('perturbation', Option(float, 1.0, "initial fine-stage step (bins)")),
    ('perturbation_decay', Option(float, 0.5, "fine-stage step decay")),
    ('perturbation_floor', Option(float, 0.05, "smallest fine-stage step "
                                  "(bins)")),
    ('density_tolerance', Option(float, 1e-4, "fine-stage convergence "
                                 "tolerance (density)")),
    ('max_sweeps', Option(int, 100, "fine-stage sweep budget")),
    ('literal_gradients', Option(bool, False, "swap the expansion and "
                                 "rotation gradient forms")),
    ('chunk_size', Option(int, None, "events per accumulation chunk",
                          **NULLABLE)),
    # detection
    ('threshold', Option(float, 0.15, "misalignment threshold lambda")),
    ('min_area', Option(int, 10, "smallest object (bins)")),
    ('negative_tail', Option(bool, False, "also detect rho < -lambda")),
    ('grow_fraction', Option(float, 0.5, "objects grow through bins with "
                                  "rho > grow_fraction * lambda")),
    ('min_object_events', Option(int, 50, "events needed to fit an "
                                 "object model")),
    # tracking
    ('gate', Option(float, 20.0, "association gate (bins)")),
    ('max_missed', Option(int, 5, "frames a track may coast")),
    ('q_position', Option(float, 1.0, "process noise, position")),
    ('q_model', Option(float, 1e-2, "process noise, model parameters")),
    ('q_velocity', Option(float, 0.5, "process noise, velocity")),
    ('r_position', Option(float, 2.0, "measurement noise, position")),
    ('r_model', Option(float, 5e-2, "measurement noise, model parameters")),
    ('initial_velocity_var', Option(float, 400.0, "velocity variance of "
                                    "new tracks")),
    # synthesis and evaluation
    ('seed', Option(int, 0, "random seed")),
    ('slices', Option(int, 10, "slices to synthesize")),
    ('overlap', Option(float, 0.5, "success overlap threshold")),
    ('iou', Option(bool, False, "use intersection over union")),
    # output
    ('render', Option(str, None, "directory for rendered images",
                      **NULLABLE)),
    ('timestamp', Option(bool, False, "date the results header")),
    ('verbose', Option(bool, False, "per-slice progress")),
)

OPTIONS = dict(CONFIG_SCHEME)

OPTIMIZER_KEYS = OptimizerConfig.field_names()
TRACKER_KEYS = ['gate', 'max_missed', 'q_position', 'q_model', 'q_velocity',
                'r_position', 'r_model', 'initial_velocity_var']


def coerce(name: str, value):
    "Check (and convert) a value against its declaration"
    try:
        option = OPTIONS[name]
    except KeyError:
        raise InvalidConfigError("Unknown setting '%s'" % name)
    if value is None:
        if option.optional:
            return None
        raise InvalidConfigError("Setting '%s' cannot be empty" % name)
    if option.type is bool:
        if not isinstance(value, bool):
            raise InvalidConfigError("Setting '%s' must be true or false, "
                                     "got %r" % (name, value))
        return value
    if option.type in (int, float) and isinstance(value, str):
        # YAML reads 1e-3 as a string
        try:
            value = option.type(value)
        except ValueError:
            raise InvalidConfigError("Setting '%s' must be %s, got %r"
                                     % (name, option.type.__name__, value))
    if option.type is float and isinstance(value, int) \
            and not isinstance(value, bool):
        return float(value)
    if option.type is str and not isinstance(value, str):
        return str(value)
    if not isinstance(value, option.type) or isinstance(value, bool):
        raise InvalidConfigError("Setting '%s' must be %s, got %r"
                                 % (name, option.type.__name__, value))
    return value


def parse_key_values(text: str, source: str = '<string>') -> dict:
    "Read `key = value` lines; values are typed as YAML scalars"
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition('=')
        if not sep:
            raise InvalidConfigError("%s:%d: expected key=value, got %r"
                                     % (source, line_no, line))
        try:
            values[key.strip()] = yaml.safe_load(raw.strip()) \
                if raw.strip() else None
        except yaml.YAMLError as error:
            raise InvalidConfigError("%s:%d: %s" % (source, line_no, error))
    return values


def load_config_file(path) -> dict:
    "Settings from a YAML file or a key=value file"
    with open(path) as f:
        text = f.read()
    _, extension = os.path.splitext(str(path))
    if extension.lower() in ('.yml', '.yaml'):
        try:
            values = yaml.safe_load(text) or {}
        except yaml.YAMLError as error:
            raise InvalidConfigError("%s: %s" % (path, error))
        if not isinstance(values, dict):
            raise InvalidConfigError("%s: expected a mapping" % path)
    else:
        values = parse_key_values(text, str(path))
    trace("Loaded configuration file:", path, level='debug')
    return values


class RunConfig(SuperDict):
    """
    All settings of a run, with dot access
    (config.bin_size <=> config['bin_size']).
    """

    @classmethod
    def defaults(cls) -> 'RunConfig':
        return cls({name: option.default for name, option in CONFIG_SCHEME})

    @classmethod
    def load(cls, path=None, overrides: Optional[dict] = None) -> 'RunConfig':
        "defaults <- file <- overrides (None values in overrides are ignored)"
        config = cls.defaults()
        if path:
            config.merge(load_config_file(path))
        if overrides:
            config.merge({key: value for key, value in overrides.items()
                          if value is not None})
        return config

    def merge(self, values: dict) -> 'RunConfig':
        update(self, {key: coerce(key, value)
                      for key, value in values.items()})
        return self

    @property
    def sensor(self):
        if self.sensor_width is None or self.sensor_height is None:
            return None
        return (self.sensor_width, self.sensor_height)

    def optimizer(self) -> OptimizerConfig:
        try:
            return OptimizerConfig(**{key: self[key] for key in OPTIMIZER_KEYS})
        except InvalidArgumentError as error:
            raise InvalidConfigError(str(error))

    def tracker(self) -> TrackerParams:
        try:
            return TrackerParams(**{key: self[key] for key in TRACKER_KEYS})
        except InvalidArgumentError as error:
            raise InvalidConfigError(str(error))

    def detection(self) -> SuperDict:
        "Keyword arguments of detect()"
        if not 0 < self.threshold < 1:
            raise InvalidConfigError("threshold must be in (0, 1)")
        if not 0 < self.grow_fraction <= 1:
            raise InvalidConfigError("grow_fraction must be in (0, 1]")
        if self.min_area < 1 or self.min_object_events < 1:
            raise InvalidConfigError("min_area and min_object_events "
                                     "must be >= 1")
        return SuperDict(threshold=self.threshold, min_area=self.min_area,
                         negative=self.negative_tail,
                         grow_fraction=self.grow_fraction)

    def validate(self) -> 'RunConfig':
        "Build every component once, so that errors show up early"
        if not self.dt > 0:
            raise InvalidConfigError("dt must be > 0")
        if self.events_per_slice is not None and self.events_per_slice < 1:
            raise InvalidConfigError("events_per_slice must be >= 1")
        if not 0 < self.overlap <= 1:
            raise InvalidConfigError("overlap must be in (0, 1]")
        self.optimizer()
        self.tracker()
        self.detection()
        return self
