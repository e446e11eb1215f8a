# -------------------
# Public interface of evmotion
# -------------------

__version__ = '0.1.0'

from .events import Event, EventSlice, MotionModel, warp_event, warp_event_cloud
from .projection import project, event_density, model_gradient
from .compensation import OptimizerConfig, compensate
from .detection import detect, score_field
from .tracking import Tracker, TrackerParams
from .pipeline import Pipeline
from .util import SuperDict
