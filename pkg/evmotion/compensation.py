"""
Two-stage ego-motion compensation.

1. coarse_minimize: gradient descent on the time image. The Sobel
   gradients of the mean-timestamp image vanish when every event of an
   edge lands in the same bin, so they are driven towards zero.
2. fine_refine: coordinate-wise hill climbing on the event density
   of the count image.

compensate() chains both.
"""

import math
from dataclasses import dataclass, field, fields
from typing import Optional, Tuple

import numpy as np

from evmotion.errors import (EmptyInputError, InvalidArgumentError,
                             OptimizerDivergedError)
from evmotion.events import EventSlice, MotionModel
from evmotion.projection import (EventCountImage, TimeImage, event_density,
                                 model_gradient, project, project_counts)
from evmotion.util import debug, trace

# Calibration of the descent direction for (h_x, h_y, h_z, theta):
# the time image slopes towards the residual motion for translation and
# expansion, and against it for rotation.
GRADIENT_SIGN = np.array([-1.0, -1.0, -1.0, 1.0])


@dataclass(frozen=True)
class OptimizerConfig:
    "Settings of both optimization stages"
    # coarse stage: steps in time-image bins per unit of gradient
    step_x: float = 2.0
    step_y: float = 2.0
    # None: derived from step_x and the sensor half-diagonal
    step_z: Optional[float] = None
    step_theta: Optional[float] = None
    # largest pixel displacement of one coarse step, in time-image bins
    max_step: float = 4.0
    step_growth: float = 1.5
    step_shrink: float = 0.5
    tolerance: float = 1e-3
    max_iterations: int = 50
    # descents on time grids of time_bin_size, time_bin_size / 2...
    coarse_levels: int = 2
    # fine stage: perturbation in count-image bins
    perturbation: float = 1.0
    perturbation_decay: float = 0.5
    perturbation_floor: float = 0.05
    density_tolerance: float = 1e-4
    max_sweeps: int = 100
    # grids, in sensor pixels
    bin_size: float = 0.3
    time_bin_size: float = 1.0
    literal_gradients: bool = False
    chunk_size: Optional[int] = None

    def __post_init__(self):
        positive = ['step_x', 'step_y', 'max_step', 'tolerance',
                    'perturbation', 'perturbation_floor', 'density_tolerance',
                    'bin_size', 'time_bin_size']
        for name in positive + ['step_z', 'step_theta']:
            value = getattr(self, name)
            if value is None and name not in positive:
                continue
            if not (isinstance(value, (int, float)) and math.isfinite(value)
                    and value > 0):
                raise InvalidArgumentError("%s must be > 0, got %r"
                                           % (name, value))
        if min(self.max_iterations, self.max_sweeps, self.coarse_levels) < 1:
            raise InvalidArgumentError("max_iterations, max_sweeps and "
                                       "coarse_levels must be >= 1")
        for name in ('perturbation_decay', 'step_shrink'):
            if not 0 < getattr(self, name) < 1:
                raise InvalidArgumentError("%s must be in (0, 1)" % name)
        if self.step_growth < 1:
            raise InvalidArgumentError("step_growth must be >= 1")
        if self.perturbation_floor > self.perturbation:
            raise InvalidArgumentError("perturbation_floor exceeds "
                                       "perturbation")
        if self.chunk_size is not None and self.chunk_size <= 0:
            raise InvalidArgumentError("chunk_size must be > 0")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True, eq=False)
class CompensationResult:
    "Outcome of an optimization stage (or of both)"
    model: MotionModel
    count_image: EventCountImage
    time_image: TimeImage
    iterations_coarse: int = 0
    iterations_fine: int = 0
    final_density: float = 0.0
    converged: bool = False
    # densities of the accepted fine-stage models, first one is the start
    density_history: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def iterations_total(self) -> int:
        return self.iterations_coarse + self.iterations_fine


def _check_slice(cloud: EventSlice, model) -> MotionModel:
    if len(cloud) == 0:
        raise EmptyInputError("Cannot compensate an empty slice")
    return MotionModel(*model).check()


def _result(cloud: EventSlice, model: np.ndarray, cfg: OptimizerConfig,
            center, **kwargs) -> CompensationResult:
    "Final images and density for a model"
    model = MotionModel.from_array(model)
    count_image, _ = project(cloud, model, cfg.bin_size, center,
                             cfg.chunk_size)
    _, time_image = project(cloud, model, cfg.time_bin_size, center,
                            cfg.chunk_size)
    return CompensationResult(model, count_image, time_image,
                              final_density=event_density(count_image),
                              **kwargs)


def _density(cloud: EventSlice, model, cfg: OptimizerConfig, center) -> float:
    return event_density(project_counts(cloud, MotionModel.from_array(model),
                                        cfg.bin_size, center, cfg.chunk_size))


# ------------------------------------------
# Coarse stage
# ------------------------------------------

def coarse_grids(cfg: OptimizerConfig) -> Tuple[float, ...]:
    "Time-image bin sizes of the coarse levels, halved at each level"
    return tuple(cfg.time_bin_size / 2 ** level
                 for level in range(cfg.coarse_levels))


def coarse_steps(cloud: EventSlice, cfg: OptimizerConfig,
                 time_bin_size: Optional[float] = None):
    """
    Initial learning rates and step caps, in model units.

    The gradients of h_z and theta carry the lever arm (in bins), so their
    rates are scaled down twice by the half-diagonal to move image points
    as far as a translation step does.
    """
    grid = time_bin_size or cfg.time_bin_size
    half_px = cloud.half_diagonal
    half_bins = half_px / grid
    rotation = cfg.step_x / half_bins ** 2
    eta = np.array([cfg.step_x * grid,
                    cfg.step_y * grid,
                    cfg.step_z if cfg.step_z is not None else rotation,
                    cfg.step_theta if cfg.step_theta is not None else rotation])
    cap_px = cfg.max_step * grid
    cap = np.array([cap_px, cap_px, cap_px / half_px, cap_px / half_px])
    return eta, cap


def coarse_minimize(cloud: EventSlice, m0: MotionModel,
                    cfg: Optional[OptimizerConfig] = None,
                    center=None) -> CompensationResult:
    """
    Gradient descent on the time image, warm-started from m0.

    A level stops when a step moves the model by no more than the
    tolerance; the next level descends again on a grid twice as fine.
    A smear narrower than three bins has no complete Sobel stencil, so
    the first grid alone leaves about one bin of residual motion.
    All levels share the max_iterations budget.
    """
    cfg = cfg or OptimizerConfig()
    m0 = _check_slice(cloud, m0)
    if center is None:
        center = cloud.center
    model = m0.as_array()
    converged = False
    iteration = 0
    for grid in coarse_grids(cfg):
        if iteration >= cfg.max_iterations:
            break
        eta, cap = coarse_steps(cloud, cfg, grid)
        max_cap = cap
        previous_sign = np.zeros(4)
        converged = False
        while iteration < cfg.max_iterations:
            iteration += 1
            _, time_image = project(cloud, MotionModel.from_array(model),
                                    grid, center, cfg.chunk_size)
            gradient = GRADIENT_SIGN * model_gradient(
                time_image, center, cfg.literal_gradients).as_array()
            sign = np.sign(gradient)
            agreement = sign * previous_sign
            eta = np.where(agreement > 0, eta * cfg.step_growth,
                           np.where(agreement < 0, eta * cfg.step_shrink,
                                    eta))
            # caps shrink on a flip and recover, up to their start value
            cap = np.where(agreement > 0,
                           np.minimum(cap * cfg.step_growth, max_cap),
                           np.where(agreement < 0, cap * cfg.step_shrink,
                                    cap))
            step = np.clip(eta * gradient, -cap, cap)
            candidate = model - step
            if not np.all(np.isfinite(candidate)):
                last = MotionModel.from_array(model)
                trace("Coarse stage diverged at iteration", iteration,
                      level='warning')
                raise OptimizerDivergedError("non-finite model %s"
                                             % (tuple(candidate),),
                                             last_model=last,
                                             iteration=iteration)
            change = float(np.linalg.norm(candidate - model))
            model = candidate
            previous_sign = np.where(sign != 0, sign, previous_sign)
            if change <= cfg.tolerance:
                converged = True
                break
        debug("Coarse level %.3g px:" % grid, iteration, "iterations, model",
              MotionModel.from_array(model))
    return _result(cloud, model, cfg, center,
                   iterations_coarse=iteration, converged=converged)


# ------------------------------------------
# Fine stage
# ------------------------------------------

def fine_refine(cloud: EventSlice, m0: MotionModel,
                cfg: Optional[OptimizerConfig] = None,
                center=None) -> CompensationResult:
    """
    Coordinate-wise density ascent, parameters swept in the order
    (h_x, h_y, h_z, theta), +p before -p, first strict gain accepted.
    Steps decay when a sweep gains less than the density tolerance;
    the search has converged when that happens at the floor.
    """
    cfg = cfg or OptimizerConfig()
    m0 = _check_slice(cloud, m0)
    if center is None:
        center = cloud.center
    # one count-image bin, in model units
    scale = np.array([cfg.bin_size, cfg.bin_size,
                      cfg.bin_size / cloud.half_diagonal,
                      cfg.bin_size / cloud.half_diagonal])
    steps = cfg.perturbation * scale
    floor = cfg.perturbation_floor * scale
    model = m0.as_array()
    density = _density(cloud, model, cfg, center)
    history = [density]
    converged = False
    sweep = 0
    for sweep in range(1, cfg.max_sweeps + 1):
        start = density
        for k in range(4):
            for direction in (1.0, -1.0):
                candidate = model.copy()
                candidate[k] += direction * steps[k]
                try:
                    value = _density(cloud, candidate, cfg, center)
                except EmptyInputError:
                    # everything warped off the grid
                    continue
                if value > density:
                    model, density = candidate, value
                    history.append(density)
                    break
        if density - start <= cfg.density_tolerance:
            if np.all(steps <= floor):
                converged = True
                break
            steps = np.maximum(steps * cfg.perturbation_decay, floor)
    debug("Fine stage:", sweep, "sweeps, density %.4f" % density)
    return _result(cloud, model, cfg, center, iterations_fine=sweep,
                   converged=converged, density_history=tuple(history))


def compensate(cloud: EventSlice, m0: Optional[MotionModel] = None,
               cfg: Optional[OptimizerConfig] = None,
               center=None) -> CompensationResult:
    "Coarse minimization on the time image, then fine refinement"
    cfg = cfg or OptimizerConfig()
    m0 = _check_slice(cloud, m0 if m0 is not None else MotionModel.identity())
    if center is None:
        center = cloud.center
    coarse = coarse_minimize(cloud, m0, cfg, center)
    start = coarse.model
    if coarse.final_density < _density(cloud, m0.as_array(), cfg, center):
        debug("Coarse model", coarse.model, "lowers density, "
              "refining from", m0)
        start = m0
    fine = fine_refine(cloud, start, cfg, center)
    return CompensationResult(fine.model, fine.count_image, fine.time_image,
                              iterations_coarse=coarse.iterations_coarse,
                              iterations_fine=fine.iterations_fine,
                              final_density=fine.final_density,
                              converged=fine.converged,
                              density_history=fine.density_history)
