"""
Errors raised by evmotion, and their diagnostic messages.

Every error carries the exit status used by the command line.
"""

import textwrap
import traceback
from functools import singledispatch

# Return codes in case of error
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_DIVERGED = 5
EXIT_PIPELINE = 6


class EvmotionError(Exception):
    "Base class of all errors of the package"
    exit_code = EXIT_PIPELINE


class InvalidArgumentError(EvmotionError, ValueError):
    "A value is out of its domain (non-finite coordinate, dt <= 0...)"


class EmptyInputError(EvmotionError, ValueError):
    "An operation received no data to work on"


class InvalidSpecError(EvmotionError, ValueError):
    "A synthetic scene cannot be generated from its description"


class InvalidConfigError(EvmotionError, ValueError):
    "A configuration value is missing, mistyped or out of range"
    exit_code = EXIT_CONFIG


class InsufficientEventsError(EvmotionError):
    "Too few events to fit a motion model to an object"

    def __init__(self, count: int, minimum: int):
        super().__init__("%d events, at least %d required" % (count, minimum))
        self.count = count
        self.minimum = minimum


class NumericalFailureError(EvmotionError):
    "A filter covariance lost symmetry or positive semi-definiteness"


class OptimizerDivergedError(EvmotionError):
    "The optimizer produced a non-finite model"
    exit_code = EXIT_DIVERGED

    def __init__(self, message: str, last_model=None, iteration: int = 0):
        super().__init__(message)
        self.last_model = last_model
        self.iteration = iteration


class EventFormatError(EvmotionError, ValueError):
    "A line of an event (or label) file cannot be used"
    exit_code = EXIT_FORMAT

    def __init__(self, reason: str, path=None, line_no: int = 0, text: str = ''):
        super().__init__(reason)
        self.reason = reason
        self.path = path
        self.line_no = line_no
        self.text = text

    def __str__(self):
        if self.line_no:
            return "%s:%d: %s (%r)" % (self.path, self.line_no,
                                       self.reason, self.text)
        return "%s: %s" % (self.path, self.reason)


def exit_code(error: Exception) -> int:
    "The exit status matching an error"
    if isinstance(error, OSError):
        return EXIT_IO
    return getattr(error, 'exit_code', EXIT_PIPELINE)


@singledispatch
def format_error(error: Exception, context: str = '') -> str:
    """Default error message for a generic exception."""
    error_type = type(error).__name__
    return textwrap.dedent(
        f'''
        Error while {context or 'running'}
        {error_type}: {error}
        '''
    ).strip() + '\n' + traceback.format_exc().rstrip()


@format_error.register
def _format_evmotion_error(error: EvmotionError, context: str = '') -> str:
    """Known errors: no traceback."""
    error_type = type(error).__name__
    return f"Error while {context or 'running'}: {error_type}: {error}"


@format_error.register
def _format_event_format_error(error: EventFormatError,
                               context: str = '') -> str:
    """Parsing failed: show the offending line."""
    if not error.line_no:
        return f"Malformed file {error.path}: {error.reason}"
    return textwrap.dedent(
        f'''
        Malformed file {error.path}
        Line {error.line_no}: {error.reason}
            {error.text}
        '''
    ).strip()


@format_error.register
def _format_diverged_error(error: OptimizerDivergedError,
                           context: str = '') -> str:
    """The optimizer blew up: report where it was."""
    return (f"Optimizer diverged while {context or 'compensating'} "
            f"(iteration {error.iteration}): {error}; "
            f"last finite model: {error.last_model}")


@format_error.register
def _format_os_error(error: OSError, context: str = '') -> str:
    """I/O failed."""
    return f"I/O error while {context or 'running'}: {error}"
