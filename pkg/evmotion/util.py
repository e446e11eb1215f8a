#!/usr/bin/env python3

"""
Logging helpers and small containers shared by the evmotion modules
"""

import logging
from copy import deepcopy

from termcolor import colored

# ------------------------------------------
# Logging
# ------------------------------------------
LOG = logging.getLogger("evmotion")

TAG = 'evmotion'
TAG_COLOR = 'green'

LEVELS = ('debug', 'info', 'warning', 'error', 'critical')


def format_trace(*args) -> str:
    "One log line: colored tag and first item, then the other items"
    head = colored("[%s] - %s" % (TAG, args[0]), TAG_COLOR)
    return ' '.join([head] + [str(arg) for arg in args[1:]])


def trace(*args, level: str = 'info') -> str:
    """
    Log a message on the evmotion logger (shown unless --quiet).
    level is one of LEVELS.
    """
    if level not in LEVELS:
        raise ValueError("Unknown level '%s' %s" % (level, LEVELS))
    msg = format_trace(*args)
    LOG.log(getattr(logging, level.upper()), msg)
    return msg


def debug(*args):
    "Log a message at debug level (shown with --verbose)"
    LOG.debug(format_trace(*args))


def start_chatting(prefix: str, verbose: bool, color: str = 'yellow'):
    """
    Chatter function of one component (Pipeline, Tracker...):
    it logs per-slice progress only when verbose is on.

        chatter = start_chatting('Tracker', verbose=True)
        chatter("Spawned track", 3)
        # INFO    -  [evmotion - Tracker] Spawned track 3
    """
    tag = colored('[%s - %s]' % (TAG, prefix), color)

    def chatter(*args):
        if verbose:
            LOG.info(' '.join([tag] + [str(arg) for arg in args]))
    return chatter


# ------------------------------------------
# Containers
# ------------------------------------------
def update(d1, d2):
    """
    Merge d2 into d1 and return d1.
    Mappings are merged key by key (recursively); any other value
    of d2 replaces the one of d1 (as a copy).
    """
    if not (isinstance(d1, dict) and isinstance(d2, dict)):
        return deepcopy(d2)
    for key, value in d2.items():
        if isinstance(d1.get(key), dict) and isinstance(value, dict):
            update(d1[key], value)
        else:
            d1[key] = deepcopy(value)
    return d1


class SuperDict(dict):
    """
    A dictionary with dot access to its keys:

        config['bin_size'] <=> config.bin_size
    """

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError("No setting '%s'" % name)

    def __setattr__(self, name, value):
        self[name] = value
