"""
Command line: evmotion <subcommand> [options]

    compensate  per-slice background motion, written to a results file
    track       the full loop, written as track records
    detect      compensation and detection, written as detection records
    synth       synthetic event file and ground-truth labels
    eval        success rate of track files against label files
    render      count and time images of every slice
"""

import argparse
from dataclasses import replace
import logging
import os
import sys

import numpy as np
import yaml

from evmotion import __version__
from evmotion.config import CONFIG_SCHEME, RunConfig
from evmotion.context import results_header, success_table
from evmotion.errors import (EXIT_OK, EmptyInputError, InvalidConfigError,
                             exit_code, format_error)
from evmotion.evaluate import success_rates
from evmotion.eventfile import (RECORD_COLUMNS, RESULT_COLUMNS, RecordWriter,
                                format_record, format_result, parse_events,
                                read_labels, read_records, write_events,
                                write_labels)
from evmotion.events import MotionModel
from evmotion.pipeline import Pipeline
from evmotion.projection import project
from evmotion.render import render_image
from evmotion.synth import (SyntheticSceneSpec, moving_objects,
                            synthesize_sequence)
from evmotion.util import LOG, trace

LOG_FORMAT = '%(levelname)-8s-  %(message)s'


# ------------------------------------------
# Helpers
# ------------------------------------------

def _slices(config: RunConfig, path):
    return parse_events(path, dt=config.dt,
                        events_per_slice=config.events_per_slice,
                        sensor=config.sensor)


def _render_dir(config: RunConfig):
    if config.render:
        os.makedirs(config.render, exist_ok=True)
    return config.render


def _render_path(directory, index: int, name: str) -> str:
    return os.path.join(directory, 'slice_%04d_%s' % (index, name))


# ------------------------------------------
# Subcommands
# ------------------------------------------

def cmd_compensate(config: RunConfig, args) -> int:
    "Compensate every slice; one results row per slice"
    pipeline = Pipeline(config)
    render_dir = _render_dir(config)
    header = results_header('evmotion compensate %s' % args.input, config,
                            config.timestamp)
    count = 0
    with RecordWriter(args.output, header, RESULT_COLUMNS) as out:
        for index, cloud in enumerate(_slices(config, args.input)):
            if render_dir:
                _, before = project(cloud, MotionModel.identity(),
                                    config.time_bin_size)
                render_image(before, _render_path(render_dir, index,
                                                  'before.ppm'))
            result = pipeline.compensate_slice(cloud)
            out.write_line(format_result(cloud, result))
            out.flush()
            if render_dir:
                render_image(result.time_image,
                             _render_path(render_dir, index, 'after.ppm'))
            count += 1
    if not count:
        raise EmptyInputError("No events in %s" % args.input)
    trace("Compensated %d slice(s) into" % count, args.output)
    return EXIT_OK


def cmd_track(config: RunConfig, args) -> int:
    "Track independently moving objects; one record per track and slice"
    pipeline = Pipeline(config)
    render_dir = _render_dir(config)
    header = results_header('evmotion track %s' % args.input, config,
                            config.timestamp)
    count = 0
    with RecordWriter(args.output, header, RECORD_COLUMNS) as out:
        for index, cloud in enumerate(_slices(config, args.input)):
            outcome = pipeline.process_slice(cloud)
            for record in outcome.records:
                out.write_line(format_record(record))
            out.flush()
            if render_dir:
                boxes = [track.current_box() for track in outcome.tracks]
                render_image(outcome.background.time_image,
                             _render_path(render_dir, index, 'tracks.ppm'),
                             boxes=boxes)
            count += 1
    if not count:
        raise EmptyInputError("No events in %s" % args.input)
    trace("Tracked %d slice(s), %d record(s) into" % (count, out.count),
          args.output)
    return EXIT_OK


def cmd_detect(config: RunConfig, args) -> int:
    "Detect objects on every slice (no tracking)"
    pipeline = Pipeline(config)
    header = results_header('evmotion detect %s' % args.input, config,
                            config.timestamp)
    count = 0
    with RecordWriter(args.output, header, RECORD_COLUMNS) as out:
        for cloud in _slices(config, args.input):
            result = pipeline.compensate_slice(cloud)
            objects = pipeline.detect_objects(cloud, result)
            for record in pipeline.detection_records(cloud, result, objects):
                out.write_line(format_record(record))
            out.flush()
            count += 1
    if not count:
        raise EmptyInputError("No events in %s" % args.input)
    return EXIT_OK


def scene_from_args(config: RunConfig, args) -> SyntheticSceneSpec:
    "Scene file if given, else a scene built from the flags"
    if args.scene:
        with open(args.scene) as f:
            data = yaml.safe_load(f) or {}
        return SyntheticSceneSpec.from_dict(data).validate()
    spec = SyntheticSceneSpec(
        sensor_width=config.sensor_width or 128,
        sensor_height=config.sensor_height or 96,
        dt=config.dt,
        model=MotionModel(*args.model),
        noise_fraction=args.noise_fraction,
        quantize=args.quantize)
    if args.objects:
        rng = np.random.default_rng(config.seed)
        objects = moving_objects(args.objects, args.object_size,
                                 args.object_speed, spec, rng)
        spec = replace(spec, objects=tuple(objects))
    return spec.validate()


def cmd_synth(config: RunConfig, args) -> int:
    "Write a synthetic event file and its labels"
    spec = scene_from_args(config, args)
    slices, labels = synthesize_sequence(spec, config.slices, config.seed)
    count = write_events(args.output, slices,
                         (spec.sensor_width, spec.sensor_height))
    if args.labels:
        write_labels(args.labels, labels)
    trace("Synthesized %d events in %d slice(s) into" % (count, len(slices)),
          args.output)
    return EXIT_OK


def cmd_eval(config: RunConfig, args) -> int:
    "Print the success rate of every sequence"
    if not args.sequence:
        raise InvalidConfigError("eval needs at least one --sequence")
    sequences = [(name, read_records(tracks), read_labels(labels))
                 for name, tracks, labels in args.sequence]
    rates = success_rates(sequences, overlap=config.overlap,
                          use_iou=config.iou)
    print(success_table(rates))
    return EXIT_OK


def cmd_render(config: RunConfig, args) -> int:
    "Count and time images of every slice, under a fixed or fitted model"
    os.makedirs(args.output, exist_ok=True)
    pipeline = Pipeline(config) if args.compensate else None
    model = MotionModel(*args.model)
    count = 0
    for index, cloud in enumerate(_slices(config, args.input)):
        if pipeline is not None:
            model = pipeline.compensate_slice(cloud).model
        count_image, _ = project(cloud, model, config.bin_size)
        _, time_image = project(cloud, model, config.time_bin_size)
        render_image(count_image, _render_path(args.output, index,
                                               'count.pgm'))
        render_image(time_image, _render_path(args.output, index, 'time.ppm'))
        count += 1
    if not count:
        raise EmptyInputError("No events in %s" % args.input)
    return EXIT_OK


COMMANDS = {
    'compensate': cmd_compensate,
    'track': cmd_track,
    'detect': cmd_detect,
    'synth': cmd_synth,
    'eval': cmd_eval,
    'render': cmd_render,
}


# ------------------------------------------
# Parser
# ------------------------------------------

def _settings_parser() -> argparse.ArgumentParser:
    "Flags shared by every subcommand, one per configuration setting"
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--config', help="YAML or key=value settings file")
    parser.add_argument('--quiet', action='store_true',
                        help="warnings and errors only")
    group = parser.add_argument_group('settings')
    for name, option in CONFIG_SCHEME:
        flag = '--' + name.replace('_', '-')
        if option.type is bool:
            group.add_argument(flag, dest=name, default=None,
                               action=argparse.BooleanOptionalAction,
                               help=option.help)
        else:
            group.add_argument(flag, dest=name, default=None,
                               type=option.type, help=option.help)
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _settings_parser()
    parser = argparse.ArgumentParser(
        prog='evmotion',
        description="Ego-motion compensation and independent motion "
                    "tracking for event cameras")
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    commands = parser.add_subparsers(dest='command', required=True)

    for name in ('compensate', 'track', 'detect'):
        sub = commands.add_parser(name, parents=[common],
                                  help=COMMANDS[name].__doc__)
        sub.add_argument('input', help="event file")
        sub.add_argument('-o', '--output', required=True,
                         help="output file")

    sub = commands.add_parser('synth', parents=[common],
                              help=cmd_synth.__doc__)
    sub.add_argument('-o', '--output', required=True, help="event file")
    sub.add_argument('--labels', help="ground-truth label file")
    sub.add_argument('--scene', help="YAML scene description")
    sub.add_argument('--model', type=float, nargs=4, default=(0, 0, 0, 0),
                     metavar=('H_X', 'H_Y', 'H_Z', 'THETA'),
                     help="background motion per slice")
    sub.add_argument('--objects', type=int, default=0,
                     help="number of moving objects")
    sub.add_argument('--object-size', type=float, default=12.0,
                     help="object side (pixels)")
    sub.add_argument('--object-speed', type=float, default=15.0,
                     help="object speed (pixels per slice)")
    sub.add_argument('--noise-fraction', type=float, default=None,
                     help="uniform noise, as a fraction of the signal")
    sub.add_argument('--quantize', action='store_true',
                     help="round coordinates to sensor pixels")

    sub = commands.add_parser('eval', parents=[common], help=cmd_eval.__doc__)
    sub.add_argument('--sequence', nargs=3, action='append', default=[],
                     metavar=('NAME', 'TRACKS', 'LABELS'),
                     help="a sequence to score (repeatable)")

    sub = commands.add_parser('render', parents=[common],
                              help=cmd_render.__doc__)
    sub.add_argument('input', help="event file")
    sub.add_argument('-o', '--output', required=True, help="image directory")
    how = sub.add_mutually_exclusive_group()
    how.add_argument('--model', type=float, nargs=4, default=(0, 0, 0, 0),
                     metavar=('H_X', 'H_Y', 'H_Z', 'THETA'),
                     help="warp every slice with this model")
    how.add_argument('--compensate', action='store_true',
                     help="warp every slice with its compensated model")
    return parser


def configure_logging(verbose: bool, quiet: bool):
    level = logging.DEBUG if verbose else \
        logging.WARNING if quiet else logging.INFO
    logging.basicConfig(format=LOG_FORMAT)
    LOG.setLevel(level)


def main(argv=None) -> int:
    "Entry point: returns the exit status"
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {name: getattr(args, name) for name, _ in CONFIG_SCHEME}
    try:
        config = RunConfig.load(args.config, overrides)
        configure_logging(config.verbose, args.quiet)
        return COMMANDS[args.command](config, args)
    except Exception as error:
        LOG.error(format_error(error, context=args.command))
        return exit_code(error)


if __name__ == '__main__':
    sys.exit(main())
