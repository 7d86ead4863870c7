"""Command-line interface.

Exit codes: 0 on success, 1 when some transport unit could not be
analyzed, 2 on invalid input.
"""
import argparse
import logging
import os
import sys

from . import errors
from . import pipeline
from . import records
from . import store
from .config import load_config
from .quadfit import fit_quad_to_mask
from .raster import InstanceMask
from .synth import generate_suite
from .version import __VERSION__


__all__ = ['main']


logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_UNIT_FAILURES = 1
EXIT_INVALID_INPUT = 2

_LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _emit(document, out):
    """Write a document to ``out`` or print it when no path is given."""
    if out:
        store.write_document(out, document)
    else:
        if 'schema_version' not in document:
            document = dict(document, schema_version=store.SCHEMA_VERSION)
        sys.stdout.write(store.dumps(document))


def _select_image(annotations, image):
    target = os.path.abspath(image)
    selected = [a for a in annotations
                if a.image_path == image or os.path.abspath(a.image) == target]
    if not selected:
        raise errors.DatasetMismatchError('image %s is not annotated' % image)
    return selected


def _cmd_analyze(args):
    config = load_config(args.config)
    annotations = list(records.load_annotations(args.annotations))
    if args.image:
        annotations = _select_image(annotations, args.image)
    packages = None
    if args.packages != pipeline.PACKAGES_ANNOTATIONS:
        packages = pipeline.load_packages(args.packages)
    results = pipeline.analyze(annotations, config, args.faces, packages,
                               args.count_mode, args.overlay, args.workers)
    _emit({'object': 'list', 'data': [r.to_data() for r in results]}, args.out)
    failed = sum(1 for r in results for u in r.units if not u.ok)
    if failed:
        logger.warning('%d unit(s) could not be analyzed', failed)
        return EXIT_UNIT_FAILURES
    return EXIT_OK


def _cmd_fit_quad(args):
    config = load_config(args.config)
    mask = InstanceMask.from_png(args.mask)
    quad, iou = fit_quad_to_mask(mask, config.quadfit)
    _emit({'object': 'quad_fit', 'quad': quad.to_data(), 'iou': iou}, args.out)
    return EXIT_OK


def _cmd_evaluate(args):
    report = pipeline.evaluate(args.results, args.truth,
                               load_config(args.config).geometry.iou_resolution)
    _emit(report, args.out)
    return EXIT_OK


def _cmd_synth(args):
    ranges = None
    if args.ranges:
        ranges = store.read_document(args.ranges)
        ranges.pop('schema_version', None)
    generate_suite(args.count, args.seed, ranges, args.out)
    return EXIT_OK


def _cmd_config(args):
    config = load_config(args.config)
    if args.dump:
        sys.stdout.write(store.dumps(config.to_data()))
    else:
        logger.info('configuration is valid')
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog='palletscope',
        description='Packaging structure recognition for transport units.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __VERSION__)
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log debug messages')
    parser.add_argument('-q', '--quiet', action='store_true',
                        help='log warnings and errors only')
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    p = commands.add_parser('analyze', help='analyze annotated images')
    p.add_argument('--annotations', required=True,
                   help='annotation document with the transport unit masks')
    p.add_argument('--image', help='analyze only this annotated image')
    p.add_argument('--packages', default=pipeline.PACKAGES_ANNOTATIONS,
                   help='"annotations" or a package detection document')
    p.add_argument('--count-mode', choices=pipeline.COUNT_MODES,
                   default=pipeline.COUNT_GRID)
    p.add_argument('--faces', choices=pipeline.FACE_SOURCES,
                   default=pipeline.FACES_HOUGH)
    p.add_argument('--config', help='configuration document')
    p.add_argument('--overlay', metavar='DIR', help='write overlay images here')
    p.add_argument('--out', help='result document (default: stdout)')
    p.add_argument('--workers', type=int, default=1)
    p.set_defaults(func=_cmd_analyze)

    p = commands.add_parser('fit-quad', help='fit a quadrilateral to a mask')
    p.add_argument('--mask', required=True, help='mask PNG')
    p.add_argument('--config')
    p.add_argument('--out')
    p.set_defaults(func=_cmd_fit_quad)

    p = commands.add_parser('evaluate', help='score results against ground truth')
    p.add_argument('--results', required=True)
    p.add_argument('--truth', required=True)
    p.add_argument('--config')
    p.add_argument('--out')
    p.set_defaults(func=_cmd_evaluate)

    p = commands.add_parser('synth', help='generate synthetic scenes')
    p.add_argument('--count', type=int, required=True)
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--ranges', help='parameter range document')
    p.add_argument('--out', required=True, metavar='DIR')
    p.set_defaults(func=_cmd_synth)

    p = commands.add_parser('config', help='check or print the configuration')
    p.add_argument('--config')
    p.add_argument('--dump', action='store_true',
                   help='print the effective configuration')
    p.set_defaults(func=_cmd_config)
    return parser


def _configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format=_LOG_FORMAT)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        return args.func(args)
    except errors.BaseError as e:
        logger.error('%s: %s', e.code, e)
        return EXIT_INVALID_INPUT


if __name__ == '__main__':
    sys.exit(main())
