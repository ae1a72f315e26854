import asyncio
import logging
import sys
from argparse import ArgumentParser, RawDescriptionHelpFormatter
from typing import List, Optional

from pydantic import ValidationError

from routers import codes, networks, preparations, transversal
from utilities.app_metadata import app_metadata_description, tags_metadata
from utilities.config import DEFAULT_SAMPLE, Settings
from utilities.output import FORMATS

# Connecting routers to the app
ROUTERS = [codes, transversal, preparations, networks]
LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO}

logger = logging.getLogger('ftnet-cli')


def common_parser() -> ArgumentParser:
    """Flags shared by every verb; they go after the verb name."""
    parser = ArgumentParser(add_help=False)
    parser.add_argument('--format', choices=FORMATS, default='kv', help='output layout')
    parser.add_argument('--seed', type=int, default=0, help='seed of every random choice')
    parser.add_argument('--jobs', type=int, default=1, help='worker processes for enumerations')
    parser.add_argument('--sample', type=int, help='sample this many basis states instead of all')
    parser.add_argument('--trials', type=int, help='random inputs per network verification')
    parser.add_argument('--repetitions', type=int, help='majority repetitions of syndrome extraction')
    parser.add_argument('--retry-limit', type=int, help='ancilla preparation attempts')
    parser.add_argument('--type-pair', help='observable kinds of a merged measurement, e.g. XZ')
    parser.add_argument('--dense-cap', type=int, help='largest dense simulation in qubits')
    parser.add_argument('--trace', action='store_true', help='print simulation traces')
    parser.add_argument('--debug', action='store_true', help='validate the tableau after every gate')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v info, -vv debug')
    return parser


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog='ftnet', description=app_metadata_description, formatter_class=RawDescriptionHelpFormatter,
        epilog='\n'.join(f'{tag["name"]}: {tag["description"]}' for tag in tags_metadata),
    )
    subparsers = parser.add_subparsers(dest='verb', metavar='<verb>')
    subparsers.required = True
    parents = [common_parser()]
    for router in ROUTERS:
        router.register(subparsers, parents)
    return parser


def build_settings(args) -> Settings:
    values = {
        'seed': args.seed, 'jobs': args.jobs, 'debug': args.debug,
        'sample': args.sample if args.sample is not None else DEFAULT_SAMPLE,
        'trials': args.trials, 'repetitions': args.repetitions, 'retry_limit': args.retry_limit,
        'type_pair': args.type_pair, 'dense_cap': args.dense_cap,
    }
    return Settings(**{key: value for key, value in values.items() if value is not None})


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses `argv`, runs the verb handler and returns the exit status:
    0 on success, 1 on a failed check, 2 on usage, parse, file or domain errors.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    logging.basicConfig(
        level=LOG_LEVELS.get(args.verbose, logging.DEBUG), stream=sys.stderr,
        format='%(levelname)s %(name)s: %(message)s', force=True,
    )
    try:
        settings = build_settings(args)
        return asyncio.run(args.handler(args, settings))
    except (ValueError, ValidationError, FileNotFoundError, KeyError, IndexError) as e:
        logger.debug('%s failed', args.verb, exc_info=True)
        print(f'error: {e}', file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
