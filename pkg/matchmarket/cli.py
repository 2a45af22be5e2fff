"""
Command-line entry point for matchmarket
"""

import argparse
import logging
import sys

from matchmarket.commands import bounds, enumeration, experiments, simulate
from matchmarket.config import get_config
from matchmarket.errors import MatchMarketError

logger = logging.getLogger(__name__)

COMMANDS = [simulate, enumeration, bounds, experiments]


def build_parser():
    parser = argparse.ArgumentParser(
        prog='matchmarket',
        description='Two-sided matching markets with UCB learners under costs and transfers',
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    for module in COMMANDS:
        module.register(subparsers)
    return parser


def configure_logging(level=None):
    level = (level or get_config().LOG_LEVEL).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv=None):
    """Parse arguments, dispatch, and map failures to exit codes"""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        return args.handler(args)
    except MatchMarketError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
