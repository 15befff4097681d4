import argparse
import json
import logging
import sys
from typing import List, Optional

from src import __version__
from src.cli import register_all_commands
from src.cli.common import common_parser
from src.config import load_config
from src.core.errors import StageFailure, TsotError
from src.utils.logging import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    """Парсер командной строки со всеми подкомандами"""
    parser = argparse.ArgumentParser(prog='tsot', description="Потоковое многодикторное SA-ASR на основе t-SOT")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True
    register_all_commands(subparsers, common_parser())
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Точка входа командной строки

    Returns:
        int: Код выхода (0 - успех, 1 - ошибка этапа или предметной области, 2 - ошибка использования)
    """
    settings = load_config()
    parser = build_parser()
    args = parser.parse_args(argv)
    args.overrides = list(args.overrides or [])

    try:
        setup_logging(level=args.log_level or settings['LOG_LEVEL'], log_file=settings['LOG_FILE'])
    except ValueError as e:
        parser.print_usage(sys.stderr)
        print(f"tsot: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.info(f"tsot {__version__}: команда '{args.command}'")
    try:
        result = args.handler(args, settings)
    except StageFailure as e:
        logger.error(str(e))
        return EXIT_FAILURE
    except (TsotError, FileNotFoundError) as e:
        logger.error(f"Команда '{args.command}' завершилась ошибкой: {e}")
        return EXIT_FAILURE

    if args.json:
        json.dump(result, sys.stdout, ensure_ascii=False, indent=2, default=str)
        sys.stdout.write('\n')
    else:
        for key, value in result.items():
            if not isinstance(value, (dict, list)):
                print(f"{key}: {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
