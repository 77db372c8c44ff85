"""
Collective Scattering - batch command line
Runs a study from a JSON configuration and writes its table
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from services.config import config_schema, load_config
from services.errors import CollectiveError, ConfigError
from services.study_service import StudyService
from services.writers import write_table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger("collective.cli")


def _common_options(default) -> argparse.ArgumentParser:
    """--threads/--out/--log-level, accepted before or after the subcommand."""
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("--threads", type=int, default=default, help="worker threads for scan nodes")
    options.add_argument("--out", type=str, default=default, help="output directory")
    options.add_argument("--log-level", type=str, default=default, help="logging level (INFO, DEBUG, ...)")
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collective",
        description="Collective scattering matrix studies of coupled point dipoles",
        parents=[_common_options(None)],
    )
    # subcommand copies set a value only when given
    trailing = _common_options(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[trailing], help="run the task described by a config file")
    run.add_argument("config", type=str)

    validate = sub.add_parser("validate", parents=[trailing], help="validate a config file")
    validate.add_argument("config", type=str)

    sub.add_parser("schema", parents=[trailing], help="print the JSON schema of run configurations")
    return parser


def _threads(args, config) -> int:
    if args.threads is not None:
        return args.threads
    if config.threads is not None:
        return config.threads
    return int(os.getenv("COLLECTIVE_THREADS", "1"))


def _out_dir(args, config) -> Path:
    if args.out:
        return Path(args.out)
    if config.output.path:
        return Path(config.output.path)
    return Path(os.getenv("COLLECTIVE_OUT_DIR", "results"))


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    level = args.log_level or os.getenv("COLLECTIVE_LOG_LEVEL", "INFO")
    logging.basicConfig(level=level.upper(), format="%(asctime)s %(levelname)s %(name)s %(message)s")

    if args.command == "schema":
        print(json.dumps(config_schema(), indent=2))
        return EXIT_OK

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        logger.error(f"[CLI] {exc}")
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"{args.config}: valid ({config.task}, {config.geometry.kind} geometry)")
        return EXIT_OK

    service = StudyService(threads=_threads(args, config))
    try:
        table = service.run(config)
    except ConfigError as exc:
        logger.error(f"[CLI] {exc}")
        return EXIT_CONFIG
    except CollectiveError as exc:
        logger.error(f"[CLI] numerical failure: {type(exc).__name__}: {exc}")
        return EXIT_NUMERICAL

    metadata = {"task": config.task, "l_max": config.l_max, "schema_version": config.schema_version,
                "config": config.model_dump(mode="json")}
    path = write_table(table, _out_dir(args, config), config.output.stem or config.task,
                       config.output.format, metadata)
    print(f"[CLI] {config.task}: {len(table)} rows -> {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
