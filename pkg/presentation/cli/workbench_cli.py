#!/usr/bin/env python3
"""
🖥️ WORKBENCH CLI
===============
argparse front end: one sub-command per experiment, shared flags for the
output directory, config file, overrides and log level.

Every sub-command's help lists its configuration keys and defaults.
"""

import argparse
import asyncio
import logging
from typing import List, Optional

from application.orchestrators.experiment_orchestrator import EXIT_CONFIG, ExperimentOrchestrator
from domain.exceptions import ConfigError
from infrastructure.config.experiment_config import COMMAND_DEFAULTS, describe, env_log_level, load_config
from infrastructure.logging.log_setup import configure_logging

COMMAND_HELP = {
    "grammar": "generate the grammar corpora and splits",
    "table1": "train the SPCN pair and probe its representations",
    "spen-train": "train a micro SPEN language model",
    "ablate": "compare predictor heads over several seeds",
    "stream": "streaming perplexity, fast-weight sweep and uncertainty",
    "bench": "time the sequential and chunked EMA scans",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ema-workbench",
        description="EMA-trace workbench: SPCN probing, micro SPEN and fast-weight experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMAND_DEFAULTS:
        p = sub.add_parser(
            command,
            help=COMMAND_HELP[command],
            description=f"{COMMAND_HELP[command]}\n\nconfiguration keys:\n{describe(command)}",
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("--out-dir", help="run directory (default: a timestamped folder under the results root)")
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or env_log_level() or "INFO")
    logger = logging.getLogger(__name__)
    try:
        config = load_config(args.command, args.config, args.overrides)
    except ConfigError as e:
        logger.error(f"❌ {str(e)}")
        return EXIT_CONFIG
    orchestrator = ExperimentOrchestrator(force=args.force)
    return asyncio.run(orchestrator.run(config, out_dir=args.out_dir))
