"""
Command-line entry point.

    python main.py <command> [--config FILE] [--seed N] [--threads N] [--out DIR] [--dry-run]

Commands: identify, test, confset, joint, montecarlo, empirical, fetch-data.
Results go to <out>/<command>.json plus CSV series; stdout gets a short JSON
summary, logs go to stderr.
"""
import argparse
import json
import re
import sys
from typing import List, Optional, Sequence

from pydantic import ValidationError

from app.api.api_error_handler import handle_cli_exceptions
from app.api.dependencies import get_results_db, get_runs_bl
from app.business_logic.exceptions import ConfigError
from app.business_logic.runs_bl import robustness_variants
from app.models.run_models import RunConfig
from app.models.statuses_enums import CommandEnum
from app.utils.logger import LoggerManager

logger = LoggerManager.get_logger('cli')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="censored-bounds",
        description="Partial-identification bounds and moment-inequality confidence sets for censored transformation models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in CommandEnum:
        p = sub.add_parser(command.value)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="base seed, overrides the config")
        p.add_argument("--threads", type=int, help="worker threads, overrides the config")
        p.add_argument("--out", help="output directory, overrides the config")
        p.add_argument("--dry-run", action="store_true", help="print grid size and instrument counts, then exit")
        p.add_argument("--data", help="CSV data file, shorthand for {\"data\": {\"path\": ...}}")
        p.add_argument("--model", help="simulated design, shorthand for {\"dgp\": {\"model\": ...}}")
        if command == CommandEnum.montecarlo:
            p.add_argument("--robustness", action="store_true", help="run every tuning variant of the robustness table")
        if command == CommandEnum.empirical:
            p.add_argument("--joint", action="store_true", help="also compute the T(y) bands")
    return parser


def _line_of(text: str, loc: Sequence) -> Optional[int]:
    """1-based line of the deepest key of a validation error location, if it appears in the file."""
    lines = text.splitlines()
    start, found = 0, None
    for key in loc:
        if not isinstance(key, str):
            continue
        pattern = re.compile(r'"%s"\s*:' % re.escape(key))
        for idx in range(start, len(lines)):
            if pattern.search(lines[idx]):
                start, found = idx, idx + 1
                break
    return found


def read_config_file(path: str) -> tuple:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {str(e)}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}, line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return doc, text


def _describe_validation_error(error: ValidationError, path: Optional[str], text: str) -> str:
    messages = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item["loc"]) or "<root>"
        line = _line_of(text, item["loc"]) if text else None
        where = f"{path}, line {line}" if line else (path or "arguments")
        messages.append(f"{where}: {loc}: {item['msg']}")
    return "; ".join(messages)


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge the config file with the command-line overrides into a RunConfig.
    The subcommand always wins over a "command" key in the file.
    """
    doc, text = read_config_file(args.config) if args.config else ({}, "")
    doc["command"] = args.command
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.threads is not None:
        doc["threads"] = args.threads
    if args.out is not None:
        doc["out"] = args.out
    if args.dry_run:
        doc["dry_run"] = True
    if args.data:
        doc["data"] = {**doc.get("data", {}), "path": args.data}
    if args.model:
        doc["dgp"] = {**doc.get("dgp", {}), "model": args.model}
    if getattr(args, "joint", False):
        doc["include_joint"] = True
    if getattr(args, "robustness", False):
        doc["variants"] = [v.model_dump() for v in robustness_variants()]
    try:
        return RunConfig(**doc)
    except ValidationError as e:
        raise ConfigError(_describe_validation_error(e, args.config, text)) from e


@handle_cli_exceptions
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = load_run_config(args)
    runs_bl = get_runs_bl(config.threads)

    if config.dry_run:
        report = runs_bl.dry_run(config)
        print(json.dumps(report, sort_keys=True))
        return 0

    bundle = runs_bl.run(config)
    paths = get_results_db(config.out).store_bundle(bundle)
    print(json.dumps({"command": config.command.value, "files": paths}, sort_keys=True))
    logger.info(f"Command '{config.command.value}' finished")
    return 0


def run() -> None:
    sys.exit(main())
