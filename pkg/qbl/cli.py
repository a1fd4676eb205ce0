"""Command-line entry point — `qbl <subcommand> --config <file> [--out DIR] [--threads K] [--seed S]`."""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from .config import settings
from .errors import ConfigError
from .experiments import ExperimentConfig, all_experiments, experiment_descriptions, load_config, run
from .experiments.runner import EXIT_CONFIG, write_failure_manifest

logger = logging.getLogger(__name__)


def _key_value(text: str) -> tuple:
    """Parse NAME=VALUE; VALUE is read as JSON and falls back to a plain string."""
    name, sep, raw = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name, json.loads(raw)
    except json.JSONDecodeError:
        return name, raw


def _add_common(p: argparse.ArgumentParser, config_required: bool) -> None:
    p.add_argument("--config", required=config_required, help="JSON experiment configuration")
    p.add_argument("--out", default=None, help=f"output directory (default: config output_dir or {settings.out_dir})")
    p.add_argument("--threads", type=int, default=None, help="worker pool cap")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--svg", action="store_true", help="also write SVG plots (needs matplotlib)")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qbl",
        description="Quadratic bosonic Lindbladian analyzer: stability, pseudospectra, edge modes, response.",
        epilog="experiments:\n" + experiment_descriptions(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run every experiment listed in the config"), config_required=True)
    for name, exp in sorted(all_experiments().items()):
        sp = sub.add_parser(name, help=exp.description)
        _add_common(sp, config_required=False)
        sp.add_argument("-p", "--param", action="append", type=_key_value, default=[], metavar="NAME=VALUE",
                        help="experiment parameter (JSON value), repeatable")
        sp.add_argument("-m", "--model", action="append", type=_key_value, default=[], metavar="FIELD=VALUE",
                        help="model field override (JSON value), repeatable")
    return p


def _apply_overrides(config: ExperimentConfig, kind: str, params: List[tuple], model: List[tuple]) -> ExperimentConfig:
    if not params and not model:
        return config
    data: Dict[str, Any] = config.model_dump()
    if model:
        data["model"].update(dict(model))
    entries = [e for e in data["experiments"] if e["kind"] == kind] or [{"kind": kind, "params": {}}]
    for e in entries:
        e["params"] = {**(e.get("params") or {}), **dict(params)}
    data["experiments"] = entries
    return ExperimentConfig.model_validate(data)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    kind = None if args.command == "run" else args.command
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
        if kind:
            config = _apply_overrides(config, kind, args.param, args.model)
    except (ValidationError, ConfigError) as e:
        logger.error(f"Invalid configuration: {e}")
        write_failure_manifest(args.out, e, EXIT_CONFIG)
        return EXIT_CONFIG

    outcome = run(config, out_dir=args.out, threads=args.threads, seed=args.seed, svg=args.svg, only_kind=kind)
    logger.info(f"Wrote {len(outcome.files)} files to {outcome.out_dir} (exit {outcome.exit_code})")
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
