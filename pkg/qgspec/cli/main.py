import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from .. import __description__, __version__
from ..core.errors import ConvergenceError, QGSpecError
from ..core.registry import GeneratorRegistry
from .commands import COMMANDS, CommandResult
from .config import build_config, list_presets
from .models import RunConfig, RunManifest
from .output import ArtifactWriter, library_versions

logger = logging.getLogger("qgspec")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FLAGGED = 3

MANIFEST_NAME = "run-manifest.json"

# flag -> RunConfig field; None defaults mean "not given on the command line"
OVERRIDES: Dict[str, Dict[str, Any]] = {
    "--out": {"dest": "out"},
    "--workers": {"dest": "workers", "type": int},
    "--precision": {"dest": "precision", "choices": ["double", "extended"]},
    "--mode": {"dest": "mode", "choices": ["graph", "simplified"]},
    "--cocycle": {"dest": "cocycle", "choices": ["verbatim", "canonical"]},
    "--word": {"dest": "word_file", "metavar": "FILE"},
    "--e-lo": {"dest": "e_lo", "type": float},
    "--e-hi": {"dest": "e_hi", "type": float},
    "--e-points": {"dest": "e_points", "type": int},
    "--tol": {"dest": "tol", "type": float},
    "--n": {"dest": "n_max", "type": int, "metavar": "N"},
    "--n-min": {"dest": "n_min", "type": int},
    "--n-steps": {"dest": "n_steps", "type": int},
    "--n-bases": {"dest": "n_bases", "type": int},
    "--origin": {"dest": "origin", "type": int},
    "--length": {"dest": "length", "type": int},
    "--approximant-length": {"dest": "approximant_length", "type": int},
    "--re-min": {"dest": "re_min", "type": float},
    "--re-max": {"dest": "re_max", "type": float},
    "--im-min": {"dest": "im_min", "type": float},
    "--im-max": {"dest": "im_max", "type": float},
    "--grid": {"dest": "grid", "type": int},
    "--bm-k": {"dest": "bm_k", "type": int},
    "--bm-alpha": {"dest": "bm_alpha", "type": float},
    "--M": {"dest": "M", "type": int},
}


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="INI file with [subshift] and [run]")
    parent.add_argument("--preset", help=f"one of: {', '.join(list_presets())}")
    parent.add_argument(
        "--two-sided", dest="two_sided", action="store_const", const=True
    )
    for flag, options in OVERRIDES.items():
        parent.add_argument(flag, default=None, **options)
    verbosity = parent.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return parent


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgspec", description=__description__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = _common_options()
    for name, (_, help_text) in COMMANDS.items():
        subparsers.add_parser(name, parents=[parent], help=help_text)
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    keys = [options["dest"] for options in OVERRIDES.values()] + ["two_sided"]
    return {key: getattr(args, key) for key in keys}


def _write_manifest(
    writer: ArtifactWriter,
    command: str,
    config: RunConfig,
    started_at: datetime,
    started: float,
    status: int,
    warnings: List[str],
) -> None:
    manifest = RunManifest(
        command=command,
        config=config.model_dump(mode="json"),
        versions=library_versions(),
        started_at=started_at.isoformat(),
        wall_time_s=time.perf_counter() - started,
        artifacts=list(writer.written),
        exit_status=status,
        warnings=warnings,
    )
    writer.json(MANIFEST_NAME, manifest.model_dump(mode="json"))


def run(command: str, config: RunConfig) -> int:
    """Execute one subcommand against a validated config and return the exit status."""
    handler, _ = COMMANDS[command]
    started_at = datetime.now(timezone.utc)
    started = time.perf_counter()
    try:
        writer = ArtifactWriter(config.out)
    except OSError as exc:
        logger.error("cannot create output directory %s: %s", config.out, exc)
        return EXIT_INVALID

    try:
        result = handler(config, writer)
    except ConvergenceError as exc:
        logger.error("%s did not converge: %s", command, exc)
        result = CommandResult(warnings=[str(exc)])
    except ValueError as exc:
        logger.error("%s: %s", command, exc)
        return EXIT_INVALID
    except OSError as exc:
        logger.error("cannot write results to %s: %s", config.out, exc)
        return EXIT_INVALID

    for message in result.warnings:
        logger.warning(message)
    status = EXIT_FLAGGED if result.flagged else EXIT_OK
    try:
        _write_manifest(
            writer, command, config, started_at, started, status, result.warnings
        )
    except OSError as exc:
        logger.error("cannot write %s: %s", MANIFEST_NAME, exc)
        return EXIT_INVALID
    logger.info("%s finished with status %d in %s", command, status, config.out)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = create_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    GeneratorRegistry.discover_generators()
    try:
        config = build_config(args.preset, args.config, _overrides(args))
    except (QGSpecError, ValidationError) as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_INVALID
    return run(args.command, config)


if __name__ == "__main__":
    sys.exit(main())
