"""Command-line front end: ``kraus-spectra <command> FIXTURE... [options]``."""

import argparse
import asyncio
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import structlog
from pydantic import ValidationError

from . import __version__
from .src.exceptions import (
    ChannelAnalysisError,
    FixtureParseError,
    exit_code_for,
    handle_unexpected_error,
)
from .src.logging_config import configure_logging
from .src.pipeline import COMMANDS, AnalysisPipeline
from .src.schemas import AnalysisReport, ChannelFixture
from .src.settings import AnalysisSettings

FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"

logger = structlog.get_logger(__name__)

Outcome = Union[AnalysisReport, ChannelAnalysisError]


def resolve_fixture_path(path: Union[str, Path]) -> Path:
    """Use the path as given, else fall back to a bundled fixture name."""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    bundled = FIXTURE_DIR / candidate.name
    if bundled.exists():
        return bundled
    return candidate


def load_fixture(path: Union[str, Path]) -> ChannelFixture:
    """Read and validate a fixture document.

    Raises:
        FixtureParseError: unreadable file, malformed JSON, or a field that
            fails validation (row lengths, dimension, entry format)
    """
    resolved = resolve_fixture_path(path)
    try:
        text = resolved.read_text(encoding="utf-8")
    except OSError as e:
        raise FixtureParseError(
            f"Cannot read fixture: {e}", path=str(resolved)
        ) from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise FixtureParseError(
            f"Malformed JSON: {e.msg}",
            path=str(resolved),
            line=e.lineno,
            column=e.colno,
        ) from e
    try:
        return ChannelFixture.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise FixtureParseError(
            f"Invalid fixture field {location or '<root>'}: {first['msg']}",
            path=str(resolved),
            field=location or None,
        ) from e


def write_atomic(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def analyze(
    pipeline: AnalysisPipeline,
    command: str,
    path: Union[str, Path],
    steps: Optional[int] = None,
) -> AnalysisReport:
    fixture = load_fixture(path)
    return pipeline.run(command, fixture, steps)


def run(
    pipeline: AnalysisPipeline,
    command: str,
    path: Union[str, Path],
    steps: Optional[int] = None,
) -> Outcome:
    """Analyze one fixture, turning failures into error objects."""
    try:
        return analyze(pipeline, command, path, steps)
    except ChannelAnalysisError as e:
        return e.add_context(fixture=str(path))
    except Exception as e:
        return handle_unexpected_error(e, {"fixture": str(path)})


async def run_batch(
    pipeline: AnalysisPipeline,
    command: str,
    paths: Sequence[Union[str, Path]],
    steps: Optional[int] = None,
) -> List[Outcome]:
    """Analyze independent fixtures concurrently in worker threads."""
    tasks = [
        asyncio.to_thread(run, pipeline, command, path, steps)
        for path in paths
    ]
    return list(await asyncio.gather(*tasks))


def render(outcome: Outcome) -> str:
    if isinstance(outcome, AnalysisReport):
        return outcome.model_dump_json(indent=2)
    return json.dumps({"error": outcome.to_dict()}, indent=2)


def summarize(outcome: Outcome) -> str:
    if not isinstance(outcome, AnalysisReport):
        return f"error {outcome.error_code.value}: {outcome.message}"
    parts = [f"{outcome.fixture}: {outcome.command}"]
    if outcome.validation is not None:
        parts.append(
            f"TP={outcome.validation.trace_preserving} "
            f"unital={outcome.validation.unital}"
        )
    if outcome.spectrum is not None:
        parts.append(f"peripheral={len(outcome.spectrum.peripheral)}")
    if outcome.prediction is not None:
        parts.append(
            f"structure={outcome.prediction.structure} "
            f"period_bound={outcome.prediction.period_bound}"
        )
    return ", ".join(parts)


def outcome_exit_code(outcome: Outcome) -> int:
    if isinstance(outcome, AnalysisReport):
        return 0
    return exit_code_for(outcome)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kraus-spectra",
        description="Spectral and algebraic analysis of Kraus channels",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("fixtures", nargs="+", help="Fixture JSON files")
    parser.add_argument("--tol", type=float, default=None,
                        help="Rank/kernel tolerance (default 1e-10)")
    parser.add_argument("--peripheral-eps", type=float, default=None,
                        help="Peripheral band width (default 1e-6)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--no-identity", action="store_true",
                        help="Word basis without the empty word")
    parser.add_argument("--mmax", type=int, default=None,
                        help="Longest word span checked for primitivity")
    parser.add_argument("--steps", type=int, default=None,
                        help="Trajectory length for simulate/report")
    parser.add_argument("--out", type=Path, default=None,
                        help="Report file, or directory for several fixtures")
    parser.add_argument("--config", type=Path, default=None,
                        help="YAML settings file")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    return parser


def _emit(
    outcomes: List[Tuple[str, Outcome]], out: Optional[Path]
) -> None:
    if out is None:
        if len(outcomes) == 1:
            sys.stdout.write(render(outcomes[0][1]) + "\n")
        else:
            documents = [json.loads(render(o)) for _, o in outcomes]
            sys.stdout.write(json.dumps(documents, indent=2) + "\n")
        return
    if len(outcomes) == 1 and not out.is_dir():
        write_atomic(out, render(outcomes[0][1]) + "\n")
        return
    for path, outcome in outcomes:
        write_atomic(out / f"{Path(path).stem}.json", render(outcome) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = AnalysisSettings.from_yaml(
            args.config,
            rank_tol=args.tol,
            peripheral_eps=args.peripheral_eps,
            seed=args.seed,
            m_max=args.mmax,
            simulate_steps=args.steps,
        )
    except ChannelAnalysisError as e:
        configure_logging("INFO")
        logger.error("Configuration failed", error_code=e.error_code.value)
        sys.stdout.write(json.dumps({"error": e.to_dict()}, indent=2) + "\n")
        return exit_code_for(e)

    configure_logging("DEBUG" if args.verbose else settings.log_level)
    pipeline = AnalysisPipeline(
        settings, include_identity=not args.no_identity
    )

    if len(args.fixtures) == 1:
        results = [run(pipeline, args.command, args.fixtures[0])]
    else:
        results = asyncio.run(
            run_batch(pipeline, args.command, args.fixtures)
        )
    outcomes = list(zip(args.fixtures, results))

    for path, outcome in outcomes:
        if not isinstance(outcome, AnalysisReport):
            logger.error(
                "Analysis failed",
                fixture=path,
                error_code=outcome.error_code.value,
                message=outcome.message,
            )
        if sys.stderr.isatty():
            sys.stderr.write(summarize(outcome) + "\n")

    _emit(outcomes, args.out)
    return next(
        (code for code in map(outcome_exit_code, results) if code != 0), 0
    )


if __name__ == "__main__":
    sys.exit(main())
