"""
Command-line entry point.

    xling-sentiment [--log-level L] <subcommand> [--config PATH] [--set key=value ...]
                    [--output PATH] [--predictions PATH]

Failures print one JSON object ``{"error": {"module", "type", "cause"}}`` on
stderr and exit with status 1.
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import NoReturn

from xling_sentiment import __version__
from xling_sentiment.alignment import save_translation_matrix
from xling_sentiment.config import ExperimentConfig, default_log_level
from xling_sentiment.errors import ConfigError, XlingSentimentError
from xling_sentiment.fixtures import FixtureSizes, make_fixtures
from xling_sentiment.models import save_model
from xling_sentiment.pipelines import (
    EXPERIMENTS,
    ExperimentResult,
    run_featurize,
    run_fit_align,
    run_lexicon_sweep,
    run_translate,
)
from xling_sentiment.reporting import (
    atomic_path,
    write_feature_csv,
    write_json_atomic,
    write_predictions_csv,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser, output_help: str | None) -> None:
    parser.add_argument("--config", type=Path, help="experiment config file (KEY=value lines)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key; may be repeated",
    )
    if output_help is not None:
        parser.add_argument("--output", type=Path, help=output_help)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="xling-sentiment",
        description="Cross-lingual sentiment transfer through a linear translation matrix.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default=default_log_level(),
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="<subcommand>")

    fit = subparsers.add_parser("fit-align", help="fit the translation matrix")
    _add_common(fit, "translation matrix file; the report goes to <output>.report.json")

    translate = subparsers.add_parser("translate", help="nearest target words of a source word")
    _add_common(translate, None)
    translate.add_argument("--token", required=True)
    translate.add_argument("--k", type=int, default=None, help="defaults to translate_k")

    for name, help_text in (
        ("eval-align", "P@1 / P@5 of the translation matrix"),
        ("eval-binary", "binary polarity transfer"),
        ("eval-anew", "valence/arousal/dominance transfer"),
        ("eval-reviews", "review star classification transfer"),
        ("sweep", "repeat an evaluation over several lexicon sizes"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        _add_common(sub, "JSON report (default: report.json)")
        sub.add_argument("--predictions", type=Path, help="per-item prediction CSV")
        if name == "eval-reviews":
            sub.add_argument(
                "--save-models",
                type=Path,
                metavar="DIR",
                help="write the review classifier and the lexicon regressors to DIR",
            )

    featurize = subparsers.add_parser("featurize", help="sentiment vectors of source reviews")
    _add_common(featurize, "feature CSV (default: features.csv)")

    fixtures = subparsers.add_parser("make-fixtures", help="write a synthetic dataset")
    _add_common(fixtures, "output directory")
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(format=LOG_FORMAT, datefmt=LOG_DATE_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)


def _write_result(
    result: ExperimentResult, config: ExperimentConfig, args: argparse.Namespace
) -> None:
    output = args.output or Path("report.json")
    write_json_atomic(result.to_report(config), output)
    if args.predictions is not None:
        write_predictions_csv(result.predictions, args.predictions)


def _cmd_fit_align(config: ExperimentConfig, args: argparse.Namespace) -> None:
    if args.output is None:
        raise ConfigError("fit-align needs --output for the translation matrix")
    W, result = run_fit_align(config)
    with atomic_path(args.output) as tmp:
        save_translation_matrix(W, tmp)
    logger.info("Wrote translation matrix to %s", args.output)
    write_json_atomic(
        result.to_report(config), args.output.with_name(args.output.name + ".report.json")
    )


def _cmd_translate(config: ExperimentConfig, args: argparse.Namespace) -> None:
    k = args.k if args.k is not None else config.translate_k
    for neighbor in run_translate(config, args.token, k):
        print(f"{neighbor.token}\t{neighbor.similarity:.6f}")


def _cmd_evaluate(config: ExperimentConfig, args: argparse.Namespace) -> None:
    result = EXPERIMENTS[args.command](config)
    _write_result(result, config, args)
    model_dir = getattr(args, "save_models", None)
    if model_dir is not None:
        for name, model in result.models.items():
            with atomic_path(model_dir / f"{name}.model") as tmp:
                save_model(model, tmp)
        logger.info("Wrote %d models to %s", len(result.models), model_dir)


def _cmd_sweep(config: ExperimentConfig, args: argparse.Namespace) -> None:
    _write_result(run_lexicon_sweep(config), config, args)


def _cmd_featurize(config: ExperimentConfig, args: argparse.Namespace) -> None:
    table = run_featurize(config)
    write_feature_csv(
        table.labels, table.token_counts, table.features, args.output or Path("features.csv")
    )


def _cmd_make_fixtures(config: ExperimentConfig, args: argparse.Namespace) -> None:
    if args.output is None:
        raise ConfigError("make-fixtures needs --output for the fixture directory")
    make_fixtures(args.output, config.seed, FixtureSizes.from_config(config))


COMMANDS: dict[str, Callable[[ExperimentConfig, argparse.Namespace], None]] = {
    "fit-align": _cmd_fit_align,
    "translate": _cmd_translate,
    "eval-align": _cmd_evaluate,
    "eval-binary": _cmd_evaluate,
    "eval-anew": _cmd_evaluate,
    "eval-reviews": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "featurize": _cmd_featurize,
    "make-fixtures": _cmd_make_fixtures,
}


def _report_error(module: str, exc: BaseException) -> int:
    payload = {"error": {"module": module, "type": type(exc).__name__, "cause": str(exc)}}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return 1


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    _configure_logging(args.log_level)
    try:
        config = ExperimentConfig.from_file(args.config, args.overrides)
        COMMANDS[args.command](config, args)
    except XlingSentimentError as exc:
        logger.debug("Command failed", exc_info=True)
        return _report_error(exc.module, exc)
    except OSError as exc:
        logger.debug("Command failed", exc_info=True)
        return _report_error("io", exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
