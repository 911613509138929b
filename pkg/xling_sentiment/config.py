"""
Experiment configuration.

Configs are dotenv-style ``KEY=value`` files. Values resolve as field defaults,
then the file, then ``--set key=value`` overrides.
"""

import dataclasses
import io
import logging
import math
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from xling_sentiment.embedding_store import iter_text_lines
from xling_sentiment.errors import ConfigError

logger = logging.getLogger(__name__)

ANEW_DIMENSIONS = ("valence", "arousal", "dominance")
TOKENIZERS = ("none", "whitespace")
SWEEPABLE_EXPERIMENTS = ("eval-align", "eval-binary", "eval-anew")
# Settings that change how a run executes but never what it computes.
EXECUTION_KEYS = frozenset({"workers"})

_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}

OptionalPath = Path | None


def default_log_level() -> str:
    """Log level from ``XLING_LOG_LEVEL``, ``INFO`` when unset."""
    return os.getenv("XLING_LOG_LEVEL", "INFO").upper()


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob an experiment reads. Path fields are ``None`` when unset."""

    source_language: str = "src"
    target_language: str = "en"

    source_space: OptionalPath = None
    target_space: OptionalPath = None
    lexicon: OptionalPath = None
    matrix: OptionalPath = None
    lexicon_size: int = 0
    align_reverse: bool = False

    positive_words: OptionalPath = None
    negative_words: OptionalPath = None
    polarity_lexicon: OptionalPath = None
    anew: OptionalPath = None
    anew_lexicon: OptionalPath = None
    target_reviews: OptionalPath = None
    source_reviews: OptionalPath = None
    validation_reviews: OptionalPath = None
    review_tokenizer: str = "none"
    review_feature_dims: tuple[str, ...] = ("valence",)

    seed: int = 0
    run_count: int = 10
    align_train_fraction: float = 0.9
    binary_train_fraction: float = 0.8
    anew_train_fraction: float = 0.75
    workers: int = 1
    translate_k: int = 5
    shuffle_labels: bool = False

    svm_l2: float = 1e-4
    svm_epochs: int = 100
    svm_eta0: float = 1.0
    ridge_alpha_1: float = 1.0
    ridge_alpha_2: float = 1.0
    ridge_lambda_1: float = 1e-6
    ridge_lambda_2: float = 1e-6
    ridge_max_iter: int = 300
    ridge_tol: float = 1e-4
    logistic_l2: float = 1e-4
    logistic_max_iter: int = 500
    logistic_tol: float = 1e-9
    review_l2_grid: tuple[float, ...] = ()

    sweep_sizes: tuple[int, ...] = ()
    sweep_experiment: str = "eval-align"

    fixture_words: int = 200
    fixture_dim: int = 10
    fixture_noise: float = 0.0
    fixture_polarity_words: int = 40
    fixture_anew_words: int = 120
    fixture_reviews: int = 250
    fixture_review_length: int = 6

    # Value strings as written in the file or override, for reports.
    given: Mapping[str, str] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        for name in ("run_count", "workers", "translate_k", "svm_epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lexicon_size < 0:
            raise ConfigError(f"lexicon_size must be non-negative, got {self.lexicon_size}")
        for name in ("align_train_fraction", "binary_train_fraction", "anew_train_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")
        if self.review_tokenizer not in TOKENIZERS:
            raise ConfigError(
                f"review_tokenizer must be one of {', '.join(TOKENIZERS)}, "
                f"got {self.review_tokenizer!r}"
            )
        dims = self.review_feature_dims
        if not dims or len(set(dims)) != len(dims) or not set(dims) <= set(ANEW_DIMENSIONS):
            raise ConfigError(
                f"review_feature_dims must be distinct values from {', '.join(ANEW_DIMENSIONS)}, "
                f"got {','.join(dims)!r}"
            )
        if self.sweep_experiment not in SWEEPABLE_EXPERIMENTS:
            raise ConfigError(
                f"sweep_experiment must be one of {', '.join(SWEEPABLE_EXPERIMENTS)}, "
                f"got {self.sweep_experiment!r}"
            )
        if any(size < 1 for size in self.sweep_sizes):
            raise ConfigError("sweep_sizes must be positive")
        if any(value < 0 for value in self.review_l2_grid):
            raise ConfigError("review_l2_grid values must be non-negative")

    @classmethod
    def from_file(
        cls, path: str | Path | None = None, overrides: Iterable[str] = ()
    ) -> "ExperimentConfig":
        """
        Load a config file and apply ``key=value`` overrides on top.

        Relative paths in the file resolve against the file's directory; relative
        paths in overrides resolve against the working directory.
        """
        raw: dict[str, tuple[str, Path]] = {}
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise FileNotFoundError(f"config file not found at {path}")
            text = "\n".join(line for _, line in iter_text_lines(path, ConfigError))
            for key, value in dotenv_values(stream=io.StringIO(text), interpolate=False).items():
                if value is None:
                    raise ConfigError(f"{path}: key {key!r} has no value")
                raw[key.lower()] = (value, path.parent)
        for item in overrides:
            key, sep, value = item.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"override {item!r} is not of the form key=value")
            raw[key.strip().lower()] = (value.strip(), Path.cwd())
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: Mapping[str, tuple[str, Path]]) -> "ExperimentConfig":
        """Build from ``{key: (value string, base directory for relative paths)}``."""
        known = {f.name: f for f in dataclasses.fields(cls) if f.name != "given"}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

        values: dict[str, Any] = {}
        for key, (text, base) in raw.items():
            values[key] = _parse_value(key, text, known[key].type, base)
        config = cls(**values, given={key: text for key, (text, _) in raw.items()})
        logger.debug("Resolved config: %s", config.to_dict())
        return config

    def with_values(self, **values: Any) -> "ExperimentConfig":
        """Copy with fields replaced, recording them as given."""
        given = dict(self.given)
        for key, value in values.items():
            given[key] = _render(value)
        return dataclasses.replace(self, **values, given=given)

    def require(self, *names: str) -> None:
        """Check that the named path fields are set and point at existing files."""
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ConfigError(f"config key {name!r} is required for this experiment")
            if not Path(value).exists():
                raise ConfigError(f"config key {name!r} points at a missing file: {value}")

    def to_dict(self) -> dict[str, str]:
        """Every field as the string a config file would carry."""
        rendered: dict[str, str] = {}
        for f in dataclasses.fields(self):
            if f.name == "given":
                continue
            if f.name in self.given:
                rendered[f.name] = self.given[f.name]
            else:
                rendered[f.name] = _render(getattr(self, f.name))
        return rendered


def _render(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_render(item) for item in value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text.strip()!r}")
    return value


def _parse_value(key: str, text: str, annotation: Any, base: Path) -> Any:
    try:
        if annotation is bool:
            lowered = text.strip().lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"expected true/false, got {text!r}")
        if annotation is int:
            return int(text)
        if annotation is float:
            return _parse_float(text)
        if annotation is str:
            return text.strip()
        if annotation == OptionalPath:
            if not text.strip():
                return None
            candidate = Path(text.strip()).expanduser()
            return candidate if candidate.is_absolute() else base / candidate
        if annotation == tuple[str, ...]:
            return tuple(item.strip() for item in text.split(",") if item.strip())
        if annotation == tuple[int, ...]:
            return tuple(int(item) for item in text.split(",") if item.strip())
        if annotation == tuple[float, ...]:
            return tuple(_parse_float(item) for item in text.split(",") if item.strip())
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key!r}: {exc}") from exc
    raise ConfigError(f"no parser for config key {key!r}")
