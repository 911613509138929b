"""JSON reports, per-item prediction CSVs and atomic file writes."""

import csv
import hashlib
import json
import logging
import os
import platform
import tempfile
from collections.abc import Iterator, Mapping, Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from xling_sentiment import __version__
from xling_sentiment.config import EXECUTION_KEYS, ExperimentConfig
from xling_sentiment.metrics import MetricReport

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
PREDICTION_COLUMNS = (
    "run",
    "source_token",
    "target_token",
    "dimension",
    "gold",
    "predicted",
    "neighbors",
)


@dataclass(frozen=True)
class PredictionRow:
    run: int
    source_token: str
    target_token: str
    dimension: str
    gold: str
    predicted: str
    neighbors: tuple[str, ...] = ()

    def as_csv_row(self) -> list[str]:
        return [
            str(self.run),
            self.source_token,
            self.target_token,
            self.dimension,
            self.gold,
            self.predicted,
            "|".join(self.neighbors),
        ]


def file_digest(path: str | Path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def component_versions() -> dict[str, str]:
    return {
        "xling_sentiment": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def build_report(
    experiment: str,
    config: ExperimentConfig,
    metrics: Sequence[MetricReport],
    details: Mapping[str, Any],
    inputs: Sequence[str],
) -> dict[str, Any]:
    """
    Assemble a versioned report.

    ``inputs`` names the config path fields the experiment read; each is
    recorded with the path string as configured and the file's digest.
    """
    resolved = {
        key: value for key, value in config.to_dict().items() if key not in EXECUTION_KEYS
    }
    recorded_inputs: dict[str, dict[str, str]] = {}
    for name in inputs:
        value = getattr(config, name)
        if value is None:
            continue
        recorded_inputs[name] = {"path": resolved[name], "sha256": file_digest(value)}
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "config": resolved,
        "seed": config.seed,
        "versions": component_versions(),
        "inputs": recorded_inputs,
        "metrics": [metric.to_dict() for metric in metrics],
        "details": dict(details),
    }


@contextmanager
def atomic_path(path: str | Path) -> Iterator[Path]:
    """
    Yield a temporary sibling of ``path`` and move it into place on success.

    The temporary file is removed if the block raises.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    os.close(fd)
    tmp = Path(tmp_name)
    try:
        yield tmp
        os.replace(tmp, target)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def dumps_report(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json_atomic(payload: Mapping[str, Any], path: str | Path) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text(dumps_report(payload), encoding="utf-8")
    logger.info("Wrote %s", path)


def write_predictions_csv(rows: Sequence[PredictionRow], path: str | Path) -> None:
    with atomic_path(path) as tmp:
        with tmp.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(PREDICTION_COLUMNS)
            for row in rows:
                writer.writerow(row.as_csv_row())
    logger.info("Wrote %d prediction rows to %s", len(rows), path)


def write_feature_csv(
    labels: Sequence[int],
    token_counts: Sequence[int],
    features: np.ndarray,
    path: str | Path,
) -> None:
    """One row per review: ``label, token_count, v0 .. v{F-1}``."""
    width = features.shape[1] if features.ndim == 2 else 0
    with atomic_path(path) as tmp:
        with tmp.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["label", "token_count"] + [f"v{i}" for i in range(width)])
            for label, count, row in zip(labels, token_counts, features, strict=True):
                writer.writerow([label, count] + [format(float(v), ".17g") for v in row])
    logger.info("Wrote %d feature rows to %s", len(labels), path)
