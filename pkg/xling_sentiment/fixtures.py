"""
Seeded synthetic datasets for desk-scale end-to-end runs.

The target space is Gaussian; the source space is the target space under a
random orthogonal rotation plus optional Gaussian noise, so the exact
translation matrix is known. ANEW-style ratings are affine in hidden
directions of the target space, polarity words are the extremes of the
valence direction, and each synthetic review draws all its words from one
valence band whose index is the star label.
"""

import csv
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from xling_sentiment.config import ExperimentConfig
from xling_sentiment.data_ingest import ANEW_COLUMNS, STAR_LABELS
from xling_sentiment.embedding_store import VectorSpace, write_vector_space
from xling_sentiment.errors import ConfigError
from xling_sentiment.reporting import atomic_path, dumps_report, file_digest

logger = logging.getLogger(__name__)

SOURCE_TAG = "src"
TARGET_TAG = "en"
RATING_LOW, RATING_HIGH = 1.5, 8.5

FILES = {
    "source_space": "source.vec",
    "target_space": "target.vec",
    "lexicon": "lexicon.tsv",
    "positive_words": "positive.txt",
    "negative_words": "negative.txt",
    "anew": "anew.csv",
    "target_reviews": "target_reviews.jsonl",
    "source_reviews": "source_reviews.jsonl",
    "validation_reviews": "validation_reviews.jsonl",
}


@dataclass(frozen=True)
class FixtureSizes:
    words: int = 200
    dim: int = 10
    noise: float = 0.0
    polarity_words: int = 40
    anew_words: int = 120
    reviews: int = 250
    review_length: int = 6

    def __post_init__(self) -> None:
        if self.words < 2:
            raise ConfigError(f"fixture_words must be at least 2, got {self.words}")
        if self.dim < 1:
            raise ConfigError(f"fixture_dim must be positive, got {self.dim}")
        if self.noise < 0:
            raise ConfigError(f"fixture_noise must be non-negative, got {self.noise}")
        if self.polarity_words < 4 or self.polarity_words > self.words:
            raise ConfigError(
                f"fixture_polarity_words must lie in [4, {self.words}], got {self.polarity_words}"
            )
        if self.anew_words < 2 or self.anew_words > self.words:
            raise ConfigError(
                f"fixture_anew_words must lie in [2, {self.words}], got {self.anew_words}"
            )
        if self.words < len(STAR_LABELS):
            raise ConfigError(f"fixture_words must be at least {len(STAR_LABELS)} for reviews")
        if self.reviews < len(STAR_LABELS):
            raise ConfigError(
                f"fixture_reviews must be at least {len(STAR_LABELS)}, got {self.reviews}"
            )
        if self.review_length < 1:
            raise ConfigError(f"fixture_review_length must be positive, got {self.review_length}")

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "FixtureSizes":
        return cls(
            words=config.fixture_words,
            dim=config.fixture_dim,
            noise=config.fixture_noise,
            polarity_words=config.fixture_polarity_words,
            anew_words=config.fixture_anew_words,
            reviews=config.fixture_reviews,
            review_length=config.fixture_review_length,
        )


def _random_rotation(rng: np.random.Generator, dim: int) -> NDArray[np.float64]:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def _scale_to_ratings(projection: NDArray[np.float64]) -> NDArray[np.float64]:
    low, high = float(projection.min()), float(projection.max())
    if high == low:
        return np.full_like(projection, (RATING_LOW + RATING_HIGH) / 2)
    return RATING_LOW + (RATING_HIGH - RATING_LOW) * (projection - low) / (high - low)


def _reviews(
    rng: np.random.Generator,
    bands: list[NDArray[np.intp]],
    vocab: tuple[str, ...],
    per_class: int,
    length: int,
) -> list[dict[str, Any]]:
    records = []
    for label, band in zip(STAR_LABELS, bands, strict=True):
        for _ in range(per_class):
            words = rng.choice(band, size=length, replace=True)
            records.append({"label": label, "tokens": [vocab[i] for i in words]})
    return [records[i] for i in rng.permutation(len(records))]


def _write_lines(path: Path, lines: list[str]) -> None:
    with atomic_path(path) as tmp:
        tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def make_fixtures(
    out_dir: str | Path, seed: int = 0, sizes: FixtureSizes | None = None
) -> dict[str, Any]:
    """
    Write the synthetic dataset into ``out_dir`` and return its manifest.

    Output is a pure function of ``(seed, sizes)``: the same arguments give
    byte-identical files.
    """
    sizes = sizes or FixtureSizes()
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    target_matrix = rng.standard_normal((sizes.words, sizes.dim))
    rotation = _random_rotation(rng, sizes.dim)
    noise = rng.standard_normal((sizes.words, sizes.dim))
    source_matrix = target_matrix @ rotation + sizes.noise * noise

    width = len(str(sizes.words - 1))
    target_vocab = tuple(f"{TARGET_TAG}_w{i:0{width}d}" for i in range(sizes.words))
    source_vocab = tuple(f"{SOURCE_TAG}_w{i:0{width}d}" for i in range(sizes.words))
    write_vector_space(
        VectorSpace(TARGET_TAG, target_vocab, target_matrix), out_dir / FILES["target_space"]
    )
    write_vector_space(
        VectorSpace(SOURCE_TAG, source_vocab, source_matrix), out_dir / FILES["source_space"]
    )
    _write_lines(
        out_dir / FILES["lexicon"],
        [f"{s}\t{t}" for s, t in zip(source_vocab, target_vocab, strict=True)],
    )

    directions = rng.standard_normal((len(ANEW_COLUMNS) - 1, sizes.dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    ratings = np.column_stack([_scale_to_ratings(target_matrix @ u) for u in directions])
    valence = ratings[:, 0]

    by_valence = np.argsort(valence, kind="stable")
    half = sizes.polarity_words // 2
    comment = f"; synthetic polarity words, seed {seed}"
    _write_lines(
        out_dir / FILES["positive_words"],
        [comment, ""] + [target_vocab[i] for i in by_valence[::-1][:half]],
    )
    _write_lines(
        out_dir / FILES["negative_words"],
        [comment, ""] + [target_vocab[i] for i in by_valence[:half]],
    )

    anew_rows = np.sort(rng.choice(sizes.words, size=sizes.anew_words, replace=False))
    with atomic_path(out_dir / FILES["anew"]) as tmp:
        with tmp.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(ANEW_COLUMNS)
            for i in anew_rows:
                writer.writerow([target_vocab[i]] + [format(float(v), ".17g") for v in ratings[i]])

    bands = np.array_split(by_valence, len(STAR_LABELS))
    per_class = sizes.reviews // len(STAR_LABELS)
    review_sets = {
        "target_reviews": _reviews(rng, bands, target_vocab, per_class, sizes.review_length),
        "source_reviews": _reviews(rng, bands, source_vocab, per_class, sizes.review_length),
        "validation_reviews": _reviews(
            rng, bands, source_vocab, max(1, per_class // 2), sizes.review_length
        ),
    }
    for name, records in review_sets.items():
        _write_lines(out_dir / FILES[name], [json.dumps(r, sort_keys=True) for r in records])

    _write_lines(
        out_dir / "experiment.env",
        [
            f"# synthetic fixture, seed {seed}",
            f"source_language={SOURCE_TAG}",
            f"target_language={TARGET_TAG}",
            f"source_space={FILES['source_space']}",
            f"target_space={FILES['target_space']}",
            f"lexicon={FILES['lexicon']}",
            f"positive_words={FILES['positive_words']}",
            f"negative_words={FILES['negative_words']}",
            f"polarity_lexicon={FILES['lexicon']}",
            f"anew={FILES['anew']}",
            f"anew_lexicon={FILES['lexicon']}",
            f"target_reviews={FILES['target_reviews']}",
            f"source_reviews={FILES['source_reviews']}",
            f"validation_reviews={FILES['validation_reviews']}",
            f"seed={seed}",
        ],
    )

    manifest = {
        "seed": seed,
        "sizes": asdict(sizes),
        "generator": "numpy PCG64",
        "source_language": SOURCE_TAG,
        "target_language": TARGET_TAG,
        "reviews_per_class": per_class,
        "files": {
            name: {"path": filename, "sha256": file_digest(out_dir / filename)}
            for name, filename in sorted(FILES.items())
        },
    }
    with atomic_path(out_dir / "manifest.json") as tmp:
        tmp.write_text(dumps_report(manifest), encoding="utf-8")
    logger.info(
        "Wrote fixtures (seed %d, %d words, dim %d) to %s", seed, sizes.words, sizes.dim, out_dir
    )
    return manifest
