"""
Loaders and sampling protocols for the word lists and datasets.

Every loader rejects malformed rows with the file and line number instead of
repairing them. :func:`filter_by_vocabulary` is the only step that drops
data, and it records every dropped pair in a :class:`DiscardReport`.
"""

import csv
import json
import logging
from collections.abc import Callable, Sequence
from contextlib import closing
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from xling_sentiment.embedding_store import VectorSpace, iter_text_lines
from xling_sentiment.errors import DataFormatError, SamplingError

logger = logging.getLogger(__name__)

ANEW_COLUMNS = ("word", "valence", "arousal", "dominance")
ANEW_MIN, ANEW_MAX = 1.0, 9.0
STAR_LABELS = (1, 2, 3, 4, 5)

Tokenizer = Callable[[str], list[str]]


@dataclass(frozen=True)
class BilingualLexicon:
    """Ordered (source, target) word pairs; one translation per source word."""

    pairs: tuple[tuple[str, str], ...]
    source_language: str
    target_language: str

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for source, target in self.pairs:
            if not source or not target:
                raise DataFormatError(f"empty token in pair ({source!r}, {target!r})")
            if source in seen:
                raise DataFormatError(f"duplicate source token {source!r}")
            seen.add(source)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def sources(self) -> list[str]:
        return [source for source, _ in self.pairs]

    @property
    def targets(self) -> list[str]:
        return [target for _, target in self.pairs]


class DiscardReason(str, Enum):
    SOURCE_MISSING = "source_missing"
    TARGET_MISSING = "target_missing"
    BOTH_MISSING = "both_missing"
    MULTI_WORD = "multi_word"


@dataclass(frozen=True)
class DiscardedPair:
    source: str
    target: str
    reason: DiscardReason


@dataclass(frozen=True)
class DiscardReport:
    discarded: tuple[DiscardedPair, ...] = ()

    def __len__(self) -> int:
        return len(self.discarded)

    def counts(self) -> dict[str, int]:
        """Number of discarded pairs per reason."""
        totals = {reason.value: 0 for reason in DiscardReason}
        for item in self.discarded:
            totals[item.reason.value] += 1
        return totals


@dataclass(frozen=True)
class PolarityExample:
    token: str
    label: int

    def __post_init__(self) -> None:
        if self.label not in (-1, 1):
            raise DataFormatError(f"polarity label must be -1 or +1, got {self.label}")


@dataclass(frozen=True)
class AnewRating:
    token: str
    valence: float
    arousal: float
    dominance: float

    def __post_init__(self) -> None:
        for name in ANEW_COLUMNS[1:]:
            value = getattr(self, name)
            if not ANEW_MIN <= value <= ANEW_MAX:
                raise DataFormatError(
                    f"{name} for {self.token!r} is {value}, outside [{ANEW_MIN:g}, {ANEW_MAX:g}]"
                )

    def value(self, dimension: str) -> float:
        if dimension not in ANEW_COLUMNS[1:]:
            raise DataFormatError(f"unknown ANEW dimension {dimension!r}")
        return float(getattr(self, dimension))


@dataclass(frozen=True)
class ReviewRecord:
    tokens: tuple[str, ...]
    label: int

    def __post_init__(self) -> None:
        if self.label not in STAR_LABELS:
            raise DataFormatError(f"review label must be in 1..5, got {self.label}")


@dataclass
class JoinReport:
    """Word-list entries that could not be paired through a lexicon."""

    untranslated: list[str] = field(default_factory=list)
    shadowed_sources: list[tuple[str, str]] = field(default_factory=list)


def _read_lines(path: Path) -> list[str]:
    return [line for _, line in iter_text_lines(path, DataFormatError)]


def load_lexicon(path: str | Path, source_tag: str, target_tag: str) -> BilingualLexicon:
    """Parse a ``source<TAB>target`` file into a :class:`BilingualLexicon`."""
    path = Path(path)
    pairs: list[tuple[str, str]] = []
    first_seen: dict[str, int] = {}
    for line_no, line in enumerate(_read_lines(path), start=1):
        fields = line.split("\t")
        if len(fields) != 2:
            reason = "missing tab" if len(fields) == 1 else "more than one tab"
            raise DataFormatError(f"{path}: {reason}", line=line_no)
        source, target = fields
        if not source or not target:
            raise DataFormatError(f"{path}: empty field", line=line_no)
        if source in first_seen:
            raise DataFormatError(
                f"{path}: duplicate source token {source!r} "
                f"(first seen on line {first_seen[source]})",
                line=line_no,
            )
        first_seen[source] = line_no
        pairs.append((source, target))

    logger.info("Loaded %d lexicon pairs from %s", len(pairs), path)
    return BilingualLexicon(tuple(pairs), source_tag, target_tag)


def filter_by_vocabulary(
    lex: BilingualLexicon, source_space: VectorSpace, target_space: VectorSpace
) -> tuple[BilingualLexicon, DiscardReport]:
    """Keep the pairs whose tokens are both in vocabulary; record everything dropped."""
    for tag, space, side in (
        (lex.source_language, source_space, "source"),
        (lex.target_language, target_space, "target"),
    ):
        if space.language_tag and tag and space.language_tag != tag:
            raise DataFormatError(
                f"{side} language of lexicon is {tag!r} but the space is {space.language_tag!r}"
            )

    kept: list[tuple[str, str]] = []
    discarded: list[DiscardedPair] = []
    for source, target in lex.pairs:
        if any(ch.isspace() for ch in source + target):
            discarded.append(DiscardedPair(source, target, DiscardReason.MULTI_WORD))
            continue
        has_source, has_target = source in source_space, target in target_space
        if has_source and has_target:
            kept.append((source, target))
        elif has_target:
            discarded.append(DiscardedPair(source, target, DiscardReason.SOURCE_MISSING))
        elif has_source:
            discarded.append(DiscardedPair(source, target, DiscardReason.TARGET_MISSING))
        else:
            discarded.append(DiscardedPair(source, target, DiscardReason.BOTH_MISSING))

    report = DiscardReport(tuple(discarded))
    if discarded:
        logger.info(
            "Discarded %d of %d lexicon pairs: %s", len(discarded), len(lex), report.counts()
        )
    filtered = BilingualLexicon(tuple(kept), lex.source_language, lex.target_language)
    return filtered, report


def sample_lexicon(lex: BilingualLexicon, n: int, seed: int) -> BilingualLexicon:
    """Uniform random subset of ``n`` pairs without replacement, kept in lexicon order."""
    if n < 1:
        raise SamplingError(f"sample size must be positive, got {n}")
    if n > len(lex):
        raise SamplingError(f"cannot sample {n} pairs from a lexicon of {len(lex)}")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(lex), size=n, replace=False))
    return BilingualLexicon(
        tuple(lex.pairs[i] for i in chosen), lex.source_language, lex.target_language
    )


def _read_word_list(path: Path) -> list[tuple[int, str]]:
    """Tokens with their line numbers; ``;`` comments and blank lines are skipped."""
    words: list[tuple[int, str]] = []
    first_seen: dict[str, int] = {}
    for line_no, line in enumerate(_read_lines(path), start=1):
        token = line.strip()
        if not token or token.startswith(";"):
            continue
        if token in first_seen:
            raise DataFormatError(
                f"{path}: duplicate token {token!r} (first seen on line {first_seen[token]})",
                line=line_no,
            )
        first_seen[token] = line_no
        words.append((line_no, token))
    return words


def load_polarity_list(
    positive_path: str | Path, negative_path: str | Path
) -> list[PolarityExample]:
    """Positives (+1) followed by negatives (-1); a token in both files is an error."""
    positive_path, negative_path = Path(positive_path), Path(negative_path)
    positives = _read_word_list(positive_path)
    negatives = _read_word_list(negative_path)

    positive_lines = {token: line_no for line_no, token in positives}
    for line_no, token in negatives:
        if token in positive_lines:
            raise DataFormatError(
                f"{token!r} is listed as positive ({positive_path}:{positive_lines[token]}) "
                f"and negative ({negative_path}:{line_no})"
            )

    examples = [PolarityExample(token, 1) for _, token in positives]
    examples += [PolarityExample(token, -1) for _, token in negatives]
    logger.info("Loaded %d positive and %d negative words", len(positives), len(negatives))
    return examples


def balance_classes(examples: Sequence[PolarityExample], seed: int) -> list[PolarityExample]:
    """Downsample the majority class to the minority count, then shuffle."""
    positives = [ex for ex in examples if ex.label == 1]
    negatives = [ex for ex in examples if ex.label == -1]
    if not positives or not negatives:
        missing = "positive" if not positives else "negative"
        raise SamplingError(f"cannot balance classes: no {missing} examples")

    rng = np.random.default_rng(seed)
    minority = min(len(positives), len(negatives))
    if len(positives) > minority:
        keep = np.sort(rng.choice(len(positives), size=minority, replace=False))
        positives = [positives[i] for i in keep]
    elif len(negatives) > minority:
        keep = np.sort(rng.choice(len(negatives), size=minority, replace=False))
        negatives = [negatives[i] for i in keep]

    combined = positives + negatives
    return [combined[i] for i in rng.permutation(len(combined))]


def load_anew(path: str | Path) -> list[AnewRating]:
    """Parse an ANEW CSV with the header ``word,valence,arousal,dominance``."""
    path = Path(path)
    ratings: list[AnewRating] = []
    first_seen: dict[str, int] = {}
    with closing(iter_text_lines(path, DataFormatError)) as lines:
        reader = csv.reader(line for _, line in lines)
        header = next(reader, None)
        if header is None or tuple(column.strip() for column in header) != ANEW_COLUMNS:
            raise DataFormatError(
                f"{path}: header must be {','.join(ANEW_COLUMNS)}, got {header}", line=1
            )
        for row in reader:
            line_no = reader.line_num
            if len(row) != len(ANEW_COLUMNS):
                raise DataFormatError(
                    f"{path}: expected {len(ANEW_COLUMNS)} columns, found {len(row)}",
                    line=line_no,
                )
            token = row[0]
            if not token:
                raise DataFormatError(f"{path}: empty word", line=line_no)
            if token in first_seen:
                raise DataFormatError(
                    f"{path}: duplicate word {token!r} (first seen on line {first_seen[token]})",
                    line=line_no,
                )
            first_seen[token] = line_no
            values: list[float] = []
            for name, raw in zip(ANEW_COLUMNS[1:], row[1:], strict=True):
                try:
                    values.append(float(raw))
                except ValueError as exc:
                    raise DataFormatError(
                        f"{path}: non-numeric {name} {raw!r} for {token!r}", line=line_no
                    ) from exc
            try:
                ratings.append(AnewRating(token, *values))
            except DataFormatError as exc:
                raise DataFormatError(f"{path}: {exc}", line=line_no) from exc

    logger.info("Loaded %d ANEW ratings from %s", len(ratings), path)
    return ratings


def whitespace_tokenize(text: str) -> list[str]:
    """Split on runs of whitespace. Only meaningful for space-delimited languages."""
    return text.split()


def load_reviews(path: str | Path, tokenizer: Tokenizer | None = None) -> list[ReviewRecord]:
    """
    Parse a JSON-lines review file.

    Each line is an object with ``"tokens"`` (list of strings) and ``"label"``
    (integer 1-5). When a ``tokenizer`` is given, a line may carry ``"text"``
    instead of ``"tokens"``.
    """
    path = Path(path)
    reviews: list[ReviewRecord] = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: malformed JSON: {exc.msg}", line=line_no) from exc
        if not isinstance(obj, dict):
            raise DataFormatError(f"{path}: expected a JSON object", line=line_no)

        if "tokens" in obj:
            tokens = obj["tokens"]
            if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
                raise DataFormatError(f"{path}: 'tokens' must be a list of strings", line=line_no)
        elif tokenizer is not None and isinstance(obj.get("text"), str):
            tokens = tokenizer(obj["text"])
        else:
            raise DataFormatError(f"{path}: missing field 'tokens'", line=line_no)

        if "label" not in obj:
            raise DataFormatError(f"{path}: missing field 'label'", line=line_no)
        label = obj["label"]
        if isinstance(label, bool) or not isinstance(label, int):
            raise DataFormatError(f"{path}: 'label' must be an integer", line=line_no)
        if label not in STAR_LABELS:
            raise DataFormatError(f"{path}: label {label} outside 1..5", line=line_no)
        reviews.append(ReviewRecord(tuple(tokens), label))

    logger.info("Loaded %d reviews from %s", len(reviews), path)
    return reviews


def join_word_list(
    target_tokens: Sequence[str], lex: BilingualLexicon
) -> tuple[dict[str, str], JoinReport]:
    """
    Map target-language words to a source-language translation.

    Word lists (polarity words, ANEW) are target-language; the lexicon is
    ``source -> target``. When several sources translate to the same target,
    the first in lexicon order wins and the others are reported.
    """
    source_for: dict[str, str] = {}
    report = JoinReport()
    for source, target in lex.pairs:
        if target in source_for:
            report.shadowed_sources.append((source, target))
        else:
            source_for[target] = source

    joined: dict[str, str] = {}
    for token in target_tokens:
        if token in source_for:
            joined[token] = source_for[token]
        else:
            report.untranslated.append(token)
    if report.untranslated:
        logger.warning("%d word-list entries have no translation", len(report.untranslated))
    return joined, report
