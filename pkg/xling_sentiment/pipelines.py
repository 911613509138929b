"""
End-to-end experiments.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult`. Monte Carlo runs are independent: run ``r`` draws
everything random from ``(seed, r)``, so serial and threaded execution
produce identical results.

Sentiment models are always trained on target-language vectors and tested
on source-language vectors mapped through the translation matrix W.
"""

import dataclasses
import logging
from collections import Counter
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from numpy.typing import NDArray

from xling_sentiment.alignment import (
    TranslationMatrix,
    build_aligned_pairs,
    check_spaces,
    fit_translation_matrix,
    load_translation_matrix,
    map_vectors,
    reverse_lexicon,
    translate_token,
)
from xling_sentiment.config import ANEW_DIMENSIONS, ExperimentConfig
from xling_sentiment.data_ingest import (
    STAR_LABELS,
    AnewRating,
    BilingualLexicon,
    DiscardReport,
    ReviewRecord,
    Tokenizer,
    balance_classes,
    filter_by_vocabulary,
    join_word_list,
    load_anew,
    load_lexicon,
    load_polarity_list,
    load_reviews,
    sample_lexicon,
    whitespace_tokenize,
)
from xling_sentiment.embedding_store import (
    Neighbor,
    VectorSpace,
    load_vector_space,
    nearest_neighbors_batch,
)
from xling_sentiment.errors import ConfigError, LeakageError, PipelineError
from xling_sentiment.metrics import (
    MetricReport,
    binary_prf,
    confusion_matrix,
    make_splits,
    make_stratified_splits,
    multiclass_accuracy,
    precision_at_k,
    regression_scores,
)
from xling_sentiment.models import (
    BayesianRidgeModel,
    LogisticConfig,
    Model,
    RidgeHyperpriors,
    SGDConfig,
    predict_binary_many,
    predict_logistic,
    predict_ridge_many,
    train_bayesian_ridge,
    train_binary,
    train_logistic,
)
from xling_sentiment.reporting import PredictionRow, build_report

logger = logging.getLogger(__name__)

T = TypeVar("T")
FloatArray = NDArray[np.float64]

RATING_MIN, RATING_MAX = 1.0, 9.0
TOP_K = (1, 5)
NEIGHBORS_SHOWN = 5
# Generator stream for label shuffling; run indices never reach it.
LABEL_SHUFFLE_STREAM = 2**32 - 1


@dataclass(frozen=True)
class SentimentVector:
    """Per-word predicted affect values, zero-padded; one block per dimension."""

    values: FloatArray
    source_token_count: int


@dataclass
class FeaturizationReport:
    reviews: int = 0
    oov_tokens: int = 0
    empty_reviews: int = 0
    truncated_reviews: int = 0

    def as_dict(self) -> dict[str, int]:
        return dataclasses.asdict(self)


@dataclass
class ExperimentResult:
    experiment: str
    metrics: list[MetricReport]
    details: dict[str, Any]
    predictions: list[PredictionRow] = field(default_factory=list)
    inputs: tuple[str, ...] = ()
    # Models trained on the full training data, keyed by role.
    models: dict[str, Model] = field(default_factory=dict)

    def to_report(self, config: ExperimentConfig) -> dict[str, Any]:
        return build_report(self.experiment, config, self.metrics, self.details, self.inputs)


@dataclass
class _RunOutcome:
    values: dict[str, float]
    flags: dict[str, list[str]] = field(default_factory=dict)
    rows: list[PredictionRow] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)


# --------------------------------------------------------------------------
# Shared plumbing
# --------------------------------------------------------------------------


def check_leakage(train_targets: Sequence[str], test_targets: Sequence[str]) -> None:
    """Raise :class:`LeakageError` if any token occurs in both splits."""
    overlap = sorted(set(train_targets) & set(test_targets))
    if overlap:
        raise LeakageError(
            f"{len(overlap)} tokens occur in both train and test splits: {', '.join(overlap[:5])}"
        )


def _run_seed(seed: int, run_index: int) -> int:
    """Integer seed for a model trained in run ``run_index``."""
    return int(np.random.SeedSequence([seed, run_index]).generate_state(1)[0])


def _monte_carlo(config: ExperimentConfig, run: Callable[[int], T]) -> list[T]:
    if config.workers > 1 and config.run_count > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(run, range(config.run_count)))
    return [run(run_index) for run_index in range(config.run_count)]


def _aggregate(names: Sequence[str], outcomes: Sequence[_RunOutcome]) -> list[MetricReport]:
    reports = []
    for name in names:
        flags = [flag for outcome in outcomes for flag in outcome.flags.get(name, [])]
        reports.append(
            MetricReport.from_runs(name, [outcome.values[name] for outcome in outcomes], flags)
        )
    for report in reports:
        logger.info("%s: mean %.6f, std %.6f", report.name, report.mean, report.std)
    return reports


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _load_spaces(config: ExperimentConfig) -> tuple[VectorSpace, VectorSpace]:
    config.require("source_space", "target_space")
    assert config.source_space is not None and config.target_space is not None
    source = load_vector_space(config.source_space, language_tag=config.source_language)
    target = load_vector_space(config.target_space, language_tag=config.target_language)
    return source, target


def _filtered_lexicon(
    path: Path,
    config: ExperimentConfig,
    source_space: VectorSpace,
    target_space: VectorSpace,
    reverse: bool = False,
) -> tuple[BilingualLexicon, DiscardReport]:
    lex = load_lexicon(path, config.source_language, config.target_language)
    if reverse:
        lex = reverse_lexicon(lex)
    return filter_by_vocabulary(lex, source_space, target_space)


def _alignment_lexicon(
    config: ExperimentConfig,
    source_space: VectorSpace,
    target_space: VectorSpace,
    reverse: bool = False,
) -> tuple[BilingualLexicon, DiscardReport]:
    """The filtered alignment lexicon, sampled down to ``lexicon_size`` when set."""
    config.require("lexicon")
    assert config.lexicon is not None
    filtered, discards = _filtered_lexicon(
        config.lexicon, config, source_space, target_space, reverse
    )
    if config.lexicon_size:
        filtered = sample_lexicon(filtered, config.lexicon_size, config.seed)
    logger.info("Alignment lexicon: %d pairs", len(filtered))
    return filtered, discards


def _matrix_source(config: ExperimentConfig) -> tuple[str, ...]:
    return ("matrix",) if config.matrix is not None else ("lexicon",)


def _resolve_matrix(
    config: ExperimentConfig, source_space: VectorSpace, target_space: VectorSpace
) -> tuple[TranslationMatrix, dict[str, Any]]:
    """Load W from ``matrix`` or fit it on the whole alignment lexicon."""
    if config.matrix is not None:
        config.require("matrix")
        W = load_translation_matrix(config.matrix)
        check_spaces(W, source_space, target_space)
        return W, {"source": "file", "training_pairs": W.training_pair_count}

    lex, discards = _alignment_lexicon(config, source_space, target_space)
    W = fit_translation_matrix(
        build_aligned_pairs(lex, source_space, target_space),
        config.source_language,
        config.target_language,
    )
    return W, {
        "source": "fitted",
        "training_pairs": W.training_pair_count,
        "discards": discards.counts(),
        "rank": W.rank,
        "residual": W.residual,
    }


def _rows_of(space: VectorSpace, tokens: Sequence[str]) -> FloatArray:
    return space.matrix[[space.index[token] for token in tokens]]


def _neighbor_tokens(space: VectorSpace, queries: FloatArray) -> list[tuple[str, ...]]:
    k = min(NEIGHBORS_SHOWN, len(space))
    return [tuple(n.token for n in row) for row in nearest_neighbors_batch(space, queries, k)]


# --------------------------------------------------------------------------
# Translation matrix
# --------------------------------------------------------------------------


def _alignment_inputs(
    config: ExperimentConfig,
) -> tuple[VectorSpace, VectorSpace, BilingualLexicon, DiscardReport]:
    source, target = _load_spaces(config)
    if config.align_reverse:
        source, target = target, source
    lex, discards = _alignment_lexicon(config, source, target, reverse=config.align_reverse)
    return source, target, lex, discards


def run_fit_align(config: ExperimentConfig) -> tuple[TranslationMatrix, ExperimentResult]:
    """Fit W on the whole (optionally sampled) lexicon."""
    source, target, lex, discards = _alignment_inputs(config)
    W = fit_translation_matrix(
        build_aligned_pairs(lex, source, target), source.language_tag, target.language_tag
    )
    details = {
        "direction": f"{source.language_tag}->{target.language_tag}",
        "training_pairs": W.training_pair_count,
        "discards": discards.counts(),
        "residual": W.residual,
        "rank": W.rank,
        "shape": [W.target_dim, W.source_dim],
    }
    result = ExperimentResult(
        "fit-align", [], details, inputs=("source_space", "target_space", "lexicon")
    )
    return W, result


def run_translate(config: ExperimentConfig, token: str, k: int) -> list[Neighbor]:
    config.require("matrix")
    assert config.matrix is not None
    source, target = _load_spaces(config)
    W = load_translation_matrix(config.matrix)
    return translate_token(W, token, source, target, k)


def run_translation_eval(config: ExperimentConfig) -> ExperimentResult:
    """P@1 and P@5 of W fitted on each run's training pairs, over the test pairs."""
    source, target, lex, discards = _alignment_inputs(config)
    plan = make_splits(len(lex), config.run_count, config.align_train_fraction, config.seed)
    k_max = max(TOP_K)

    def run(run_index: int) -> _RunOutcome:
        split = plan.runs[run_index]
        train = [lex.pairs[i] for i in split.train]
        test = [lex.pairs[i] for i in split.test]
        check_leakage([s for s, _ in train], [s for s, _ in test])

        train_lex = BilingualLexicon(tuple(train), lex.source_language, lex.target_language)
        W = fit_translation_matrix(
            build_aligned_pairs(train_lex, source, target),
            source.language_tag,
            target.language_tag,
        )
        mapped = map_vectors(W, _rows_of(source, [s for s, _ in test]))
        ranked = [
            [n.token for n in row] for row in nearest_neighbors_batch(target, mapped, k_max)
        ]
        gold = [t for _, t in test]
        values = {f"p@{k}": precision_at_k(ranked, gold, k) for k in TOP_K}
        train_targets = {t for _, t in train}
        overlap = sum(t in train_targets for t in gold)
        logger.info("Run %d: %s", run_index, values)
        rows = [
            PredictionRow(run_index, s, t, "translation", t, cands[0], tuple(cands))
            for (s, t), cands in zip(test, ranked, strict=True)
        ]
        return _RunOutcome(values, rows=rows, extra={"target_overlap": overlap})

    outcomes = _monte_carlo(config, run)
    details = {
        "direction": f"{source.language_tag}->{target.language_tag}",
        "lexicon_pairs": len(lex),
        "discards": discards.counts(),
        "target_overlap": [o.extra["target_overlap"] for o in outcomes],
    }
    return ExperimentResult(
        "eval-align",
        _aggregate([f"p@{k}" for k in TOP_K], outcomes),
        details,
        [row for o in outcomes for row in o.rows],
        ("source_space", "target_space", "lexicon"),
    )


# --------------------------------------------------------------------------
# Binary polarity
# --------------------------------------------------------------------------

_PRF_FLAGS = {
    "precision": "precision_undefined",
    "recall": "recall_undefined",
    "f_measure": "f_measure_undefined",
}


def run_binary_sentiment_eval(config: ExperimentConfig) -> ExperimentResult:
    """Train polarity on target vectors, test on mapped source vectors."""
    config.require("positive_words", "negative_words", "polarity_lexicon")
    assert config.positive_words and config.negative_words and config.polarity_lexicon
    source, target = _load_spaces(config)
    W, matrix_details = _resolve_matrix(config, source, target)

    examples = load_polarity_list(config.positive_words, config.negative_words)
    lex, discards = _filtered_lexicon(config.polarity_lexicon, config, source, target)
    joined, join_report = join_word_list([ex.token for ex in examples], lex)
    resolvable = [ex for ex in examples if ex.token in joined]
    balanced = balance_classes(resolvable, config.seed)
    labels = np.array([ex.label for ex in balanced])
    if config.shuffle_labels:
        labels = np.random.default_rng([config.seed, LABEL_SHUFFLE_STREAM]).permutation(labels)
        logger.warning("Polarity labels shuffled; results are a chance-level control")
    target_tokens = [ex.token for ex in balanced]
    source_tokens = [joined[token] for token in target_tokens]
    target_X = _rows_of(target, target_tokens)
    mapped_X = map_vectors(W, _rows_of(source, source_tokens))

    plan = make_stratified_splits(
        labels.tolist(), config.run_count, config.binary_train_fraction, config.seed
    )

    def run(run_index: int) -> _RunOutcome:
        split = plan.runs[run_index]
        check_leakage(
            [target_tokens[i] for i in split.train], [target_tokens[i] for i in split.test]
        )
        sgd = SGDConfig(
            l2_strength=config.svm_l2,
            epochs=config.svm_epochs,
            eta0=config.svm_eta0,
            seed=_run_seed(config.seed, run_index),
        )
        model = train_binary(target_X[split.train], labels[split.train], sgd)
        predicted = predict_binary_many(model, mapped_X[split.test])
        gold = labels[split.test]
        prf = binary_prf(predicted.tolist(), gold.tolist())
        values = {
            "precision": prf.precision,
            "recall": prf.recall,
            "f_measure": prf.f_measure,
        }
        flags = {name: [flag] for name, flag in _PRF_FLAGS.items() if flag in prf.flags}
        logger.info("Run %d: %s", run_index, values)
        neighbors = _neighbor_tokens(target, mapped_X[split.test])
        rows = [
            PredictionRow(
                run_index,
                source_tokens[i],
                target_tokens[i],
                "polarity",
                str(int(g)),
                str(int(p)),
                near,
            )
            for i, g, p, near in zip(split.test, gold, predicted, neighbors, strict=True)
        ]
        return _RunOutcome(values, flags, rows)

    outcomes = _monte_carlo(config, run)
    details = {
        "matrix": matrix_details,
        "polarity_words": len(examples),
        "untranslated": len(join_report.untranslated),
        "shadowed_sources": len(join_report.shadowed_sources),
        "polarity_lexicon_discards": discards.counts(),
        "balanced_examples": len(balanced),
        "shuffle_labels": config.shuffle_labels,
    }
    return ExperimentResult(
        "eval-binary",
        _aggregate(list(_PRF_FLAGS), outcomes),
        details,
        [row for o in outcomes for row in o.rows],
        ("source_space", "target_space", *_matrix_source(config))
        + ("positive_words", "negative_words", "polarity_lexicon"),
    )


# --------------------------------------------------------------------------
# ANEW regression
# --------------------------------------------------------------------------


def _fit_ridge(config: ExperimentConfig, X: FloatArray, y: FloatArray) -> BayesianRidgeModel:
    hyperpriors = RidgeHyperpriors(
        alpha_1=config.ridge_alpha_1,
        alpha_2=config.ridge_alpha_2,
        lambda_1=config.ridge_lambda_1,
        lambda_2=config.ridge_lambda_2,
    )
    return train_bayesian_ridge(X, y, hyperpriors, config.ridge_max_iter, config.ridge_tol)


def _clamped(predictions: FloatArray) -> FloatArray:
    return np.clip(predictions, RATING_MIN, RATING_MAX)


def train_anew_regressors(
    config: ExperimentConfig,
    space: VectorSpace,
    ratings: Sequence[AnewRating],
    dimensions: Sequence[str] = ANEW_DIMENSIONS,
) -> dict[str, BayesianRidgeModel]:
    """One Bayesian ridge per dimension, trained on every rated word in ``space``."""
    known = [rating for rating in ratings if rating.token in space]
    if len(known) < len(ratings):
        logger.warning(
            "%d of %d ANEW words are out of vocabulary", len(ratings) - len(known), len(ratings)
        )
    X = _rows_of(space, [rating.token for rating in known])
    return {
        dim: _fit_ridge(config, X, np.array([rating.value(dim) for rating in known]))
        for dim in dimensions
    }


def run_anew_eval(config: ExperimentConfig) -> ExperimentResult:
    """r^2 and MSE per ANEW dimension on mapped source vectors of held-out words."""
    config.require("anew", "anew_lexicon")
    assert config.anew is not None and config.anew_lexicon is not None
    source, target = _load_spaces(config)
    W, matrix_details = _resolve_matrix(config, source, target)

    ratings = load_anew(config.anew)
    lex, discards = _filtered_lexicon(config.anew_lexicon, config, source, target)
    joined, join_report = join_word_list([rating.token for rating in ratings], lex)
    items = [rating for rating in ratings if rating.token in joined]
    target_tokens = [rating.token for rating in items]
    source_tokens = [joined[token] for token in target_tokens]
    target_X = _rows_of(target, target_tokens)
    mapped_X = map_vectors(W, _rows_of(source, source_tokens))
    gold_all = {dim: np.array([rating.value(dim) for rating in items]) for dim in ANEW_DIMENSIONS}

    plan = make_splits(len(items), config.run_count, config.anew_train_fraction, config.seed)

    def run(run_index: int) -> _RunOutcome:
        split = plan.runs[run_index]
        check_leakage(
            [target_tokens[i] for i in split.train], [target_tokens[i] for i in split.test]
        )
        neighbors = _neighbor_tokens(target, mapped_X[split.test])
        values: dict[str, float] = {}
        flags: dict[str, list[str]] = {}
        rows: list[PredictionRow] = []
        for dim in ANEW_DIMENSIONS:
            y_train = gold_all[dim][split.train]
            gold = gold_all[dim][split.test]
            model = _fit_ridge(config, target_X[split.train], y_train)
            predicted = _clamped(predict_ridge_many(model, mapped_X[split.test]))
            scores = regression_scores(predicted.tolist(), gold.tolist())
            baseline = regression_scores(
                np.full(gold.shape, y_train.mean()).tolist(), gold.tolist()
            )
            values[f"{dim}/r2"] = scores.r_squared
            values[f"{dim}/mse"] = scores.mse
            values[f"{dim}/baseline_r2"] = baseline.r_squared
            flags[f"{dim}/r2"] = list(scores.flags)
            flags[f"{dim}/baseline_r2"] = list(baseline.flags)
            rows += [
                PredictionRow(
                    run_index, source_tokens[i], target_tokens[i], dim, _fmt(g), _fmt(p), near
                )
                for i, g, p, near in zip(split.test, gold, predicted, neighbors, strict=True)
            ]
        logger.info("Run %d: %s", run_index, values)
        return _RunOutcome(values, flags, rows)

    outcomes = _monte_carlo(config, run)
    names = [
        f"{dim}/{metric}" for dim in ANEW_DIMENSIONS for metric in ("r2", "mse", "baseline_r2")
    ]
    details = {
        "matrix": matrix_details,
        "anew_words": len(ratings),
        "resolved_words": len(items),
        "untranslated": len(join_report.untranslated),
        "shadowed_sources": len(join_report.shadowed_sources),
        "anew_lexicon_discards": discards.counts(),
    }
    return ExperimentResult(
        "eval-anew",
        _aggregate(names, outcomes),
        details,
        [row for o in outcomes for row in o.rows],
        ("source_space", "target_space", *_matrix_source(config), "anew", "anew_lexicon"),
    )


# --------------------------------------------------------------------------
# Reviews
# --------------------------------------------------------------------------


def featurize_review(
    review: ReviewRecord,
    regressors: Mapping[str, BayesianRidgeModel],
    space: VectorSpace,
    W: TranslationMatrix | None,
    max_length: int,
    dims: Sequence[str] = ("valence",),
    report: FeaturizationReport | None = None,
) -> SentimentVector:
    """
    Build a review's sentiment vector.

    In-vocabulary tokens are mapped through ``W`` when given and scored by
    each dimension's regressor, clamped to [1, 9]. Out-of-vocabulary tokens
    are skipped. Each dimension fills a block of ``max_length`` slots, zero
    padded; reviews longer than that are truncated.
    """
    if max_length < 1:
        raise PipelineError(f"max_length must be positive, got {max_length}")
    missing = [dim for dim in dims if dim not in regressors]
    if missing:
        raise PipelineError(f"no regressor for dimension(s) {', '.join(missing)}")

    known = [token for token in review.tokens if token in space]
    if report is not None:
        report.reviews += 1
        report.oov_tokens += len(review.tokens) - len(known)
        if not known:
            report.empty_reviews += 1
        if len(known) > max_length:
            report.truncated_reviews += 1
    known = known[:max_length]
    count = len(known)

    values = np.zeros(len(dims) * max_length)
    if count:
        X = _rows_of(space, known)
        if W is not None:
            X = map_vectors(W, X)
        for block, dim in enumerate(dims):
            start = block * max_length
            values[start : start + count] = _clamped(predict_ridge_many(regressors[dim], X))
    return SentimentVector(values, count)


def _featurize_all(
    reviews: Sequence[ReviewRecord],
    regressors: Mapping[str, BayesianRidgeModel],
    space: VectorSpace,
    W: TranslationMatrix | None,
    max_length: int,
    dims: Sequence[str],
) -> tuple[FloatArray, list[int], FeaturizationReport]:
    report = FeaturizationReport()
    vectors = [
        featurize_review(review, regressors, space, W, max_length, dims, report)
        for review in reviews
    ]
    if report.truncated_reviews:
        logger.warning(
            "%d of %d reviews truncated to %d tokens",
            report.truncated_reviews,
            report.reviews,
            max_length,
        )
    if not vectors:
        return np.zeros((0, len(dims) * max_length)), [], report
    features = np.vstack([v.values for v in vectors])
    return features, [v.source_token_count for v in vectors], report


def _tokenizer(config: ExperimentConfig) -> Tokenizer | None:
    return whitespace_tokenize if config.review_tokenizer == "whitespace" else None


def _max_length(reviews: Sequence[ReviewRecord]) -> int:
    if not reviews:
        raise PipelineError("no target-language training reviews")
    longest = max(len(review.tokens) for review in reviews)
    if longest < 1:
        raise PipelineError("every target-language training review is empty")
    return longest


@dataclass
class _ReviewSetup:
    source: VectorSpace
    target: VectorSpace
    W: TranslationMatrix
    matrix_details: dict[str, Any]
    regressors: dict[str, BayesianRidgeModel]
    target_reviews: list[ReviewRecord]
    max_length: int
    rated_words: int


def _review_setup(config: ExperimentConfig) -> _ReviewSetup:
    config.require("target_reviews", "source_reviews", "anew")
    assert config.target_reviews is not None and config.anew is not None
    source, target = _load_spaces(config)
    W, matrix_details = _resolve_matrix(config, source, target)
    ratings = load_anew(config.anew)
    regressors = train_anew_regressors(config, target, ratings, config.review_feature_dims)
    target_reviews = load_reviews(config.target_reviews, _tokenizer(config))
    return _ReviewSetup(
        source,
        target,
        W,
        matrix_details,
        regressors,
        target_reviews,
        _max_length(target_reviews),
        sum(rating.token in target for rating in ratings),
    )


@dataclass(frozen=True)
class FeatureTable:
    labels: list[int]
    token_counts: list[int]
    features: FloatArray
    report: FeaturizationReport


def run_featurize(config: ExperimentConfig) -> FeatureTable:
    """Sentiment vectors of the source reviews, as fed to the review classifier."""
    setup = _review_setup(config)
    assert config.source_reviews is not None
    reviews = load_reviews(config.source_reviews, _tokenizer(config))
    features, counts, report = _featurize_all(
        reviews,
        setup.regressors,
        setup.source,
        setup.W,
        setup.max_length,
        config.review_feature_dims,
    )
    return FeatureTable([r.label for r in reviews], counts, features, report)


def _majority_label(labels: Sequence[int]) -> int:
    counts = Counter(labels)
    return min(counts, key=lambda label: (-counts[label], label))


def run_review_eval(config: ExperimentConfig) -> ExperimentResult:
    """Star accuracy on source reviews of a classifier trained on target reviews."""
    setup = _review_setup(config)
    assert config.source_reviews is not None
    dims = config.review_feature_dims
    source_reviews = load_reviews(config.source_reviews, _tokenizer(config))

    X_train, _, train_report = _featurize_all(
        setup.target_reviews, setup.regressors, setup.target, None, setup.max_length, dims
    )
    y_train = np.array([r.label for r in setup.target_reviews])
    X_test, _, test_report = _featurize_all(
        source_reviews, setup.regressors, setup.source, setup.W, setup.max_length, dims
    )
    y_test = [r.label for r in source_reviews]
    if not y_test:
        raise PipelineError("no source-language test reviews")

    def logistic(l2: float) -> LogisticConfig:
        return LogisticConfig(
            l2_strength=l2,
            max_iter=config.logistic_max_iter,
            tol=config.logistic_tol,
            seed=config.seed,
        )

    l2 = config.logistic_l2
    selection: dict[str, Any] = {"selected_l2": l2}
    inputs: tuple[str, ...] = ()
    if config.review_l2_grid and config.validation_reviews is not None:
        config.require("validation_reviews")
        validation = load_reviews(config.validation_reviews, _tokenizer(config))
        X_val, _, _ = _featurize_all(
            validation, setup.regressors, setup.source, setup.W, setup.max_length, dims
        )
        y_val = [r.label for r in validation]
        scores = []
        for candidate in config.review_l2_grid:
            candidate_model = train_logistic(X_train, y_train, logistic(candidate), STAR_LABELS)
            scores.append(
                multiclass_accuracy(predict_logistic(candidate_model, X_val).tolist(), y_val)
            )
        best = int(np.argmax(scores))
        l2 = config.review_l2_grid[best]
        selection = {
            "selected_l2": l2,
            "grid": list(config.review_l2_grid),
            "validation_accuracy": scores,
        }
        inputs = ("validation_reviews",)
        logger.info("Selected logistic l2=%g (validation accuracy %.4f)", l2, scores[best])
    elif config.review_l2_grid:
        logger.warning("review_l2_grid is set without validation_reviews; using logistic_l2")

    model = train_logistic(X_train, y_train, logistic(l2), STAR_LABELS)
    predicted = predict_logistic(model, X_test).tolist()
    accuracy = multiclass_accuracy(predicted, y_test)
    majority = _majority_label(y_train.tolist())
    baseline = multiclass_accuracy([majority] * len(y_test), y_test)
    logger.info("Review accuracy %.4f (majority baseline %.4f)", accuracy, baseline)

    rows = [
        PredictionRow(0, f"review:{i}", "", "stars", str(g), str(p))
        for i, (g, p) in enumerate(zip(y_test, predicted, strict=True))
    ]
    details = {
        "matrix": setup.matrix_details,
        "review_feature_dims": list(dims),
        "max_length": setup.max_length,
        "rated_words": setup.rated_words,
        "train_reviews": train_report.as_dict(),
        "test_reviews": test_report.as_dict(),
        "model_selection": selection,
        "majority_label": majority,
        "confusion_matrix": {
            "labels": list(STAR_LABELS),
            "matrix": confusion_matrix(predicted, y_test, STAR_LABELS),
        },
    }
    return ExperimentResult(
        "eval-reviews",
        [
            MetricReport.from_runs("accuracy", [accuracy]),
            MetricReport.from_runs("majority_baseline_accuracy", [baseline]),
        ],
        details,
        rows,
        ("source_space", "target_space", *_matrix_source(config), "anew")
        + ("target_reviews", "source_reviews")
        + inputs,
        models={"logistic": model, **setup.regressors},
    )


# --------------------------------------------------------------------------
# Lexicon-size sweep
# --------------------------------------------------------------------------

EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "eval-align": run_translation_eval,
    "eval-binary": run_binary_sentiment_eval,
    "eval-anew": run_anew_eval,
    "eval-reviews": run_review_eval,
}


def run_lexicon_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Run ``sweep_experiment`` once per ``sweep_sizes`` entry with that lexicon size."""
    if not config.sweep_sizes:
        raise ConfigError("sweep_sizes must list at least one lexicon size")
    if config.matrix is not None and config.sweep_experiment != "eval-align":
        raise ConfigError("a lexicon sweep fits W per size; unset 'matrix'")
    runner = EXPERIMENTS[config.sweep_experiment]

    metrics: list[MetricReport] = []
    details: dict[str, Any] = {"experiment": config.sweep_experiment}
    rows: list[PredictionRow] = []
    inputs: tuple[str, ...] = ()
    for size in config.sweep_sizes:
        logger.info("Sweep: %s with %d lexicon pairs", config.sweep_experiment, size)
        result = runner(config.with_values(lexicon_size=size))
        prefix = f"n={size}/"
        metrics += [dataclasses.replace(m, name=prefix + m.name) for m in result.metrics]
        details[prefix.rstrip("/")] = result.details
        rows += [dataclasses.replace(r, dimension=prefix + r.dimension) for r in result.predictions]
        inputs = result.inputs
    return ExperimentResult("sweep", metrics, details, rows, inputs)
