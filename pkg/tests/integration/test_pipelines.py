"""Integration tests running every experiment over the synthetic fixtures."""

from pathlib import Path

import numpy as np
import pytest
from pytest_mock import MockerFixture

from xling_sentiment.alignment import save_translation_matrix
from xling_sentiment.config import ExperimentConfig
from xling_sentiment.errors import ConfigError, LeakageError
from xling_sentiment.fixtures import FixtureSizes, make_fixtures
from xling_sentiment.metrics import MetricReport, Split, SplitPlan
from xling_sentiment.pipelines import (
    run_anew_eval,
    run_binary_sentiment_eval,
    run_featurize,
    run_fit_align,
    run_lexicon_sweep,
    run_review_eval,
    run_translate,
    run_translation_eval,
)


def _metric(metrics: list[MetricReport], name: str) -> MetricReport:
    (found,) = [m for m in metrics if m.name == name]
    return found


@pytest.mark.integration
class TestAlignmentPipelines:
    """Test fitting, translating and evaluating the translation matrix."""

    def test_rotation_is_recovered_exactly(self, fixture_config: ExperimentConfig) -> None:
        """Test P@1 and P@5 are 1.0 on the noise-free rotation fixture."""
        result = run_translation_eval(fixture_config)
        assert _metric(result.metrics, "p@1").per_run_values == (1.0,) * 10
        assert _metric(result.metrics, "p@5").mean == 1.0
        assert result.details["direction"] == "src->en"
        assert result.details["lexicon_pairs"] == 200
        assert len(result.predictions) == 10 * 20

    def test_noise_lowers_precision(
        self, fixture_config: ExperimentConfig, noisy_fixture_dir: Path
    ) -> None:
        """Test sigma = 0.5 source noise gives a strictly lower P@1."""
        noisy = ExperimentConfig.from_file(noisy_fixture_dir / "experiment.env")
        clean_p1 = _metric(run_translation_eval(fixture_config).metrics, "p@1").mean
        noisy_p1 = _metric(run_translation_eval(noisy).metrics, "p@1").mean
        assert noisy_p1 < clean_p1

    def test_reverse_direction(self, fixture_config: ExperimentConfig) -> None:
        """Test align_reverse evaluates target-to-source translation."""
        result = run_translation_eval(fixture_config.with_values(align_reverse=True))
        assert result.details["direction"] == "en->src"
        assert _metric(result.metrics, "p@1").mean == 1.0

    def test_threaded_runs_match_serial(self, fixture_config: ExperimentConfig) -> None:
        """Test workers > 1 gives the same per-run values and predictions."""
        config = fixture_config.with_values(lexicon_size=60)
        serial = run_translation_eval(config)
        threaded = run_translation_eval(config.with_values(workers=3))
        assert [m.to_dict() for m in serial.metrics] == [m.to_dict() for m in threaded.metrics]
        assert serial.predictions == threaded.predictions

    def test_fit_then_translate(self, fixture_config: ExperimentConfig, tmp_path: Path) -> None:
        """Test a saved matrix translates a source word to its pair."""
        W, result = run_fit_align(fixture_config)
        assert result.details["shape"] == [10, 10]
        assert result.details["rank"] == 10
        path = tmp_path / "W.txt"
        save_translation_matrix(W, path)
        neighbors = run_translate(fixture_config.with_values(matrix=path), "src_w007", 3)
        assert neighbors[0].token == "en_w007"
        assert neighbors[0].similarity == pytest.approx(1.0)

    def test_sweep_prefixes_metrics(self, fixture_config: ExperimentConfig) -> None:
        """Test each lexicon size contributes its own metrics."""
        result = run_lexicon_sweep(fixture_config.with_values(sweep_sizes=(50, 100), run_count=2))
        names = [m.name for m in result.metrics]
        assert names == ["n=50/p@1", "n=50/p@5", "n=100/p@1", "n=100/p@5"]
        assert result.details["n=50"]["lexicon_pairs"] == 50

    def test_sweep_needs_sizes(self, fixture_config: ExperimentConfig) -> None:
        """Test an empty sweep is a config error."""
        with pytest.raises(ConfigError, match="sweep_sizes"):
            run_lexicon_sweep(fixture_config)


@pytest.mark.integration
class TestSentimentPipelines:
    """Test binary, ANEW and review transfer."""

    def test_binary_polarity_transfers(self, fixture_config: ExperimentConfig) -> None:
        """Test extreme-valence words are classified almost perfectly after mapping."""
        result = run_binary_sentiment_eval(fixture_config)
        assert _metric(result.metrics, "f_measure").mean >= 0.85
        assert result.details["balanced_examples"] == 40
        assert {row.dimension for row in result.predictions} == {"polarity"}

    def test_shuffled_labels_are_chance_level(self, tmp_path: Path) -> None:
        """Test shuffled polarity labels give F in [0.4, 0.6] over 10 runs."""
        # 400 polarity words leave 80 test items per run, so the 10-run mean
        # has a standard error near 0.025.
        make_fixtures(tmp_path, seed=0, sizes=FixtureSizes(words=400, polarity_words=400))
        config = ExperimentConfig.from_file(
            tmp_path / "experiment.env", ["svm_epochs=30", "run_count=10", "shuffle_labels=true"]
        )
        result = run_binary_sentiment_eval(config)
        assert result.details["balanced_examples"] == 400
        assert 0.4 <= _metric(result.metrics, "f_measure").mean <= 0.6

    def test_saved_matrix_matches_fitted(
        self, fixture_config: ExperimentConfig, tmp_path: Path
    ) -> None:
        """Test a matrix file gives the same results as fitting on the lexicon."""
        W, _ = run_fit_align(fixture_config)
        path = tmp_path / "W.txt"
        save_translation_matrix(W, path)
        fitted = run_binary_sentiment_eval(fixture_config.with_values(run_count=3))
        loaded = run_binary_sentiment_eval(fixture_config.with_values(run_count=3, matrix=path))
        assert [m.per_run_values for m in fitted.metrics] == [
            m.per_run_values for m in loaded.metrics
        ]
        assert loaded.details["matrix"]["source"] == "file"
        assert "matrix" in loaded.inputs

    def test_anew_regression_transfers(self, fixture_config: ExperimentConfig) -> None:
        """Test affine ratings are recovered on mapped source vectors."""
        result = run_anew_eval(fixture_config)
        for dim in ("valence", "arousal", "dominance"):
            assert _metric(result.metrics, f"{dim}/r2").mean > 0.999
            assert _metric(result.metrics, f"{dim}/mse").mean < 1e-2
            assert _metric(result.metrics, f"{dim}/baseline_r2").mean <= 1e-12
        assert result.details["resolved_words"] == 120

    def test_leakage_guard(self, fixture_config: ExperimentConfig, mocker: MockerFixture) -> None:
        """Test overlapping splits are refused."""
        leaky = SplitPlan(1, 0.5, 0, (Split(np.array([0, 1, 2]), np.array([2, 3])),))
        mocker.patch("xling_sentiment.pipelines.make_splits", return_value=leaky)
        with pytest.raises(LeakageError):
            run_anew_eval(fixture_config.with_values(run_count=1))

    def test_review_stars_transfer(self, fixture_config: ExperimentConfig) -> None:
        """Test star labels follow token valence across the mapping."""
        result = run_review_eval(fixture_config)
        assert _metric(result.metrics, "accuracy").mean > 0.9
        assert _metric(result.metrics, "majority_baseline_accuracy").mean == pytest.approx(
            0.2, abs=0.02
        )
        assert result.details["max_length"] == 6
        matrix = result.details["confusion_matrix"]["matrix"]
        assert sum(map(sum, matrix)) == 250
        assert sorted(result.models) == ["logistic", "valence"]

    def test_review_model_selection(self, fixture_config: ExperimentConfig) -> None:
        """Test the l2 grid is scored on validation reviews."""
        result = run_review_eval(fixture_config.with_values(review_l2_grid=(1e-4, 10.0)))
        selection = result.details["model_selection"]
        assert selection["grid"] == [1e-4, 10.0]
        assert selection["selected_l2"] in (1e-4, 10.0)
        assert len(selection["validation_accuracy"]) == 2
        assert "validation_reviews" in result.inputs

    def test_featurize_shapes(self, fixture_config: ExperimentConfig) -> None:
        """Test one row per source review with max_length slots per dimension."""
        config = fixture_config.with_values(review_feature_dims=("valence", "arousal"))
        table = run_featurize(config)
        assert table.features.shape == (250, 12)
        assert table.token_counts == [6] * 250
        assert table.report.oov_tokens == 0
        assert sorted(set(table.labels)) == [1, 2, 3, 4, 5]
