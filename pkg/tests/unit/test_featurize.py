"""Unit tests for review featurization and the leakage guard."""

import numpy as np
import pytest

from xling_sentiment.alignment import TranslationMatrix
from xling_sentiment.data_ingest import ReviewRecord
from xling_sentiment.embedding_store import VectorSpace
from xling_sentiment.errors import LeakageError, PipelineError
from xling_sentiment.models import BayesianRidgeModel, RidgeHyperpriors
from xling_sentiment.pipelines import FeaturizationReport, check_leakage, featurize_review


def _regressor(weights: list[float], intercept: float) -> BayesianRidgeModel:
    return BayesianRidgeModel(np.array(weights), intercept, 1.0, 1.0, RidgeHyperpriors(), 1)


@pytest.fixture
def regressors() -> dict[str, BayesianRidgeModel]:
    """Valence reads the first coordinate, arousal the second."""
    return {"valence": _regressor([1.0, 0.0], 5.0), "arousal": _regressor([0.0, 2.0], 5.0)}


@pytest.mark.unit
class TestFeaturizeReview:
    """Test per-word sentiment vectors of one review."""

    def test_values_are_padded_in_token_order(
        self, small_space: VectorSpace, regressors: dict[str, BayesianRidgeModel]
    ) -> None:
        """Test known tokens fill the leading slots and the rest stay zero."""
        review = ReviewRecord(("east", "northeast"), 4)
        vector = featurize_review(review, regressors, small_space, None, max_length=4)
        np.testing.assert_allclose(vector.values, [6.0, 6.0, 0.0, 0.0])
        assert vector.source_token_count == 2

    def test_predictions_are_clamped(
        self, small_space: VectorSpace, regressors: dict[str, BayesianRidgeModel]
    ) -> None:
        """Test values outside [1, 9] are clipped."""
        review = ReviewRecord(("west", "north"), 1)
        vector = featurize_review(
            review, regressors, small_space, None, max_length=2, dims=("valence", "arousal")
        )
        # valence block, then arousal block
        np.testing.assert_allclose(vector.values, [2.0, 5.0, 5.0, 9.0])

    def test_oov_skipped_and_truncated(
        self, small_space: VectorSpace, regressors: dict[str, BayesianRidgeModel]
    ) -> None:
        """Test unknown tokens are dropped and long reviews truncated, both counted."""
        report = FeaturizationReport()
        review = ReviewRecord(("south", "east", "east", "north"), 3)
        vector = featurize_review(review, regressors, small_space, None, 2, report=report)
        np.testing.assert_allclose(vector.values, [6.0, 6.0])
        assert vector.source_token_count == 2
        assert report.as_dict() == {
            "reviews": 1,
            "oov_tokens": 1,
            "empty_reviews": 0,
            "truncated_reviews": 1,
        }

    def test_empty_review_is_zero_vector(
        self, small_space: VectorSpace, regressors: dict[str, BayesianRidgeModel]
    ) -> None:
        """Test a review with no known tokens becomes all zeros."""
        report = FeaturizationReport()
        vector = featurize_review(
            ReviewRecord(("south",), 2), regressors, small_space, None, 3, report=report
        )
        assert not vector.values.any()
        assert report.empty_reviews == 1

    def test_repeated_calls_are_identical(
        self, small_space: VectorSpace, regressors: dict[str, BayesianRidgeModel]
    ) -> None:
        """Test featurizing the same review twice gives the same vector and counts."""
        review = ReviewRecord(("north", "south", "west", "east", "northeast"), 2)
        reports = [FeaturizationReport(), FeaturizationReport()]
        vectors = [
            featurize_review(
                review, regressors, small_space, None, 3, dims=("valence", "arousal"), report=r
            )
            for r in reports
        ]
        np.testing.assert_array_equal(vectors[0].values, vectors[1].values)
        assert vectors[0].source_token_count == vectors[1].source_token_count
        assert reports[0].as_dict() == reports[1].as_dict()

    def test_translation_matrix_applied(
        self, small_space: VectorSpace, regressors: dict[str, BayesianRidgeModel]
    ) -> None:
        """Test source vectors pass through W before scoring."""
        swap = TranslationMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]), "en", "en", 0)
        vector = featurize_review(ReviewRecord(("north",), 5), regressors, small_space, swap, 1)
        np.testing.assert_allclose(vector.values, [7.0])

    def test_missing_regressor_and_bad_length(
        self, small_space: VectorSpace, regressors: dict[str, BayesianRidgeModel]
    ) -> None:
        """Test requested dimensions need a regressor and max_length must be positive."""
        review = ReviewRecord(("east",), 1)
        with pytest.raises(PipelineError, match="dominance"):
            featurize_review(review, regressors, small_space, None, 1, dims=("dominance",))
        with pytest.raises(PipelineError, match="max_length"):
            featurize_review(review, regressors, small_space, None, 0)


@pytest.mark.unit
class TestCheckLeakage:
    """Test the train/test token guard."""

    def test_disjoint_passes(self) -> None:
        """Test disjoint splits are accepted."""
        check_leakage(["good", "bad"], ["fine"])

    def test_overlap_raises(self) -> None:
        """Test a shared token raises LeakageError naming it."""
        with pytest.raises(LeakageError, match="happy"):
            check_leakage(["happy", "sad"], ["happy"])
