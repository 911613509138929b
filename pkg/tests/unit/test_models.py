"""Unit tests for the hinge SVM, Bayesian ridge and softmax trainers."""

from pathlib import Path

import numpy as np
import pytest

from xling_sentiment.errors import ModelError
from xling_sentiment.models import (
    BayesianRidgeModel,
    LinearBinaryModel,
    LogisticConfig,
    LogisticModel,
    RidgeHyperpriors,
    SGDConfig,
    binary_objective,
    binary_objective_gradient,
    load_model,
    predict_binary,
    predict_binary_many,
    predict_logistic,
    predict_proba,
    predict_ridge,
    predict_ridge_many,
    save_model,
    softmax_objective,
    train_bayesian_ridge,
    train_binary,
    train_logistic,
)

EPS = 1e-6


@pytest.mark.unit
class TestLinearBinary:
    """Test the SGD hinge-loss classifier."""

    def test_separable_toy_set(self) -> None:
        """Test two mirrored points repeated ten times are classified perfectly."""
        X = np.array([[2.0, 0.0], [-2.0, 0.0]] * 10)
        y = np.array([1, -1] * 10)
        model = train_binary(X, y, SGDConfig(epochs=20))
        assert predict_binary_many(model, X).tolist() == y.tolist()

    def test_flipped_labels_flip_predictions(self, rng: np.random.Generator) -> None:
        """Test label symmetry: flipped training labels negate every prediction."""
        X = rng.standard_normal((20, 3))
        y = np.where(rng.standard_normal(20) > 0, 1, -1)
        y[:2] = [1, -1]
        config = SGDConfig(epochs=15, seed=4)
        model = train_binary(X, y, config)
        flipped = train_binary(X, -y, config)
        queries = rng.standard_normal((30, 3))
        assert (predict_binary_many(flipped, queries) == -predict_binary_many(model, queries)).all()

    def test_deterministic(self, rng: np.random.Generator) -> None:
        """Test equal data and config give identical weights."""
        X = rng.standard_normal((15, 4))
        y = np.array([1, -1] * 7 + [1])
        first = train_binary(X, y, SGDConfig(epochs=5, seed=9))
        second = train_binary(X, y, SGDConfig(epochs=5, seed=9))
        np.testing.assert_array_equal(first.weights, second.weights)
        assert first.intercept == second.intercept

    def test_subgradient_matches_finite_differences(self, rng: np.random.Generator) -> None:
        """Test the analytic subgradient at a differentiable point."""
        X = rng.standard_normal((10, 4))
        y = np.array([1, -1] * 5)
        w = rng.standard_normal(4)
        b = 0.3
        grad_w, grad_b = binary_objective_gradient(w, b, X, y, 0.01)
        numeric = np.array(
            [
                (
                    binary_objective(w + EPS * e, b, X, y, 0.01)
                    - binary_objective(w - EPS * e, b, X, y, 0.01)
                )
                / (2 * EPS)
                for e in np.eye(4)
            ]
        )
        np.testing.assert_allclose(grad_w, numeric, atol=1e-5)
        numeric_b = (
            binary_objective(w, b + EPS, X, y, 0.01) - binary_objective(w, b - EPS, X, y, 0.01)
        ) / (2 * EPS)
        assert grad_b == pytest.approx(numeric_b, abs=1e-5)

    @pytest.mark.parametrize(
        "x, expected", [((3.0, 5.0), 1), ((-3.0, 5.0), -1), ((0.0, 7.0), 1)]
    )
    def test_predict_sign_rule(self, x: tuple[float, float], expected: int) -> None:
        """Test sign(w.x + b) with zero mapped to +1."""
        model = LinearBinaryModel(np.array([1.0, 0.0]), 0.0)
        assert predict_binary(model, x) == expected

    def test_positive_scaling_keeps_labels(self, rng: np.random.Generator) -> None:
        """Test scaling (w, b) by c > 0 leaves predictions unchanged."""
        model = LinearBinaryModel(rng.standard_normal(3), 0.4)
        scaled = LinearBinaryModel(model.weights * 7.5, model.intercept * 7.5)
        X = rng.standard_normal((25, 3))
        assert (predict_binary_many(model, X) == predict_binary_many(scaled, X)).all()

    def test_single_class_rejected(self) -> None:
        """Test training needs both labels."""
        with pytest.raises(ModelError, match="each class"):
            train_binary(np.ones((3, 2)), np.ones(3))

    def test_dimension_mismatch(self) -> None:
        """Test prediction checks the vector size."""
        model = LinearBinaryModel(np.zeros(2), 0.0)
        with pytest.raises(ModelError):
            predict_binary(model, [1.0, 2.0, 3.0])

    def test_unstable_step_size_rejected(self) -> None:
        """Test eta0 and l2 must keep the weight decay factor positive."""
        with pytest.raises(ModelError, match="weight decay"):
            SGDConfig(l2_strength=0.6, eta0=1.0)


@pytest.mark.unit
class TestBayesianRidge:
    """Test evidence-maximizing Bayesian ridge regression."""

    def test_constant_target(self, rng: np.random.Generator) -> None:
        """Test a constant target gives zero weights and that constant as intercept."""
        X = rng.standard_normal((12, 3))
        model = train_bayesian_ridge(X, np.full(12, 4.5))
        assert model.intercept == pytest.approx(4.5)
        assert np.linalg.norm(model.weights) <= 1e-6
        assert predict_ridge(model, rng.standard_normal(3)) == pytest.approx(4.5)

    def test_noiseless_fit(self, rng: np.random.Generator) -> None:
        """Test y = X w0 is reproduced with MSE below 1e-6."""
        X = 3.0 * rng.standard_normal((100, 5))
        w0 = rng.standard_normal(5)
        y = X @ w0
        model = train_bayesian_ridge(X, y)
        predictions = predict_ridge_many(model, X)
        assert np.mean((predictions - y) ** 2) < 1e-6
        assert predict_ridge(model, X[0]) == pytest.approx(y[0], abs=1e-3)
        assert model.alpha > 0 and model.lambda_ > 0
        assert np.isfinite(model.alpha) and np.isfinite(model.lambda_)

    @pytest.mark.parametrize("instance", range(20))
    def test_frozen_hyperparameters_equal_ridge_solve(self, instance: int) -> None:
        """Test the posterior mean with fixed alpha, lambda equals the direct ridge solve."""
        rng = np.random.default_rng(instance)
        X = rng.standard_normal((30, 4))
        y = X @ rng.standard_normal(4) + 0.3 * rng.standard_normal(30) + 2.0
        alpha, lambda_ = 2.0, 0.5
        model = train_bayesian_ridge(
            X, y, alpha_init=alpha, lambda_init=lambda_, update_hyperparameters=False
        )
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
        direct = np.linalg.solve(Xc.T @ Xc + (lambda_ / alpha) * np.eye(4), Xc.T @ yc)
        np.testing.assert_allclose(model.weights, direct, atol=1e-8)
        assert model.alpha == alpha and model.lambda_ == lambda_

    def test_loop_terminates_with_iteration_cap(self, rng: np.random.Generator) -> None:
        """Test the evidence loop stops at max_iter and stays positive."""
        X = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        model = train_bayesian_ridge(X, y, max_iter=2, tol=0.0)
        assert model.n_iterations_run == 2
        assert not model.converged
        assert model.alpha > 0 and model.lambda_ > 0

    def test_affine_prediction(self) -> None:
        """Test prediction is m.x + intercept."""
        model = BayesianRidgeModel(np.array([1.0, 0.0]), 0.0, 1.0, 1.0, RidgeHyperpriors(), 1)
        assert predict_ridge(model, [7.0, 99.0]) == 7.0
        flat = BayesianRidgeModel(np.zeros(2), 5.0, 1.0, 1.0, RidgeHyperpriors(), 1)
        assert predict_ridge(flat, [3.0, -1.0]) == 5.0

    def test_rejects_bad_inputs(self) -> None:
        """Test too few examples and bad hyperpriors fail."""
        with pytest.raises(ModelError, match="at least 2"):
            train_bayesian_ridge(np.ones((1, 2)), np.ones(1))
        with pytest.raises(ModelError, match="non-finite"):
            train_bayesian_ridge(np.ones((2, 2)), np.array([1.0, np.inf]))
        with pytest.raises(ModelError, match="must be positive"):
            RidgeHyperpriors(alpha_1=0.0)


@pytest.mark.unit
class TestLogistic:
    """Test multinomial logistic regression."""

    def test_separable_clusters(self, rng: np.random.Generator) -> None:
        """Test two separated clusters labeled 1 and 5 are fitted exactly."""
        X = np.vstack([rng.normal(-3.0, 0.3, (15, 2)), rng.normal(3.0, 0.3, (15, 2))])
        y = np.array([1] * 15 + [5] * 15)
        model = train_logistic(X, y)
        assert predict_logistic(model, X).tolist() == y.tolist()
        assert model.class_labels == (1, 2, 3, 4, 5)

    def test_probabilities_sum_to_one(self, rng: np.random.Generator) -> None:
        """Test softmax outputs are distributions."""
        X = rng.standard_normal((40, 3))
        y = rng.integers(1, 6, size=40)
        model = train_logistic(X, y, LogisticConfig(max_iter=50))
        proba = predict_proba(model, rng.standard_normal((10, 3)))
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        assert (proba >= 0).all()
        assert set(predict_logistic(model, X).tolist()) <= {1, 2, 3, 4, 5}

    def test_softmax_gradient_matches_finite_differences(
        self, rng: np.random.Generator
    ) -> None:
        """Test the analytic softmax gradient on a fixed small instance."""
        X = rng.standard_normal((8, 3))
        Y = np.eye(4)[rng.integers(0, 4, size=8)]
        W = rng.standard_normal((4, 3))
        b = rng.standard_normal(4)
        _, grad_W, grad_b = softmax_objective(W, b, X, Y, 0.1)
        numeric_W = np.zeros_like(W)
        for index in np.ndindex(*W.shape):
            step = np.zeros_like(W)
            step[index] = EPS
            plus = softmax_objective(W + step, b, X, Y, 0.1)[0]
            minus = softmax_objective(W - step, b, X, Y, 0.1)[0]
            numeric_W[index] = (plus - minus) / (2 * EPS)
        numeric_b = np.array(
            [
                (
                    softmax_objective(W, b + EPS * e, X, Y, 0.1)[0]
                    - softmax_objective(W, b - EPS * e, X, Y, 0.1)[0]
                )
                / (2 * EPS)
                for e in np.eye(4)
            ]
        )
        np.testing.assert_allclose(grad_W, numeric_W, atol=1e-5)
        np.testing.assert_allclose(grad_b, numeric_b, atol=1e-5)

    def test_absent_classes_never_win_on_training_data(
        self, rng: np.random.Generator
    ) -> None:
        """Test labels missing from training are never predicted on it."""
        X = rng.standard_normal((30, 2))
        y = np.where(X[:, 0] > 0, 4, 2)
        model = train_logistic(X, y)
        assert set(predict_logistic(model, X).tolist()) <= {2, 4}

    def test_single_label_rejected(self) -> None:
        """Test at least two labels are required."""
        with pytest.raises(ModelError, match="two distinct labels"):
            train_logistic(np.ones((4, 2)), np.full(4, 3))

    def test_unknown_label_rejected(self) -> None:
        """Test labels outside the class list fail."""
        with pytest.raises(ModelError, match="not among the classes"):
            train_logistic(np.ones((2, 2)), np.array([1, 9]))


@pytest.mark.unit
class TestModelFiles:
    """Test the self-describing model text format."""

    def test_logistic_file(self, tmp_path: Path, rng: np.random.Generator) -> None:
        """Test a logistic model reloads with labels, weights and config."""
        model = LogisticModel(
            (1, 2, 3), rng.standard_normal((3, 4)), rng.standard_normal(3), LogisticConfig(seed=3)
        )
        path = tmp_path / "logistic.model"
        save_model(model, path)
        assert path.read_text(encoding="utf-8").startswith("xling-model logistic\nshape 3 4\n")
        loaded = load_model(path)
        assert isinstance(loaded, LogisticModel)
        assert loaded.class_labels == (1, 2, 3)
        np.testing.assert_array_equal(loaded.weights, model.weights)
        np.testing.assert_array_equal(loaded.intercepts, model.intercepts)
        assert loaded.training_config == model.training_config

    def test_trained_ridge_predicts_identically(
        self, tmp_path: Path, rng: np.random.Generator
    ) -> None:
        """Test a saved Bayesian ridge model predicts the same after loading."""
        X = rng.standard_normal((20, 3))
        model = train_bayesian_ridge(X, X @ [1.0, -2.0, 0.5] + 3.0)
        path = tmp_path / "ridge.model"
        save_model(model, path)
        loaded = load_model(path)
        assert isinstance(loaded, BayesianRidgeModel)
        np.testing.assert_array_equal(predict_ridge_many(loaded, X), predict_ridge_many(model, X))
        assert loaded.hyperpriors == model.hyperpriors

    def test_rejects_foreign_file(self, tmp_path: Path) -> None:
        """Test files without the magic header are rejected."""
        path = tmp_path / "bogus.model"
        path.write_text("hello world\n", encoding="utf-8")
        with pytest.raises(ModelError, match="not a model file"):
            load_model(path)

    def test_shape_mismatch(self, tmp_path: Path) -> None:
        """Test weight rows must match the declared shape."""
        path = tmp_path / "short.model"
        path.write_text(
            "xling-model linear_binary\nshape 1 3\nparam l2_strength 0.0001\n"
            "param epochs 100\nparam eta0 1\nparam seed 0\nintercepts 0\nweights\n1 2\n",
            encoding="utf-8",
        )
        with pytest.raises(ModelError, match="header says"):
            load_model(path)

    def test_rejects_undecodable_file(self, tmp_path: Path) -> None:
        """Test invalid UTF-8 in a model file is a ModelError naming the line."""
        path = tmp_path / "binary.model"
        path.write_bytes(b"xling-model logistic\nshape 1 1\nlabels 1\x80\n")
        with pytest.raises(ModelError, match="line 3: .*invalid UTF-8 byte 0x80"):
            load_model(path)
