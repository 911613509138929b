"""
The three trainable predictors.

- :class:`LinearBinaryModel`: linear hinge-loss classifier trained by SGD
  with an L2 penalty (word polarity, -1/+1).
- :class:`BayesianRidgeModel`: Bayesian ridge regression fitted by evidence
  maximization (one per ANEW dimension).
- :class:`LogisticModel`: multinomial logistic regression (review stars).

All trainers are deterministic functions of (data, config, seed). Intercepts
are always fitted and never penalized.
"""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy.linalg
import scipy.optimize
from numpy.typing import ArrayLike, NDArray
from scipy.special import logsumexp

from xling_sentiment.embedding_store import format_floats, iter_text_lines
from xling_sentiment.errors import ModelError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

MODEL_MAGIC = "xling-model"


def _as_design(X: ArrayLike, n_targets: int) -> FloatArray:
    matrix = np.asarray(X, dtype=np.float64)
    if matrix.ndim != 2:
        raise ModelError(f"feature matrix must be 2-dimensional, got shape {matrix.shape}")
    if matrix.shape[0] != n_targets:
        raise ModelError(f"{matrix.shape[0]} feature rows but {n_targets} targets")
    if not np.all(np.isfinite(matrix)):
        raise ModelError("non-finite features")
    return matrix


def _as_vector(x: ArrayLike, dim: int) -> FloatArray:
    vector = np.asarray(x, dtype=np.float64)
    if vector.shape != (dim,):
        raise ModelError(f"expected a vector of shape ({dim},), got {vector.shape}")
    return vector


def _as_rows(X: ArrayLike, dim: int) -> FloatArray:
    matrix = np.asarray(X, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != dim:
        raise ModelError(f"expected a matrix of shape (m, {dim}), got {matrix.shape}")
    return matrix


# --------------------------------------------------------------------------
# Binary polarity: hinge loss + L2, plain SGD
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SGDConfig:
    """
    SGD settings for the hinge-loss classifier.

    The step size follows ``eta_t = eta0 / (1 + eta0 * l2_strength * t)`` where
    ``t`` counts individual updates across epochs.
    """

    l2_strength: float = 1e-4
    epochs: int = 100
    eta0: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.l2_strength < 0:
            raise ModelError("l2_strength must be non-negative")
        if self.epochs < 1:
            raise ModelError("epochs must be positive")
        if self.eta0 <= 0:
            raise ModelError("eta0 must be positive")
        if 2.0 * self.eta0 * self.l2_strength >= 1.0:
            raise ModelError("2 * eta0 * l2_strength must be below 1 for a stable weight decay")

    @property
    def schedule(self) -> str:
        return f"eta0/(1+eta0*l2*t), eta0={self.eta0:g}"


@dataclass(frozen=True)
class LinearBinaryModel:
    """``sign(w.x + b)`` classifier. A decision value of exactly 0 maps to +1."""

    weights: FloatArray
    intercept: float
    training_config: SGDConfig = field(default_factory=SGDConfig)

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    def decision_function(self, X: ArrayLike) -> FloatArray:
        return _as_rows(X, self.dim) @ self.weights + self.intercept


def _binary_labels(y: ArrayLike) -> FloatArray:
    labels = np.asarray(y)
    if labels.ndim != 1:
        raise ModelError("labels must be 1-dimensional")
    if not np.all(np.isin(labels, (-1, 1))):
        raise ModelError("binary labels must be -1 or +1")
    return labels.astype(np.float64)


def binary_objective(
    weights: ArrayLike, intercept: float, X: ArrayLike, y: ArrayLike, l2_strength: float
) -> float:
    """``(1/n) sum_i hinge(y_i (w.x_i + b)) + l2 * ||w||^2``."""
    labels = _binary_labels(y)
    design = _as_design(X, labels.shape[0])
    w = np.asarray(weights, dtype=np.float64)
    margins = labels * (design @ w + intercept)
    return float(np.mean(np.maximum(0.0, 1.0 - margins)) + l2_strength * w @ w)


def binary_objective_gradient(
    weights: ArrayLike, intercept: float, X: ArrayLike, y: ArrayLike, l2_strength: float
) -> tuple[FloatArray, float]:
    """Subgradient of :func:`binary_objective` with respect to (w, b)."""
    labels = _binary_labels(y)
    design = _as_design(X, labels.shape[0])
    w = np.asarray(weights, dtype=np.float64)
    n = labels.shape[0]
    active = labels * (design @ w + intercept) < 1.0
    grad_w = -(labels[active] @ design[active]) / n + 2.0 * l2_strength * w
    grad_b = -float(np.sum(labels[active])) / n
    return grad_w, grad_b


def train_binary(X: ArrayLike, y: ArrayLike, config: SGDConfig | None = None) -> LinearBinaryModel:
    """
    Minimize the L2-penalized hinge objective by per-example SGD.

    Each epoch visits the examples in an order drawn from a generator seeded
    with ``config.seed``; the order does not depend on the labels, so flipping
    every label yields exactly the negated model.
    """
    config = config or SGDConfig()
    labels = _binary_labels(y)
    design = _as_design(X, labels.shape[0])
    if not (np.any(labels > 0) and np.any(labels < 0)):
        raise ModelError("binary training needs at least one example of each class")

    n, dim = design.shape
    rng = np.random.default_rng(config.seed)
    w = np.zeros(dim)
    b = 0.0
    t = 0
    for _ in range(config.epochs):
        for i in rng.permutation(n):
            eta = config.eta0 / (1.0 + config.eta0 * config.l2_strength * t)
            margin = labels[i] * (design[i] @ w + b)
            w *= 1.0 - 2.0 * eta * config.l2_strength
            if margin < 1.0:
                w += eta * labels[i] * design[i]
                b += eta * labels[i]
            t += 1

    logger.debug("Trained binary model on %d examples (%d updates)", n, t)
    return LinearBinaryModel(weights=w, intercept=float(b), training_config=config)


def predict_binary(model: LinearBinaryModel, x: ArrayLike) -> int:
    vector = _as_vector(x, model.dim)
    return 1 if float(vector @ model.weights + model.intercept) >= 0.0 else -1


def predict_binary_many(model: LinearBinaryModel, X: ArrayLike) -> NDArray[np.int64]:
    return np.where(model.decision_function(X) >= 0.0, 1, -1).astype(np.int64)


# --------------------------------------------------------------------------
# Bayesian ridge regression
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RidgeHyperpriors:
    """Gamma hyperpriors over the noise precision (alpha) and weight precision (lambda)."""

    alpha_1: float = 1.0
    alpha_2: float = 1.0
    lambda_1: float = 1e-6
    lambda_2: float = 1e-6

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not value > 0:
                raise ModelError(f"hyperprior {name} must be positive, got {value}")


@dataclass(frozen=True)
class BayesianRidgeModel:
    weights: FloatArray
    intercept: float
    alpha: float
    lambda_: float
    hyperpriors: RidgeHyperpriors
    n_iterations_run: int
    converged: bool = True

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


def train_bayesian_ridge(
    X: ArrayLike,
    y: ArrayLike,
    hyperpriors: RidgeHyperpriors | None = None,
    max_iter: int = 300,
    tol: float = 1e-4,
    *,
    alpha_init: float | None = None,
    lambda_init: float | None = None,
    update_hyperparameters: bool = True,
) -> BayesianRidgeModel:
    """
    Fit a Bayesian ridge regressor with prior ``w ~ N(0, lambda^-1 I)``.

    Data are centered to fit the intercept. Each iteration computes the
    posterior mean ``m = alpha S X^T y`` with ``S = (lambda I + alpha X^T X)^-1``
    through the SVD of ``X``, then re-estimates alpha and lambda from the
    effective number of parameters ``gamma``. The loop stops when no weight
    moves by more than ``tol`` or after ``max_iter`` iterations. With
    ``update_hyperparameters=False`` alpha and lambda stay at their initial
    values and ``m`` is the ridge solution for penalty ``lambda / alpha``.
    """
    hyperpriors = hyperpriors or RidgeHyperpriors()
    targets = np.asarray(y, dtype=np.float64)
    if targets.ndim != 1:
        raise ModelError("targets must be 1-dimensional")
    if not np.all(np.isfinite(targets)):
        raise ModelError("non-finite targets")
    design = _as_design(X, targets.shape[0])
    n = targets.shape[0]
    if n < 2:
        raise ModelError(f"Bayesian ridge needs at least 2 examples, got {n}")
    if max_iter < 1:
        raise ModelError("max_iter must be positive")

    X_mean = design.mean(axis=0)
    y_mean = float(targets.mean())
    Xc = design - X_mean
    yc = targets - y_mean

    U, s, Vh = scipy.linalg.svd(Xc, full_matrices=False)
    eigen = s**2
    Uty = U.T @ yc

    variance = float(np.var(targets))
    alpha = alpha_init if alpha_init is not None else (1.0 / variance if variance > 0 else 1.0)
    lambda_ = lambda_init if lambda_init is not None else 1.0
    if not (alpha > 0 and lambda_ > 0):
        raise ModelError("initial alpha and lambda must be positive")

    def posterior_mean(alpha: float, lambda_: float) -> FloatArray:
        return Vh.T @ (s / (eigen + lambda_ / alpha) * Uty)

    weights = np.zeros(design.shape[1])
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_weights = posterior_mean(alpha, lambda_)
        if update_hyperparameters:
            gamma = float(np.sum(alpha * eigen / (lambda_ + alpha * eigen)))
            rss = float(np.sum((yc - Xc @ new_weights) ** 2))
            lambda_ = (gamma + 2.0 * hyperpriors.lambda_1) / (
                float(new_weights @ new_weights) + 2.0 * hyperpriors.lambda_2
            )
            alpha = (n - gamma + 2.0 * hyperpriors.alpha_1) / (rss + 2.0 * hyperpriors.alpha_2)
            if not (np.isfinite(alpha) and np.isfinite(lambda_) and alpha > 0 and lambda_ > 0):
                raise ModelError(f"evidence update diverged (alpha={alpha}, lambda={lambda_})")
        delta = float(np.max(np.abs(new_weights - weights))) if weights.size else 0.0
        weights = new_weights
        if delta < tol or not update_hyperparameters:
            converged = True
            break

    if update_hyperparameters:
        weights = posterior_mean(alpha, lambda_)
    if not converged:
        logger.warning("Bayesian ridge did not converge in %d iterations", max_iter)
    logger.debug(
        "Bayesian ridge: %d iterations, alpha=%.6g, lambda=%.6g", iterations, alpha, lambda_
    )
    return BayesianRidgeModel(
        weights=weights,
        intercept=float(y_mean - X_mean @ weights),
        alpha=float(alpha),
        lambda_=float(lambda_),
        hyperpriors=hyperpriors,
        n_iterations_run=iterations,
        converged=converged,
    )


def predict_ridge(model: BayesianRidgeModel, x: ArrayLike) -> float:
    """Raw affine prediction ``m.x + intercept`` (no clamping)."""
    return float(_as_vector(x, model.dim) @ model.weights + model.intercept)


def predict_ridge_many(model: BayesianRidgeModel, X: ArrayLike) -> FloatArray:
    return _as_rows(X, model.dim) @ model.weights + model.intercept


# --------------------------------------------------------------------------
# Multinomial logistic regression
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LogisticConfig:
    l2_strength: float = 1e-4
    max_iter: int = 500
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.l2_strength < 0:
            raise ModelError("l2_strength must be non-negative")
        if self.max_iter < 1:
            raise ModelError("max_iter must be positive")


@dataclass(frozen=True)
class LogisticModel:
    """Softmax classifier over ``class_labels``; ``weights`` is ``|classes| x F``."""

    class_labels: tuple[int, ...]
    weights: FloatArray
    intercepts: FloatArray
    training_config: LogisticConfig = field(default_factory=LogisticConfig)

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])


def softmax_objective(
    weights: ArrayLike, intercepts: ArrayLike, X: ArrayLike, Y: ArrayLike, l2_strength: float
) -> tuple[float, FloatArray, FloatArray]:
    """
    Mean cross-entropy plus ``(l2/2) ||W||^2`` and its exact gradient.

    ``Y`` is the one-hot target matrix (``n x C``). Returns
    ``(loss, grad_weights, grad_intercepts)``.
    """
    W = np.asarray(weights, dtype=np.float64)
    b = np.asarray(intercepts, dtype=np.float64)
    targets = np.asarray(Y, dtype=np.float64)
    design = np.asarray(X, dtype=np.float64)
    n = design.shape[0]

    logits = design @ W.T + b
    log_norm = logsumexp(logits, axis=1)
    loss = -float(np.sum(targets * (logits - log_norm[:, None]))) / n
    loss += 0.5 * l2_strength * float(np.sum(W * W))

    residual = np.exp(logits - log_norm[:, None]) - targets
    grad_W = residual.T @ design / n + l2_strength * W
    grad_b = residual.sum(axis=0) / n
    return loss, grad_W, grad_b


def train_logistic(
    X: ArrayLike,
    y: ArrayLike,
    config: LogisticConfig | None = None,
    class_labels: Sequence[int] = (1, 2, 3, 4, 5),
) -> LogisticModel:
    """
    Fit a multinomial logistic regression with L-BFGS on the exact objective.

    Only the labels present in ``y`` take part in the softmax. Labels that
    never occur get zero weights and an intercept below every training
    logit, so they cannot win the argmax on the training data.
    """
    config = config or LogisticConfig()
    labels = np.asarray(y)
    if labels.ndim != 1:
        raise ModelError("labels must be 1-dimensional")
    design = _as_design(X, labels.shape[0])
    classes = tuple(int(c) for c in class_labels)
    unknown = sorted(set(labels.tolist()) - set(classes))
    if unknown:
        raise ModelError(f"labels {unknown} are not among the classes {classes}")
    present = [c for c in classes if np.any(labels == c)]
    if len(present) < 2:
        raise ModelError("logistic training needs at least two distinct labels")

    n, dim = design.shape
    n_present = len(present)
    Y = (labels[:, None] == np.array(present)[None, :]).astype(np.float64)

    def objective(params: FloatArray) -> tuple[float, FloatArray]:
        block = params.reshape(n_present, dim + 1)
        loss, grad_W, grad_b = softmax_objective(
            block[:, :dim], block[:, dim], design, Y, config.l2_strength
        )
        return loss, np.hstack([grad_W, grad_b[:, None]]).ravel()

    result = scipy.optimize.minimize(
        objective,
        np.zeros(n_present * (dim + 1)),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": config.max_iter, "ftol": config.tol, "gtol": config.tol},
    )
    if not result.success:
        logger.warning("Logistic training stopped early: %s", result.message)
    fitted = np.asarray(result.x).reshape(n_present, dim + 1)

    weights = np.zeros((len(classes), dim))
    intercepts = np.zeros(len(classes))
    rows = [classes.index(c) for c in present]
    weights[rows] = fitted[:, :dim]
    intercepts[rows] = fitted[:, dim]
    absent = [i for i, c in enumerate(classes) if c not in present]
    if absent:
        floor = float(np.min(np.max(design @ fitted[:, :dim].T + fitted[:, dim], axis=1))) - 1.0
        intercepts[absent] = floor

    logger.debug("Trained logistic model on %d examples, %d features", n, dim)
    return LogisticModel(
        class_labels=classes, weights=weights, intercepts=intercepts, training_config=config
    )


def predict_proba(model: LogisticModel, X: ArrayLike) -> FloatArray:
    logits = _as_rows(X, model.dim) @ model.weights.T + model.intercepts
    return np.exp(logits - logsumexp(logits, axis=1)[:, None])


def predict_logistic(model: LogisticModel, X: ArrayLike) -> NDArray[np.int64]:
    logits = _as_rows(X, model.dim) @ model.weights.T + model.intercepts
    return np.asarray(model.class_labels, dtype=np.int64)[np.argmax(logits, axis=1)]


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------

Model = LinearBinaryModel | BayesianRidgeModel | LogisticModel


def _model_layout(model: Model) -> tuple[str, dict[str, Any], list[int], FloatArray, FloatArray]:
    """(kind, params, labels, intercepts, weight rows) for one model."""
    if isinstance(model, LinearBinaryModel):
        return (
            "linear_binary",
            asdict(model.training_config),
            [],
            np.array([model.intercept]),
            model.weights[None, :],
        )
    if isinstance(model, BayesianRidgeModel):
        params = asdict(model.hyperpriors)
        params.update(
            alpha=model.alpha,
            lambda_=model.lambda_,
            n_iterations_run=model.n_iterations_run,
            converged=int(model.converged),
        )
        return "bayesian_ridge", params, [], np.array([model.intercept]), model.weights[None, :]
    return (
        "logistic",
        asdict(model.training_config),
        list(model.class_labels),
        model.intercepts,
        model.weights,
    )


def save_model(model: Model, path: str | Path) -> None:
    """
    Write a model in the self-describing text format::

        xling-model <kind>
        shape <rows> <cols>
        param <name> <value>      (one line per hyperparameter)
        labels <l1> <l2> ...      (logistic only)
        intercepts <b1> ...
        weights
        <one line per weight row>
    """
    kind, params, labels, intercepts, weights = _model_layout(model)
    lines = [f"{MODEL_MAGIC} {kind}", f"shape {weights.shape[0]} {weights.shape[1]}"]
    lines += [f"param {name} {format_floats([value])}" for name, value in params.items()]
    if labels:
        lines.append("labels " + " ".join(str(label) for label in labels))
    lines.append("intercepts " + format_floats(intercepts))
    lines.append("weights")
    lines += [format_floats(row) for row in weights]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> Model:
    path = Path(path)
    lines = [line for _, line in iter_text_lines(path, ModelError)]
    if not lines or lines[0].split()[:1] != [MODEL_MAGIC] or len(lines[0].split()) != 2:
        raise ModelError(f"{path}: not a model file", line=1)
    kind = lines[0].split()[1]

    params: dict[str, float] = {}
    labels: list[int] = []
    intercepts: FloatArray | None = None
    shape: tuple[int, int] | None = None
    cursor = 1
    try:
        while cursor < len(lines) and lines[cursor] != "weights":
            key, _, rest = lines[cursor].partition(" ")
            if key == "shape":
                rows, cols = rest.split()
                shape = (int(rows), int(cols))
            elif key == "param":
                name, value = rest.split()
                params[name] = float(value)
            elif key == "labels":
                labels = [int(v) for v in rest.split()]
            elif key == "intercepts":
                intercepts = np.array(rest.split(), dtype=np.float64)
            else:
                raise ModelError(f"{path}: unknown section {key!r}", line=cursor + 1)
            cursor += 1
        weights = np.array([row.split() for row in lines[cursor + 1 :]], dtype=np.float64)
    except ValueError as exc:
        raise ModelError(f"{path}: malformed model file: {exc}", line=cursor + 1) from exc
    if shape is None or intercepts is None or cursor == len(lines):
        raise ModelError(f"{path}: missing shape, intercepts or weights section")
    if weights.shape != shape:
        raise ModelError(f"{path}: weights have shape {weights.shape}, header says {shape}")
    try:
        return _build_model(kind, params, labels, intercepts, weights)
    except KeyError as exc:
        raise ModelError(f"{path}: missing parameter {exc.args[0]!r}") from exc


def _build_model(
    kind: str,
    params: Mapping[str, float],
    labels: list[int],
    intercepts: FloatArray,
    weights: FloatArray,
) -> Model:
    if kind == "linear_binary":
        config = SGDConfig(
            l2_strength=params["l2_strength"],
            epochs=int(params["epochs"]),
            eta0=params["eta0"],
            seed=int(params["seed"]),
        )
        return LinearBinaryModel(weights[0], float(intercepts[0]), config)
    if kind == "bayesian_ridge":
        priors = RidgeHyperpriors(
            **{name: params[name] for name in ("alpha_1", "alpha_2", "lambda_1", "lambda_2")}
        )
        return BayesianRidgeModel(
            weights=weights[0],
            intercept=float(intercepts[0]),
            alpha=params["alpha"],
            lambda_=params["lambda_"],
            hyperpriors=priors,
            n_iterations_run=int(params["n_iterations_run"]),
            converged=bool(params["converged"]),
        )
    if kind == "logistic":
        config = LogisticConfig(
            l2_strength=params["l2_strength"],
            max_iter=int(params["max_iter"]),
            tol=params["tol"],
            seed=int(params["seed"]),
        )
        return LogisticModel(tuple(labels), weights, intercepts, config)
    raise ModelError(f"unknown model kind {kind!r}")
