"""One-vs-rest linear classifiers trained by per-sample stochastic gradient descent.

Per sample t (1-based counter across all epochs) the update is

    eta_t = 1 / (alpha * (t0 + t))
    w    <- w - eta_t * (dloss/dmargin * y * x + penalty_gradient)
    b    <- b - eta_t * (dloss/dmargin * y)

with the intercept b never regularized and t0 anchored so the first step
cannot overshoot a typical weight (see schedule_t0). The L2 penalty
multiplies every coordinate by (1 - eta_t * alpha) each step, applied
through a scalar wscale so the per-step cost stays proportional to the
sample's nonzeros. The L1 penalty is applied lazily: each coordinate pays
the penalty accrued since it was last touched, clipped at zero, which on
dense inputs reduces exactly to per-step soft thresholding.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import SparseVector

MODEL_FORMAT_VERSION = 1

PENALTIES = ("l1", "l2")


class ModelFormatError(ValueError):
    """A serialized model file is malformed or has the wrong version."""


class NumericError(ValueError):
    """Training produced or was fed non-finite values."""


class LossKind(enum.Enum):
    HINGE = "hinge"
    LOG = "log"
    PERCEPTRON = "perceptron"


@dataclass(frozen=True)
class TrainConfig:
    loss: LossKind = LossKind.HINGE
    penalty: str = "l2"
    alpha: float = 1e-4
    epochs: int = 5
    seed: int = 0
    shuffle_each_epoch: bool = True

    def __post_init__(self) -> None:
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(eq=False)
class LinearModel:
    """Per-class weight rows and intercepts; score_k = w_k . x + b_k."""

    weights: np.ndarray
    intercepts: np.ndarray
    classes: list[int]
    feature_dim: int


def loss_value(kind: LossKind, margin: float) -> float:
    """Loss at margin m = y * f(x)."""
    if kind is LossKind.HINGE:
        return max(0.0, 1.0 - margin)
    if kind is LossKind.LOG:
        if margin < -30.0:
            return -margin
        return math.log1p(math.exp(-margin))
    return max(0.0, -margin)


def loss_dmargin(kind: LossKind, margin: float) -> float:
    """Subgradient of loss_value with respect to the margin.

    At the perceptron kink (margin 0) the subgradient is -1, not 0:
    training starts from zero weights, where every margin is exactly 0,
    and choosing 0 there would make the zero model a fixed point.
    """
    if kind is LossKind.HINGE:
        return -1.0 if margin < 1.0 else 0.0
    if kind is LossKind.LOG:
        if margin >= 0.0:
            em = math.exp(-margin)
            return -em / (1.0 + em)
        return -1.0 / (1.0 + math.exp(margin))
    return -1.0 if margin <= 0.0 else 0.0


def decision(model: LinearModel, x: SparseVector) -> np.ndarray:
    """Per-class scores w_k . x + b_k as a length-K array."""
    if x.nnz == 0:
        return model.intercepts.copy()
    top = int(x.indices[-1])
    if top >= model.feature_dim:
        raise IndexError(f"feature index {top} out of range for dimension {model.feature_dim}")
    return model.weights[:, x.indices] @ x.values + model.intercepts


def predict(model: LinearModel, x: SparseVector) -> int:
    """Class id with the highest score; ties break toward the lowest class index."""
    return model.classes[int(np.argmax(decision(model, x)))]


def schedule_t0(loss: LossKind, alpha: float) -> float:
    """Anchor of the 1/(alpha*(t0+t)) schedule.

    Chooses the initial step so a typical-magnitude weight (1/alpha^(1/4),
    where the regularizer pins the optimum's scale) moves by at most its
    own size on step one: eta_1 * |dloss| <= typw for any unit feature.
    """
    typw = math.sqrt(1.0 / math.sqrt(alpha))
    eta0 = typw / max(1.0, -loss_dmargin(loss, -typw))
    return 1.0 / (alpha * eta0)


def epoch_orders(n: int, config: TrainConfig) -> list[np.ndarray]:
    """Seeded visit order for each epoch.

    fit_multiclass passes the same orders to every one-vs-rest fit so all
    class rows consume an identical sample schedule.
    """
    rng = np.random.default_rng(config.seed)
    if config.shuffle_each_epoch:
        return [rng.permutation(n) for _ in range(config.epochs)]
    order = rng.permutation(n)
    return [order] * config.epochs


def _check_finite_inputs(X: Sequence[SparseVector]) -> None:
    for position, x in enumerate(X):
        if x.nnz and not np.all(np.isfinite(x.values)):
            raise NumericError(f"sample {position} has non-finite feature values")


def _settle_l1(w: np.ndarray, paid: np.ndarray, accrued: float, idx: np.ndarray) -> None:
    """Charge coordinates idx the penalty accrued since they last paid, clipping at zero."""
    owed = accrued - paid[idx]
    z = w[idx]
    w[idx] = np.sign(z) * np.maximum(0.0, np.abs(z) - owed)
    paid[idx] = accrued


def fit_binary(
    X: Sequence[SparseVector],
    y: Sequence[float],
    config: TrainConfig,
    *,
    feature_dim: int | None = None,
    orders: list[np.ndarray] | None = None,
) -> tuple[np.ndarray, float]:
    """Train one binary classifier with labels in {-1, +1}.

    Returns (weights, intercept). Deterministic for a fixed seed; a
    one-class input is legal and converges to a constant predictor.
    """
    n = len(X)
    if n == 0:
        raise ValueError("need at least one training sample")
    y_arr = np.asarray(y, dtype=np.float64)
    if y_arr.shape != (n,):
        raise ValueError(f"labels shape {y_arr.shape} does not match {n} samples")
    if not np.all(np.isin(y_arr, (-1.0, 1.0))):
        raise ValueError("binary labels must be -1 or +1")
    _check_finite_inputs(X)
    if feature_dim is None:
        feature_dim = 1 + max((int(x.indices[-1]) for x in X if x.nnz), default=-1)
    if orders is None:
        orders = epoch_orders(n, config)

    alpha = config.alpha
    loss = config.loss
    l1 = config.penalty == "l1"
    w = np.zeros(feature_dim, dtype=np.float64)
    b = 0.0
    wscale = 1.0
    paid = np.zeros(feature_dim, dtype=np.float64) if l1 else None
    accrued = 0.0
    t0 = schedule_t0(loss, alpha)
    t = 0
    for order in orders:
        for i in order:
            t += 1
            eta = 1.0 / (alpha * (t0 + t))
            x = X[i]
            idx = x.indices
            yi = y_arr[i]
            if l1 and idx.size:
                _settle_l1(w, paid, accrued, idx)
            raw = float(w[idx] @ x.values) if idx.size else 0.0
            margin = yi * (wscale * raw + b)
            g = loss_dmargin(loss, margin)
            if not l1:
                wscale *= 1.0 - eta * alpha
                if wscale < 1e-9:
                    w *= wscale
                    wscale = 1.0
            if g != 0.0:
                if idx.size:
                    w[idx] -= (eta * g * yi / wscale) * x.values
                b -= eta * g * yi
            if l1:
                accrued += eta * alpha
                if idx.size:
                    _settle_l1(w, paid, accrued, idx)
    if l1:
        _settle_l1(w, paid, accrued, np.arange(feature_dim))
    elif wscale != 1.0:
        w *= wscale
    if not (np.all(np.isfinite(w)) and math.isfinite(b)):
        raise NumericError("training diverged to non-finite weights")
    return w, b


def fit_multiclass(
    X: Sequence[SparseVector],
    labels: Sequence[int],
    config: TrainConfig,
    *,
    feature_dim: int | None = None,
) -> LinearModel:
    """One fit_binary per class (that class +1, rest -1), sharing the shuffle sequence."""
    if len(X) != len(labels):
        raise ValueError("X and labels must have equal length")
    classes = sorted(set(int(c) for c in labels))
    if len(classes) < 2:
        raise ValueError(f"need at least 2 distinct classes, got {classes}")
    if feature_dim is None:
        feature_dim = 1 + max((int(x.indices[-1]) for x in X if x.nnz), default=-1)
    labels_arr = np.asarray(labels)
    orders = epoch_orders(len(X), config)
    weights = np.zeros((len(classes), feature_dim), dtype=np.float64)
    intercepts = np.zeros(len(classes), dtype=np.float64)
    for row, cls in enumerate(classes):
        y = np.where(labels_arr == cls, 1.0, -1.0)
        w, b = fit_binary(X, y, config, feature_dim=feature_dim, orders=orders)
        weights[row] = w
        intercepts[row] = b
    return LinearModel(
        weights=weights, intercepts=intercepts, classes=classes, feature_dim=feature_dim
    )


def regularized_objective(
    X: Sequence[SparseVector],
    y: Sequence[float],
    w: np.ndarray,
    b: float,
    loss: LossKind,
    alpha: float,
    penalty: str = "l2",
) -> float:
    """(1/N) sum loss(y_i * (w.x_i + b)) plus the penalty term."""
    n = len(X)
    total = sum(loss_value(loss, float(yi) * (x.dot(w) + b)) for x, yi in zip(X, y))
    if penalty == "l2":
        reg = 0.5 * alpha * float(w @ w)
    else:
        reg = alpha * float(np.abs(w).sum())
    return total / n + reg


def batch_gd_oracle(
    X: Sequence[SparseVector],
    y: Sequence[float],
    config: TrainConfig,
    iterations: int,
    learning_rate: float | None = None,
) -> tuple[np.ndarray, float]:
    """Full-batch gradient descent on the same L2-regularized objective.

    Test oracle for small problems only; the intercept is trained but not
    regularized, mirroring fit_binary. The default learning rate is the
    inverse of a smoothness bound for the log loss, which makes descent
    monotone on convex problems. Zero iterations returns zero weights.
    """
    if config.penalty != "l2":
        raise ValueError("the batch oracle covers the l2 penalty only")
    n = len(X)
    if n == 0:
        raise ValueError("need at least one training sample")
    feature_dim = 1 + max((int(x.indices[-1]) for x in X if x.nnz), default=-1)
    dense = np.zeros((n, feature_dim), dtype=np.float64)
    for row, x in enumerate(X):
        dense[row, x.indices] = x.values
    y_arr = np.asarray(y, dtype=np.float64)
    if learning_rate is None:
        # Log-loss curvature is at most 1/4 per sample; +1 covers the intercept column.
        bound = 0.25 * float(((dense * dense).sum(axis=1) + 1.0).max()) + config.alpha
        learning_rate = 1.0 / bound
    w = np.zeros(feature_dim, dtype=np.float64)
    b = 0.0
    for _ in range(iterations):
        margins = y_arr * (dense @ w + b)
        g = np.fromiter(
            (loss_dmargin(config.loss, float(m)) for m in margins), dtype=np.float64, count=n
        )
        gy = g * y_arr
        grad_w = dense.T @ gy / n + config.alpha * w
        grad_b = float(gy.mean())
        w -= learning_rate * grad_w
        b -= learning_rate * grad_b
    return w, b


def model_to_dict(model: LinearModel) -> dict:
    """JSON-ready form; weight rows are stored sparsely as [index, value] pairs."""
    rows = []
    for k in range(len(model.classes)):
        row = model.weights[k]
        nz = np.nonzero(row)[0]
        rows.append([[int(j), float(row[j])] for j in nz])
    return {
        "version": MODEL_FORMAT_VERSION,
        "classes": [int(c) for c in model.classes],
        "feature_dim": int(model.feature_dim),
        "intercepts": [float(v) for v in model.intercepts],
        "weights": rows,
    }


def model_from_dict(data: dict) -> LinearModel:
    try:
        version = data["version"]
        if version != MODEL_FORMAT_VERSION:
            raise ModelFormatError(
                f"unsupported model format version {version!r}; expected {MODEL_FORMAT_VERSION}"
            )
        classes = [int(c) for c in data["classes"]]
        feature_dim = int(data["feature_dim"])
        intercepts = np.asarray(data["intercepts"], dtype=np.float64)
        weights = np.zeros((len(classes), feature_dim), dtype=np.float64)
        for k, row in enumerate(data["weights"]):
            for j, value in row:
                weights[k, int(j)] = float(value)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    if intercepts.shape != (len(classes),) or len(data["weights"]) != len(classes):
        raise ModelFormatError("class count disagrees between fields")
    return LinearModel(
        weights=weights, intercepts=intercepts, classes=classes, feature_dim=feature_dim
    )


def save_model(model: LinearModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=1), "utf-8")


def load_model(path: str | Path) -> LinearModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such model file: {path}")
    try:
        data = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(data)
