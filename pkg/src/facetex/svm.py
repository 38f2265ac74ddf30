"""Feature standardization and a linear soft-margin SVM trained in the dual.

The solver is a two-variable working-set method on the dual problem

    min 0.5 a^T Q a - e^T a   s.t.  y^T a = 0,  0 <= a <= C,

with second-order pair selection and a stop when the maximum KKT
violation falls below ``tol``. The kernel is linear, so the weight vector
is maintained incrementally and training one model costs two matrix-vector
products per update. Labels are {0, 1} at the API surface and {-1, +1}
internally; a positive decision score means "manipulated".
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .descriptors import FeatureVector
from .errors import FormatError, ParameterError, SchemaError, ValidationError

MODEL_SCHEMA_VERSION = 1

_TAU = 1e-12


@dataclass(frozen=True)
class Scaler:
    """Per-feature training-set mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValidationError("scaler mean/std must be equal-length vectors")
        if np.any(std < 0):
            raise ValidationError("scaler std must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def constant_features(self) -> np.ndarray:
        """Indices of zero-variance features (scaled to 0 by apply_scaler)."""
        return np.flatnonzero(self.std == 0)


@dataclass
class LabeledSet:
    """Feature matrix with {0,1} labels; both classes needed for training."""

    vectors: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.vectors.ndim != 2:
            raise ValidationError("vectors must be a 2D (n, dim) matrix")
        if self.labels.shape != (self.vectors.shape[0],):
            raise ValidationError("labels must align with vectors")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValidationError("labels must be 0 or 1")

    @classmethod
    def from_features(cls, features: Iterable[FeatureVector]) -> "LabeledSet":
        features = list(features)
        if not features:
            raise ValidationError("no feature vectors given")
        labels = []
        for fv in features:
            if fv.label is None:
                raise ValidationError(
                    f"feature of video {fv.video_id!r} carries no label"
                )
            labels.append(fv.label)
        return cls(np.stack([fv.values for fv in features]), np.asarray(labels))

    @property
    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))


def fit_scaler(vectors: np.ndarray) -> Scaler:
    """Fit per-feature mean and population standard deviation."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError("scaler needs at least 2 samples")
    return Scaler(x.mean(axis=0), x.std(axis=0))


def apply_scaler(scaler: Scaler, x: np.ndarray) -> np.ndarray:
    """Standardize a vector or matrix; zero-variance features map to 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != scaler.dim:
        raise ValidationError(
            f"feature dim {x.shape[-1]} != scaler dim {scaler.dim}"
        )
    safe = np.where(scaler.std == 0, 1.0, scaler.std)
    out = (x - scaler.mean) / safe
    if scaler.constant_features.size:
        out[..., scaler.constant_features] = 0.0
    return out


@dataclass
class TrainStats:
    iterations: int
    converged: bool
    kkt_violation: float
    dual_objective: float
    primal_objective: float
    dual_objective_history: list[float] = field(default_factory=list)


@dataclass
class LinearSvmModel:
    """Standardization plus hyperplane for one manipulation technique."""

    weights: np.ndarray
    bias: float
    C: float
    tol: float
    scaler: Scaler
    technique: str = ""
    descriptor: str = ""
    area: str = ""
    mode: str = ""
    windowing: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    train_stats: Optional[TrainStats] = None

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.scaler.dim,):
            raise ValidationError("weight length must match the scaler dimension")

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


def _solve_pair(alpha_i, alpha_j, grad_i, grad_j, quad, same_sign, C):
    """Optimal update of one alpha pair inside the [0, C]^2 box."""
    if quad <= 0:
        quad = _TAU
    if not same_sign:
        delta = (-grad_i - grad_j) / quad
        diff = alpha_i - alpha_j
        ai = alpha_i + delta
        aj = alpha_j + delta
        if diff > 0:
            if aj < 0:
                aj = 0.0
                ai = diff
        else:
            if ai < 0:
                ai = 0.0
                aj = -diff
        if diff > 0:
            if ai > C:
                ai = C
                aj = C - diff
        else:
            if aj > C:
                aj = C
                ai = C + diff
    else:
        delta = (grad_i - grad_j) / quad
        total = alpha_i + alpha_j
        ai = alpha_i - delta
        aj = alpha_j + delta
        if total > C:
            if ai > C:
                ai = C
                aj = total - C
        else:
            if aj < 0:
                aj = 0.0
                ai = total
        if total > C:
            if aj > C:
                aj = C
                ai = total - C
        else:
            if ai < 0:
                ai = 0.0
                aj = total
    return ai, aj


@dataclass
class SmoResult:
    alpha: np.ndarray
    weights: np.ndarray
    bias: float
    stats: TrainStats


def smo_solve(
    x: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float = 1e-3,
    max_iter: Optional[int] = None,
) -> SmoResult:
    """Solve the dual SVM for labels y in {-1, +1} on standardized features.

    Deterministic: pair selection breaks ties by the lowest index, so the
    same inputs always produce the same model.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, dim = x.shape
    if C <= 0:
        raise ParameterError("C must be positive")
    if max_iter is None:
        max_iter = max(10 * n, 1000)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    weights = np.zeros(dim)
    diag = np.einsum("ij,ij->i", x, x)
    pos = y > 0
    history: list[float] = []
    violation = math.inf
    converged = False
    iterations = 0
    while iterations < max_iter:
        minus_yg = -y * grad
        up = (alpha < C) & pos | (alpha > 0) & ~pos
        low = (alpha < C) & ~pos | (alpha > 0) & pos
        if not up.any() or not low.any():
            violation = 0.0
            converged = True
            break
        up_idx = np.flatnonzero(up)
        i = int(up_idx[np.argmax(minus_yg[up_idx])])
        m = minus_yg[i]
        low_idx = np.flatnonzero(low)
        big_m = float(np.min(minus_yg[low_idx]))
        violation = float(m - big_m)
        if violation < tol:
            converged = True
            break
        k_i = x @ x[i]
        # second-order choice of the partner: largest guaranteed decrease
        gain_num = m - minus_yg[low_idx]
        cand = low_idx[gain_num > 0]
        gains = (m - minus_yg[cand]) ** 2 / np.maximum(
            diag[i] + diag[cand] - 2.0 * k_i[cand], _TAU
        )
        j = int(cand[np.argmax(gains)])
        quad = diag[i] + diag[j] - 2.0 * k_i[j]
        ai, aj = _solve_pair(
            alpha[i], alpha[j], grad[i], grad[j], quad, y[i] == y[j], C
        )
        delta_i = ai - alpha[i]
        delta_j = aj - alpha[j]
        alpha[i] = ai
        alpha[j] = aj
        k_j = x @ x[j]
        grad += y * (y[i] * delta_i * k_i + y[j] * delta_j * k_j)
        weights += y[i] * delta_i * x[i] + y[j] * delta_j * x[j]
        history.append(0.5 * (alpha @ grad - alpha.sum()))
        iterations += 1

    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yg[free].mean())
    else:
        upper = alpha >= C
        lower = alpha <= 0
        ub = np.inf
        lb = -np.inf
        sel_ub = (upper & ~pos) | (lower & pos)
        sel_lb = (upper & pos) | (lower & ~pos)
        if sel_ub.any():
            ub = float(yg[sel_ub].min())
        if sel_lb.any():
            lb = float(yg[sel_lb].max())
        rho = (ub + lb) / 2.0 if np.isfinite(ub) and np.isfinite(lb) else 0.0
    bias = -rho
    dual_obj = float(0.5 * (alpha @ grad - alpha.sum()))
    margins = y * (x @ weights + bias)
    primal_obj = float(0.5 * weights @ weights + C * np.maximum(0.0, 1.0 - margins).sum())
    stats = TrainStats(
        iterations=iterations,
        converged=converged,
        kkt_violation=violation if math.isfinite(violation) else 0.0,
        dual_objective=dual_obj,
        primal_objective=primal_obj,
        dual_objective_history=history,
    )
    return SmoResult(alpha=alpha, weights=weights, bias=bias, stats=stats)


def train_svm(
    dataset: LabeledSet,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: Optional[int] = None,
    *,
    technique: str = "",
    descriptor: str = "",
    area: str = "",
    mode: str = "",
    windowing: Optional[dict] = None,
    config: Optional[dict] = None,
) -> LinearSvmModel:
    """Standardize the training windows and fit the linear SVM."""
    zeros, ones = dataset.class_counts
    if zeros == 0 or ones == 0:
        raise ValidationError(
            f"training needs both classes, got {zeros} real / {ones} manipulated"
        )
    if not np.isfinite(dataset.vectors).all():
        raise ValidationError("training features contain non-finite values")
    scaler = fit_scaler(dataset.vectors)
    scaled = apply_scaler(scaler, dataset.vectors)
    y = np.where(dataset.labels == 1, 1.0, -1.0)
    result = smo_solve(scaled, y, C=C, tol=tol, max_iter=max_iter)
    return LinearSvmModel(
        weights=result.weights,
        bias=result.bias,
        C=C,
        tol=tol,
        scaler=scaler,
        technique=technique,
        descriptor=descriptor,
        area=area,
        mode=mode,
        windowing=dict(windowing or {}),
        config=dict(config or {}),
        train_stats=result.stats,
    )


def decision_scores(model: LinearSvmModel, vectors: np.ndarray) -> np.ndarray:
    """Signed decision values for one or more raw (unscaled) vectors."""
    scaled = apply_scaler(model.scaler, vectors)
    return scaled @ model.weights + model.bias


def predict(model: LinearSvmModel, x: np.ndarray | FeatureVector) -> tuple[int, float]:
    """(label, score) for one window; the tie score 0 maps to the real class."""
    if isinstance(x, FeatureVector):
        x = x.values
    score = float(decision_scores(model, np.asarray(x, dtype=np.float64)))
    return (1 if score > 0 else 0), score


def _encode_array(arr: np.ndarray) -> dict:
    data = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "encoding": "base64/f64-le",
        "length": int(data.shape[0]),
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def _decode_array(obj: dict, name: str) -> np.ndarray:
    try:
        if obj["encoding"] != "base64/f64-le":
            raise SchemaError(f"unknown array encoding {obj['encoding']!r}")
        raw = base64.b64decode(obj["data"])
        arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        if arr.shape[0] != int(obj["length"]):
            raise SchemaError(f"{name}: length mismatch")
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: malformed array block") from exc
    return arr


def save_model(model: LinearSvmModel, path: str | Path) -> None:
    """Write the model as JSON with losslessly encoded doubles."""
    payload = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "technique": model.technique,
        "descriptor": model.descriptor,
        "area": model.area,
        "mode": model.mode,
        "windowing": model.windowing,
        "C": float(model.C).hex(),
        "tol": float(model.tol).hex(),
        "weights": _encode_array(model.weights),
        "bias": float(model.bias).hex(),
        "scaler_mean": _encode_array(model.scaler.mean),
        "scaler_std": _encode_array(model.scaler.std),
        "config": model.config,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> LinearSvmModel:
    """Read a model file; bit-exact inverse of :func:`save_model`."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: cannot read model file") from exc
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: model file must hold a JSON object")
    version = payload.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema version {version!r}, expected {MODEL_SCHEMA_VERSION}"
        )
    for key in ("weights", "bias", "scaler_mean", "scaler_std", "C", "tol"):
        if key not in payload:
            raise SchemaError(f"{path}: missing field {key!r}")
    try:
        scaler = Scaler(
            _decode_array(payload["scaler_mean"], "scaler_mean"),
            _decode_array(payload["scaler_std"], "scaler_std"),
        )
        model = LinearSvmModel(
            weights=_decode_array(payload["weights"], "weights"),
            bias=float.fromhex(payload["bias"]),
            C=float.fromhex(payload["C"]),
            tol=float.fromhex(payload["tol"]),
            scaler=scaler,
            technique=payload.get("technique", ""),
            descriptor=payload.get("descriptor", ""),
            area=payload.get("area", ""),
            mode=payload.get("mode", ""),
            windowing=payload.get("windowing", {}),
            config=payload.get("config", {}),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed model fields") from exc
    return model
