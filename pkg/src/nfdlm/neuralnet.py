"""Minimal neural engine: dense MLP and single-step LSTM binary classifiers.

Everything is plain numpy: forward passes, exact analytic backpropagation for
binary cross-entropy, Adam updates, and a seeded mini-batch training loop.
Flows are independent records, so the LSTM consumes each row as a length-1
sequence with zero initial hidden and cell state.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError
from .feature_select import SelectedFeatures
from .flow_data import FlowDataset, atomic_write_text
from .preprocess import ScalerParams, scale_columns

MODEL_FORMAT = "nfdlm.model"
MODEL_FORMAT_VERSION = 1

BCE_EPS = 1e-12


def sigmoid(x):
    """1 / (1 + e^-x), computed from exp(-|x|) so large |x| cannot overflow."""
    arr = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(arr))
    out = np.where(arr >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return float(out) if arr.ndim == 0 else out


def relu(x):
    """max(0, x)."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.maximum(0.0, arr)
    return float(out) if arr.ndim == 0 else out


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str  # relu | sigmoid | linear

    def __post_init__(self) -> None:
        self.weights = np.array(self.weights, dtype=np.float64)
        self.bias = np.array(self.bias, dtype=np.float64)
        if self.activation not in ("relu", "sigmoid", "linear"):
            raise DataError(f"unknown activation: {self.activation!r}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise DataError("dense layer shape mismatch")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise DataError("dense layer parameters must be finite")

    @property
    def input_size(self) -> int:
        return self.weights.shape[1]

    @property
    def output_size(self) -> int:
        return self.weights.shape[0]


@dataclass
class LstmCell:
    """One LSTM layer. Gate matrices are (hidden, input + hidden): the input
    slice first, then the recurrent slice."""

    w_in: np.ndarray
    w_forget: np.ndarray
    w_cand: np.ndarray
    w_out: np.ndarray
    b_in: np.ndarray
    b_forget: np.ndarray
    b_cand: np.ndarray
    b_out: np.ndarray
    hidden_size: int

    def __post_init__(self) -> None:
        for name in ("w_in", "w_forget", "w_cand", "w_out"):
            setattr(self, name, np.array(getattr(self, name), dtype=np.float64))
        for name in ("b_in", "b_forget", "b_cand", "b_out"):
            setattr(self, name, np.array(getattr(self, name), dtype=np.float64))
        h = self.hidden_size
        shape = self.w_in.shape
        if shape[0] != h or shape[1] <= h:
            raise DataError("LSTM gate matrices must be (hidden, input + hidden)")
        for name in ("w_in", "w_forget", "w_cand", "w_out"):
            if getattr(self, name).shape != shape:
                raise DataError("LSTM gate blocks must share one shape")
        for name in ("b_in", "b_forget", "b_cand", "b_out"):
            if getattr(self, name).shape != (h,):
                raise DataError("LSTM gate biases must have hidden_size entries")

    @property
    def input_size(self) -> int:
        return self.w_in.shape[1] - self.hidden_size

    @property
    def output_size(self) -> int:
        return self.hidden_size


Layer = DenseLayer | LstmCell


@dataclass
class Model:
    kind: str  # mlp | lstm
    layers: list[Layer]
    input_features: list[str]
    scaler: ScalerParams | None = None
    selection: SelectedFeatures | None = None
    training_config: "TrainingConfig | None" = None
    init_seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("mlp", "lstm"):
            raise DataError(f"unknown model kind: {self.kind!r}")
        if not self.layers:
            raise DataError("model needs at least one layer")
        if self.layers[0].input_size != len(self.input_features):
            raise DataError("first layer width must equal the input feature count")
        head = self.layers[-1]
        if not isinstance(head, DenseLayer) or head.output_size != 1 or head.activation != "sigmoid":
            raise DataError("last layer must be one sigmoid unit")


@dataclass
class TrainingConfig:
    epochs: int
    batch_size: int
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_eps": self.adam_eps,
            "seed": self.seed,
            "shuffle": self.shuffle,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        return cls(**d)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def build_mlp(
    input_features: list[str], hidden: tuple[int, ...] = (6, 6), seed: int = 0
) -> Model:
    """Dense ReLU stack ending in one sigmoid unit, Glorot-initialized."""
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    width = len(input_features)
    for h in hidden:
        layers.append(DenseLayer(_glorot(rng, h, width), np.zeros(h), "relu"))
        width = h
    layers.append(DenseLayer(_glorot(rng, 1, width), np.zeros(1), "sigmoid"))
    return Model(kind="mlp", layers=layers, input_features=list(input_features), init_seed=seed)


def build_lstm(
    input_features: list[str], hidden: tuple[int, ...] = (64, 128), seed: int = 0
) -> Model:
    """Stacked LSTM layers plus a dense sigmoid head.

    Gate weights are Glorot-initialized in order input, forget, candidate,
    output; forget-gate biases start at 1.
    """
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    width = len(input_features)
    for h in hidden:
        cols = width + h
        layers.append(
            LstmCell(
                w_in=_glorot(rng, h, cols),
                w_forget=_glorot(rng, h, cols),
                w_cand=_glorot(rng, h, cols),
                w_out=_glorot(rng, h, cols),
                b_in=np.zeros(h),
                b_forget=np.ones(h),
                b_cand=np.zeros(h),
                b_out=np.zeros(h),
                hidden_size=h,
            )
        )
        width = h
    layers.append(DenseLayer(_glorot(rng, 1, width), np.zeros(1), "sigmoid"))
    return Model(kind="lstm", layers=layers, input_features=list(input_features), init_seed=seed)


def _dense_apply(layer: DenseLayer, x: np.ndarray):
    z = x @ layer.weights.T + layer.bias
    if layer.activation == "relu":
        a = np.maximum(0.0, z)
    elif layer.activation == "sigmoid":
        a = sigmoid(z)
    else:
        a = z
    return z, a


def lstm_cell_forward(cell: LstmCell, x: np.ndarray):
    """Single-step cell pass from zero initial state.

    Gate pre-activations use only the input slice of each gate matrix: the
    recurrent slice multiplies the zero initial hidden state. With zero
    initial cell state, c = i * g (the forget term f * c0 vanishes) and
    h = o * tanh(c).

    Returns (h, cache) where cache carries what backward needs.
    """
    n_in = cell.input_size
    i = sigmoid(x @ cell.w_in[:, :n_in].T + cell.b_in)
    g = np.tanh(x @ cell.w_cand[:, :n_in].T + cell.b_cand)
    o = sigmoid(x @ cell.w_out[:, :n_in].T + cell.b_out)
    c = i * g
    tc = np.tanh(c)
    h = o * tc
    return h, (x, i, g, o, tc)


def _forward_cached(model: Model, batch: np.ndarray):
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.layers[0].input_size:
        raise DataError(
            f"batch width {x.shape[1] if x.ndim == 2 else '?'} does not match "
            f"model input width {model.layers[0].input_size}"
        )
    caches = []
    for layer in model.layers:
        if isinstance(layer, DenseLayer):
            z, a = _dense_apply(layer, x)
            caches.append((x, z, a))
            x = a
        else:
            h, cache = lstm_cell_forward(layer, x)
            caches.append(cache)
            x = h
    return x[:, 0], caches


def mlp_forward(model: Model, batch: np.ndarray) -> np.ndarray:
    """Per-row attack probabilities from a dense stack."""
    if model.kind != "mlp":
        raise DataError(f"mlp_forward called on a {model.kind} model")
    probs, _ = _forward_cached(model, batch)
    return probs


def lstm_forward(model: Model, batch: np.ndarray) -> np.ndarray:
    """Per-row attack probabilities; each row is a length-1 sequence."""
    if model.kind != "lstm":
        raise DataError(f"lstm_forward called on a {model.kind} model")
    probs, _ = _forward_cached(model, batch)
    return probs


def forward(model: Model, batch: np.ndarray) -> np.ndarray:
    probs, _ = _forward_cached(model, batch)
    return probs


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with probabilities clamped to [eps, 1-eps]."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise DataError(f"length mismatch: {p.shape} vs {y.shape}")
    p = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def model_params(model: Model) -> list[np.ndarray]:
    """Trainable arrays in canonical order (mirrors backward()'s gradients)."""
    params: list[np.ndarray] = []
    for layer in model.layers:
        if isinstance(layer, DenseLayer):
            params += [layer.weights, layer.bias]
        else:
            params += [
                layer.w_in, layer.w_forget, layer.w_cand, layer.w_out,
                layer.b_in, layer.b_forget, layer.b_cand, layer.b_out,
            ]
    return params


def _backward_from_caches(model: Model, caches, probs: np.ndarray, labels: np.ndarray):
    y = np.asarray(labels, dtype=np.float64)
    n = y.size
    grads_rev: list[np.ndarray] = []
    # Sigmoid head fused with BCE: dL/dz = (p - y) / n.
    delta = ((probs - y) / n)[:, None]
    for pos in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[pos]
        cache = caches[pos]
        if isinstance(layer, DenseLayer):
            x, z, a = cache
            if pos != len(model.layers) - 1:
                if layer.activation == "relu":
                    delta = delta * (z > 0)
                elif layer.activation == "sigmoid":
                    delta = delta * a * (1.0 - a)
            dw = delta.T @ x
            db = delta.sum(axis=0)
            delta = delta @ layer.weights
            grads_rev += [db, dw]
        else:
            x, i, g, o, tc = cache
            n_in = layer.input_size
            h = layer.hidden_size
            dh = delta
            do = dh * tc
            dzo = do * o * (1.0 - o)
            dc = dh * o * (1.0 - tc * tc)
            dzi = dc * g * i * (1.0 - i)
            dzg = dc * i * (1.0 - g * g)

            def full(dz):
                # Recurrent slice saw only the zero initial state: zero grad.
                grad = np.zeros((h, n_in + h))
                grad[:, :n_in] = dz.T @ x
                return grad

            # Forget-gate grads are exactly zero: its output multiplies the
            # zero initial cell state. Reverse canonical order.
            grads_rev += [
                dzo.sum(axis=0),        # b_out
                dzg.sum(axis=0),        # b_cand
                np.zeros(h),            # b_forget
                dzi.sum(axis=0),        # b_in
                full(dzo),              # w_out
                full(dzg),              # w_cand
                np.zeros((h, n_in + h)),  # w_forget
                full(dzi),              # w_in
            ]
            delta = dzi @ layer.w_in[:, :n_in] + dzg @ layer.w_cand[:, :n_in] + dzo @ layer.w_out[:, :n_in]
    return list(reversed(grads_rev))


def backward(model: Model, batch: np.ndarray, labels: np.ndarray):
    """Exact gradients of bce_loss w.r.t. every parameter, in canonical order."""
    y = np.asarray(labels)
    x = np.asarray(batch)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DataError("batch and labels shapes disagree")
    probs, caches = _forward_cached(model, batch)
    return _backward_from_caches(model, caches, probs, labels)


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    cfg: TrainingConfig,
) -> None:
    """One in-place Adam update with bias-corrected moment estimates."""
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise DataError("params, grads, and state lengths disagree")
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)


@dataclass
class EpochStats:
    loss: float
    seconds: float


def train(model: Model, train_ds: FlowDataset, cfg: TrainingConfig):
    """Seeded mini-batch training; returns (model, per-epoch history).

    The dataset must already be scaled and reduced to the model's input
    features. Raises NumericError if the loss goes non-finite.
    """
    if train_ds.row_count == 0:
        raise DataError("cannot train on an empty dataset")
    if train_ds.labels is None:
        raise DataError("training data must be labeled")
    if train_ds.feature_names != model.input_features:
        raise DataError(
            "training columns do not match model input features: "
            f"{train_ds.feature_names} vs {model.input_features}"
        )
    x = np.ascontiguousarray(train_ds.matrix)
    y = train_ds.labels.astype(np.float64)
    n = x.shape[0]
    rng = np.random.default_rng(cfg.seed)
    params = model_params(model)
    state = AdamState.for_params(params)
    model.training_config = cfg

    history: list[EpochStats] = []
    for epoch in range(cfg.epochs):
        started = time.perf_counter()
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            xb, yb = x[rows], y[rows]
            probs, caches = _forward_cached(model, xb)
            loss = bce_loss(probs, yb)
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch + 1}, batch {start // cfg.batch_size + 1}"
                )
            grads = _backward_from_caches(model, caches, probs, yb)
            adam_step(params, grads, state, cfg)
            loss_sum += loss * rows.size
        history.append(EpochStats(loss=loss_sum / n, seconds=time.perf_counter() - started))
    return model, history


def predict_proba(model: Model, ds: FlowDataset, prescaled: bool = False) -> np.ndarray:
    """Attack probabilities for a dataset that contains the model's features.

    Columns are selected by name and scaled with the stored ScalerParams;
    pass prescaled=True for data that has already been standardized.
    """
    x = ds.feature_matrix(model.input_features)
    if not prescaled and model.scaler is not None:
        positions = []
        for name in model.input_features:
            try:
                positions.append(model.scaler.column_names.index(name))
            except ValueError:
                raise DataError(f"scaler has no parameters for column '{name}'") from None
        x = scale_columns(x, model.scaler.means[positions], model.scaler.stdevs[positions])
    return forward(model, x)


def predict(
    model: Model, ds: FlowDataset, threshold: float = 0.5, prescaled: bool = False
) -> np.ndarray:
    """Binary decisions: 1 where probability strictly exceeds the threshold."""
    probs = predict_proba(model, ds, prescaled=prescaled)
    return (probs > threshold).astype(np.int64)


def _layer_to_dict(layer: Layer) -> dict:
    if isinstance(layer, DenseLayer):
        return {
            "type": "dense",
            "activation": layer.activation,
            "weights": layer.weights.tolist(),
            "bias": layer.bias.tolist(),
        }
    return {
        "type": "lstm",
        "hidden_size": layer.hidden_size,
        "w_in": layer.w_in.tolist(),
        "w_forget": layer.w_forget.tolist(),
        "w_cand": layer.w_cand.tolist(),
        "w_out": layer.w_out.tolist(),
        "b_in": layer.b_in.tolist(),
        "b_forget": layer.b_forget.tolist(),
        "b_cand": layer.b_cand.tolist(),
        "b_out": layer.b_out.tolist(),
    }


def _layer_from_dict(d: dict) -> Layer:
    if d["type"] == "dense":
        return DenseLayer(np.array(d["weights"]), np.array(d["bias"]), d["activation"])
    if d["type"] == "lstm":
        return LstmCell(
            w_in=np.array(d["w_in"]),
            w_forget=np.array(d["w_forget"]),
            w_cand=np.array(d["w_cand"]),
            w_out=np.array(d["w_out"]),
            b_in=np.array(d["b_in"]),
            b_forget=np.array(d["b_forget"]),
            b_cand=np.array(d["b_cand"]),
            b_out=np.array(d["b_out"]),
            hidden_size=int(d["hidden_size"]),
        )
    raise DataError(f"unknown layer type: {d.get('type')!r}")


def save_model(model: Model, path) -> None:
    """Versioned JSON model file; floats round-trip bitwise."""
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "input_features": list(model.input_features),
        "layers": [_layer_to_dict(l) for l in model.layers],
        "scaler": None if model.scaler is None else model.scaler.to_dict(),
        "selection": None if model.selection is None else model.selection.to_dict(),
        "training_config": None
        if model.training_config is None
        else model.training_config.to_dict(),
        "init_seed": model.init_seed,
    }
    atomic_write_text(path, json.dumps(doc))


def load_model(path) -> Model:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: bad model file: {exc}") from exc
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {doc.get('format_version')}")
    return Model(
        kind=doc["kind"],
        layers=[_layer_from_dict(d) for d in doc["layers"]],
        input_features=list(doc["input_features"]),
        scaler=None if doc["scaler"] is None else ScalerParams.from_dict(doc["scaler"]),
        selection=None
        if doc["selection"] is None
        else SelectedFeatures.from_dict(doc["selection"]),
        training_config=None
        if doc["training_config"] is None
        else TrainingConfig.from_dict(doc["training_config"]),
        init_seed=doc["init_seed"],
    )
