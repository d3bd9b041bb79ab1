"""Self-contained trainable letter classifier.

Two variants share one dense-layer primitive: a flat baseline over 2-D
landmarks (the "fast" variant) and a point-cloud network that runs a shared
perceptron stack over each of the 21 landmarks and aggregates with a
channel-wise max pool, which makes its logits invariant to any permutation
of the input points. Gradients are exact reverse-mode, the optimizer is
Adam, and training is bit-deterministic for a fixed seed.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .landmarks import NUM_LANDMARKS, FeatureLayout, FeatureVector

# Static fingerspelling alphabet: 26 letters minus the dynamic J and Z.
LETTERS = "ABCDEFGHIKLMNOPQRSTUVWXY"
NUM_CLASSES = len(LETTERS)

_LOSS_CLAMP = 1e-12

_MODEL_MAGIC = b"SSNM"
_MODEL_FORMAT_VERSION = 1


class NetError(Exception):
    """Base class for classifier failures."""


class ShapeMismatch(NetError):
    pass


class LabelOutOfRange(NetError):
    pass


class EmptyDataset(NetError):
    pass


class VersionMismatch(NetError):
    """Model stream has an unknown magic header or format version."""


class CorruptModel(NetError):
    """Model stream is truncated or internally inconsistent."""


class Activation(Enum):
    RELU = "relu"
    IDENTITY = "identity"


class NetworkKind(Enum):
    DENSE_BASELINE = "dense_baseline"
    POINTNET_LITE = "pointnet_lite"


@dataclass
class DenseLayer:
    """y = act(W x + b) with W of shape (out_dim, in_dim)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: Activation

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ShapeMismatch("weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ShapeMismatch(f"bias size {self.bias.shape[0]} != out dim {self.weights.shape[0]}")
        if min(self.weights.shape) < 1:
            raise ShapeMismatch("layer dimensions must be positive")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ShapeMismatch("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def _zero_layer(in_dim: int, out_dim: int, activation: Activation) -> DenseLayer:
    return DenseLayer(np.zeros((out_dim, in_dim)), np.zeros(out_dim), activation)


def _chain(dims, final_identity=True) -> list[DenseLayer]:
    layers = []
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        act = Activation.IDENTITY if (last and final_identity) else Activation.RELU
        layers.append(_zero_layer(dims[i], dims[i + 1], act))
    return layers


@dataclass
class Network:
    """Classifier parameters plus enough structure to run both variants.

    For POINTNET_LITE the point_layers run over every landmark with shared
    weights and the head consumes the max-pooled feature; for
    DENSE_BASELINE point_layers is empty and the head consumes the flat
    42-value input directly.
    """

    kind: NetworkKind
    point_layers: list[DenseLayer]
    head_layers: list[DenseLayer]
    num_classes: int = NUM_CLASSES
    seed: int | None = None

    def __post_init__(self):
        if self.num_classes != NUM_CLASSES:
            raise ShapeMismatch(f"num_classes must be {NUM_CLASSES}")
        if self.kind is NetworkKind.DENSE_BASELINE:
            if self.point_layers:
                raise ShapeMismatch("dense baseline takes no point layers")
            if self.head_layers[0].in_dim != 2 * NUM_LANDMARKS:
                raise ShapeMismatch("dense baseline input must be 42")
        else:
            if not self.point_layers:
                raise ShapeMismatch("point-cloud network needs point layers")
            if self.point_layers[0].in_dim != 3:
                raise ShapeMismatch("per-point input must be 3")
            if self.head_layers[0].in_dim != self.point_layers[-1].out_dim:
                raise ShapeMismatch("head input must match pooled feature size")
        chain = self.point_layers + self.head_layers
        for prev, nxt in zip(chain, chain[1:]):
            if nxt.in_dim != prev.out_dim:
                raise ShapeMismatch(f"layer chain broken: {prev.out_dim} -> {nxt.in_dim}")
        if chain[-1].out_dim != self.num_classes:
            raise ShapeMismatch(f"final layer must emit {self.num_classes} logits")

    @property
    def feature_layout(self) -> FeatureLayout:
        if self.kind is NetworkKind.DENSE_BASELINE:
            return FeatureLayout.FLAT_2D
        return FeatureLayout.POINT_CLOUD_3D

    def parameters(self) -> list[np.ndarray]:
        """All parameter arrays in declaration order (W, b per layer)."""
        params = []
        for layer in self.point_layers + self.head_layers:
            params.append(layer.weights)
            params.append(layer.bias)
        return params

    def set_parameters(self, params: list[np.ndarray]) -> None:
        layers = self.point_layers + self.head_layers
        if len(params) != 2 * len(layers):
            raise ShapeMismatch(f"expected {2 * len(layers)} parameter arrays, got {len(params)}")
        for i, layer in enumerate(layers):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != layer.weights.shape or b.shape != layer.bias.shape:
                raise ShapeMismatch(f"parameter shape mismatch at layer {i}")
            layer.weights = np.asarray(w, dtype=np.float64)
            layer.bias = np.asarray(b, dtype=np.float64)


def build_dense_baseline(hidden=(64, 32)) -> Network:
    """Flat 42 -> hidden -> 24 baseline (zero-initialized; train() seeds weights)."""
    dims = [2 * NUM_LANDMARKS, *hidden, NUM_CLASSES]
    return Network(NetworkKind.DENSE_BASELINE, [], _chain(dims))


def build_pointnet_lite(point_dims=(32, 64), head_dims=(32,)) -> Network:
    """Shared per-point stack 3 -> point_dims, max pool, head -> 24."""
    point = _chain([3, *point_dims], final_identity=False)
    head = _chain([point_dims[-1], *head_dims, NUM_CLASSES])
    return Network(NetworkKind.POINTNET_LITE, point, head)


def _fresh_like(net: Network) -> Network:
    point = [_zero_layer(l.in_dim, l.out_dim, l.activation) for l in net.point_layers]
    head = [_zero_layer(l.in_dim, l.out_dim, l.activation) for l in net.head_layers]
    return Network(net.kind, point, head, net.num_classes, net.seed)


def init_parameters(net: Network, rng: np.random.Generator) -> None:
    """Glorot-uniform weights, zero biases, drawn layer by layer in order."""
    for layer in net.point_layers + net.head_layers:
        bound = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
        layer.weights = rng.uniform(-bound, bound, size=layer.weights.shape)
        layer.bias = np.zeros_like(layer.bias)


# ---------------------------------------------------------------------------
# Forward / loss / backward
# ---------------------------------------------------------------------------

def _coerce_input(net: Network, x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        if x.layout is not net.feature_layout:
            raise ShapeMismatch(f"network expects {net.feature_layout.value} features, got {x.layout.value}")
        x = x.values
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    expected = 2 * NUM_LANDMARKS if net.kind is NetworkKind.DENSE_BASELINE else 3 * NUM_LANDMARKS
    if arr.size != expected:
        raise ShapeMismatch(f"expected {expected} input values, got {arr.size}")
    return arr


def _dense_chain_forward(layers, a):
    """Run a over the layers, returning activations and pre-activations."""
    acts = [a]
    zs = []
    for layer in layers:
        z = a @ layer.weights.T + layer.bias
        zs.append(z)
        a = np.maximum(z, 0.0) if layer.activation is Activation.RELU else z
        acts.append(a)
    return acts, zs


def _forward_batch(net: Network, x: np.ndarray):
    """Logits plus the caches backward needs. x is (B, 42) or (B, 21, 3)."""
    if net.kind is NetworkKind.DENSE_BASELINE:
        acts, zs = _dense_chain_forward(net.head_layers, x)
        return acts[-1], {"head_acts": acts, "head_zs": zs}
    batch = x.shape[0]
    flat = x.reshape(batch * NUM_LANDMARKS, 3)
    p_acts, p_zs = _dense_chain_forward(net.point_layers, flat)
    feat = p_acts[-1].reshape(batch, NUM_LANDMARKS, -1)
    # First occurrence wins on ties, i.e. the lowest point index.
    arg = feat.argmax(axis=1)
    pooled = feat.max(axis=1)
    h_acts, h_zs = _dense_chain_forward(net.head_layers, pooled)
    return h_acts[-1], {
        "point_acts": p_acts, "point_zs": p_zs, "arg": arg,
        "head_acts": h_acts, "head_zs": h_zs,
    }


def forward(net: Network, x) -> np.ndarray:
    """Pre-softmax logits for one input frame's features."""
    arr = _coerce_input(net, x)
    if net.kind is NetworkKind.DENSE_BASELINE:
        batch = arr[None, :]
    else:
        batch = arr.reshape(1, NUM_LANDMARKS, 3)
    logits, _ = _forward_batch(net, batch)
    return logits[0]


def softmax(logits) -> np.ndarray:
    """Exp-normalize with max subtraction; argmax is preserved."""
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ShapeMismatch("logits must be finite")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def loss(probs, label: int) -> float:
    """Sparse categorical cross-entropy: -ln(p[label]), clamped at 1e-12."""
    p = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < p.shape[-1]:
        raise LabelOutOfRange(f"label {label} outside [0, {p.shape[-1]})")
    return float(-np.log(max(float(p[label]), _LOSS_CLAMP)))


def _dense_chain_backward(layers, acts, zs, delta):
    """delta is dLoss/d(output activation). Returns grads and input delta."""
    grads = [None] * len(layers)
    for i in reversed(range(len(layers))):
        layer = layers[i]
        if layer.activation is Activation.RELU:
            delta = delta * (zs[i] > 0.0)
        grads[i] = (delta.T @ acts[i], delta.sum(axis=0))
        delta = delta @ layer.weights
    return grads, delta


def _backward_batch(net: Network, x: np.ndarray, labels: np.ndarray):
    """Mean-over-batch gradients plus (mean loss, correct count)."""
    batch = x.shape[0]
    logits, cache = _forward_batch(net, x)
    probs = softmax(logits)
    p_label = probs[np.arange(batch), labels]
    mean_loss = float(np.mean(-np.log(np.maximum(p_label, _LOSS_CLAMP))))
    correct = int(np.sum(logits.argmax(axis=1) == labels))

    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    # Rows in the clamp region contribute a constant loss, hence no gradient.
    dlogits[p_label <= _LOSS_CLAMP] = 0.0
    dlogits /= batch

    head_grads, dpooled = _dense_chain_backward(
        net.head_layers, cache["head_acts"], cache["head_zs"], dlogits)
    if net.kind is NetworkKind.DENSE_BASELINE:
        return head_grads, mean_loss, correct

    arg = cache["arg"]
    channels = dpooled.shape[1]
    dfeat = np.zeros((batch, NUM_LANDMARKS, channels))
    dfeat[np.arange(batch)[:, None], arg, np.arange(channels)[None, :]] = dpooled
    point_grads, _ = _dense_chain_backward(
        net.point_layers, cache["point_acts"], cache["point_zs"],
        dfeat.reshape(batch * NUM_LANDMARKS, channels))
    return point_grads + head_grads, mean_loss, correct


def backward(net: Network, x, label: int) -> list[np.ndarray]:
    """Exact gradients of loss(softmax(forward(net, x)), label).

    Returned arrays mirror net.parameters(): W then b for every layer in
    declaration order. The max pool routes gradient to the lowest-index
    point among ties, so the result is deterministic.
    """
    if not 0 <= label < net.num_classes:
        raise LabelOutOfRange(f"label {label} outside [0, {net.num_classes})")
    arr = _coerce_input(net, x)
    if net.kind is NetworkKind.DENSE_BASELINE:
        batch = arr[None, :]
    else:
        batch = arr.reshape(1, NUM_LANDMARKS, 3)
    layer_grads, _, _ = _backward_batch(net, batch, np.asarray([label]))
    flat = []
    for dw, db in layer_grads:
        flat.append(dw)
        flat.append(db)
    return flat


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Standard Adam accumulators; one m/v pair per parameter array."""

    t: int
    m: list[np.ndarray]
    v: list[np.ndarray]
    lr: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def make_adam_state(params: list[np.ndarray], lr: float = 0.0005) -> AdamState:
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    return AdamState(
        t=0,
        m=[np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params],
        v=[np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params],
        lr=lr,
    )


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update. Returns (new params, new state)."""
    params = [np.asarray(p, dtype=np.float64) for p in params]
    grads = [np.asarray(g, dtype=np.float64) for g in grads]
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatch("params, grads and state must have matching arity")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatch(f"shape mismatch: param {p.shape}, grad {g.shape}")
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        new_params.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(t, new_m, new_v, state.lr, state.beta1, state.beta2, state.epsilon)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


def _stack_dataset(net: Network, dataset):
    xs, ys = [], []
    for features, label in dataset:
        xs.append(_coerce_input(net, features))
        ys.append(int(label))
    x = np.stack(xs)
    y = np.asarray(ys, dtype=np.int64)
    if np.any(y < 0) or np.any(y >= net.num_classes):
        raise LabelOutOfRange("dataset labels must lie in [0, 24)")
    if net.kind is NetworkKind.POINTNET_LITE:
        x = x.reshape(len(xs), NUM_LANDMARKS, 3)
    return x, y


def features_from_records(records, layout) -> list:
    """(label, RawHandFrame) records -> (FeatureVector, class index) pairs.

    Frames are mirrored to the right-hand canonical form and normalized,
    the same preprocessing the gateway applies at inference time.
    """
    from .landmarks import canonicalize_handedness, extract_features, normalize

    dataset = []
    for label, frame in records:
        if label not in LETTERS:
            raise LabelOutOfRange(f"label {label!r} is not a static letter")
        normalized = normalize(canonicalize_handedness(frame))
        dataset.append((extract_features(normalized, layout), LETTERS.index(label)))
    return dataset


def evaluate(net: Network, dataset) -> tuple[float, float]:
    """(mean loss, accuracy) over a dataset of (features, label) pairs."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot evaluate on an empty dataset")
    x, y = _stack_dataset(net, dataset)
    return _evaluate_arrays(net, x, y)


def _evaluate_arrays(net: Network, x, y) -> tuple[float, float]:
    logits, _ = _forward_batch(net, x)
    probs = softmax(logits)
    p_label = np.maximum(probs[np.arange(len(y)), y], _LOSS_CLAMP)
    mean_loss = float(np.mean(-np.log(p_label)))
    acc = float(np.mean(logits.argmax(axis=1) == y))
    return mean_loss, acc


def train(dataset, cfg: TrainConfig, net: Network, lr: float = 0.0005):
    """Train a fresh copy of net's architecture on the dataset.

    Deterministic for a fixed cfg.seed: one generator drives weight init
    (layer by layer), the train/validation split, and every epoch's
    shuffle, in that order. The input network's weights are ignored; its
    architecture is what trains. Returns (trained network, per-epoch
    metrics). Train loss/accuracy are running means over the epoch's
    batches; validation is evaluated after each epoch.
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    model = _fresh_like(net)
    model.seed = cfg.seed
    rng = np.random.default_rng(cfg.seed)
    init_parameters(model, rng)

    x, y = _stack_dataset(model, dataset)
    n = len(y)
    perm = rng.permutation(n)
    n_val = min(max(1, int(round(n * cfg.validation_fraction))), n - 1)
    val_idx, train_idx = perm[:n_val], perm[n_val:]

    params = model.parameters()
    state = make_adam_state(params, lr=lr)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = train_idx[rng.permutation(len(train_idx))]
        loss_sum = 0.0
        correct = 0
        for start in range(0, len(order), cfg.batch_size):
            batch_idx = order[start:start + cfg.batch_size]
            grads_pairs, batch_loss, batch_correct = _backward_batch(
                model, x[batch_idx], y[batch_idx])
            flat_grads = []
            for dw, db in grads_pairs:
                flat_grads.append(dw)
                flat_grads.append(db)
            params, state = adam_step(params, flat_grads, state)
            model.set_parameters(params)
            loss_sum += batch_loss * len(batch_idx)
            correct += batch_correct
        val_loss, val_acc = _evaluate_arrays(model, x[val_idx], y[val_idx])
        history.append(EpochMetrics(
            epoch=epoch,
            train_loss=loss_sum / len(order),
            train_accuracy=correct / len(order),
            val_loss=val_loss,
            val_accuracy=val_acc,
        ))
    return model, history


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_model(net: Network) -> bytes:
    """Versioned container: magic, JSON header, float64-LE parameters."""
    header = {
        "format_version": _MODEL_FORMAT_VERSION,
        "kind": net.kind.value,
        "point_dims": [net.point_layers[0].in_dim] + [l.out_dim for l in net.point_layers]
        if net.point_layers else [],
        "head_dims": [net.head_layers[0].in_dim] + [l.out_dim for l in net.head_layers],
        "num_classes": net.num_classes,
        "seed": net.seed,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    out = io.BytesIO()
    out.write(_MODEL_MAGIC)
    out.write(struct.pack("<I", len(blob)))
    out.write(blob)
    for p in net.parameters():
        out.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
    return out.getvalue()


def load_model(data: bytes) -> Network:
    if len(data) < 8 or data[:4] != _MODEL_MAGIC:
        raise VersionMismatch("not a signstream model stream (bad magic)")
    (header_len,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + header_len:
        raise CorruptModel("truncated header")
    try:
        header = json.loads(data[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"unreadable header: {exc}") from None
    if header.get("format_version") != _MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"unsupported format version {header.get('format_version')!r}")
    try:
        kind = NetworkKind(header["kind"])
        point_dims = header["point_dims"]
        head_dims = header["head_dims"]
        if kind is NetworkKind.DENSE_BASELINE:
            net = Network(kind, [], _chain(head_dims), header["num_classes"], header.get("seed"))
        else:
            net = Network(kind, _chain(point_dims, final_identity=False), _chain(head_dims),
                          header["num_classes"], header.get("seed"))
    except (KeyError, ShapeMismatch, ValueError, TypeError) as exc:
        raise CorruptModel(f"invalid header: {exc}") from None

    offset = 8 + header_len
    params = []
    for p in net.parameters():
        nbytes = p.size * 8
        chunk = data[offset:offset + nbytes]
        if len(chunk) < nbytes:
            raise CorruptModel("truncated parameter stream")
        params.append(np.frombuffer(chunk, dtype="<f8").reshape(p.shape).astype(np.float64))
        offset += nbytes
    if offset != len(data):
        raise CorruptModel(f"{len(data) - offset} trailing bytes after parameters")
    if any(not np.all(np.isfinite(p)) for p in params):
        raise CorruptModel("non-finite parameters")
    net.set_parameters(params)
    return net
