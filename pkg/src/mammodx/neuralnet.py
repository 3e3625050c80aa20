"""Two-layer sigmoid perceptron trained by online back-propagation.

Squared-error loss E = 0.5 * sum((y - t)^2), per-pattern weight updates
with a momentum term:

    dw(t) = -lr * dE/dw + momentum * dw(t-1)

Patterns are reshuffled every epoch from the seeded generator, so a
(seed, patterns) pair fully determines the trained weights.  Training
stops once the fraction of patterns whose binarized output matches the
target reaches ``target_train_accuracy``, or at ``max_epochs``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# keep forward outputs strictly inside (0, 1) even when saturated
_OUTPUT_EPS = 1e-12

STOP_ACCURACY = "accuracy_reached"
STOP_MAX_EPOCHS = "max_epochs"


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_size: int
    output_dim: int
    learning_rate: float = 0.1
    momentum: float = 0.9
    max_epochs: int = 10000
    target_train_accuracy: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_size < 1 or self.output_dim < 1:
            raise ValueError("layer sizes must be positive")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if not 0.0 < self.target_train_accuracy <= 1.0:
            raise ValueError("target_train_accuracy must be in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class MlpModel:
    """Weights, biases and momentum state; mutated in place by train()."""

    w1: np.ndarray  # hidden x input
    b1: np.ndarray
    w2: np.ndarray  # output x hidden
    b2: np.ndarray
    prev_dw1: np.ndarray
    prev_db1: np.ndarray
    prev_dw2: np.ndarray
    prev_db2: np.ndarray
    config: MlpConfig


@dataclass(frozen=True)
class TrainingReport:
    epochs_run: int
    final_train_accuracy: float
    epoch_losses: list[float] = field(repr=False)
    stopped_by: str = STOP_MAX_EPOCHS


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _OUTPUT_EPS, 1.0 - _OUTPUT_EPS)


def init_model(config: MlpConfig) -> MlpModel:
    """Seeded uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
    rng = np.random.default_rng([config.seed, 0])
    b_in = 1.0 / np.sqrt(config.input_dim)
    b_hid = 1.0 / np.sqrt(config.hidden_size)
    return MlpModel(
        w1=rng.uniform(-b_in, b_in, size=(config.hidden_size, config.input_dim)),
        b1=np.zeros(config.hidden_size),
        w2=rng.uniform(-b_hid, b_hid, size=(config.output_dim, config.hidden_size)),
        b2=np.zeros(config.output_dim),
        prev_dw1=np.zeros((config.hidden_size, config.input_dim)),
        prev_db1=np.zeros(config.hidden_size),
        prev_dw2=np.zeros((config.output_dim, config.hidden_size)),
        prev_db2=np.zeros(config.output_dim),
        config=config,
    )


def _as_input(x) -> np.ndarray:
    # accepts plain arrays or FeatureVector-like objects
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def forward(model: MlpModel, x) -> np.ndarray:
    """Network output, every component strictly in (0, 1)."""
    x = _as_input(x)
    if x.shape != (model.config.input_dim,):
        raise ValueError(f"input shape {x.shape} != ({model.config.input_dim},)")
    hidden = _sigmoid(model.w1 @ x + model.b1)
    return _sigmoid(model.w2 @ hidden + model.b2)


def loss_and_gradients(model: MlpModel, x, target):
    """Squared-error loss for one pattern and its weight/bias gradients.

    Returns (loss, gw1, gb1, gw2, gb2).
    """
    x = _as_input(x)
    t = np.asarray(target, dtype=np.float64)
    hidden = _sigmoid(model.w1 @ x + model.b1)
    y = _sigmoid(model.w2 @ hidden + model.b2)
    err = y - t
    loss = 0.5 * float(err @ err)
    delta_out = err * y * (1.0 - y)
    delta_hid = (model.w2.T @ delta_out) * hidden * (1.0 - hidden)
    return loss, np.outer(delta_hid, x), delta_hid, np.outer(delta_out, hidden), delta_out


def binarize(y) -> np.ndarray:
    """One-hot vector marking the maximum; ties go to the lowest index."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] == 0:
        raise ValueError("binarize expects a non-empty 1D vector")
    out = np.zeros(y.shape[0], dtype=np.int64)
    out[int(np.argmax(y))] = 1
    return out


def predict(model: MlpModel, x) -> int:
    """Class index: position of the 1 in binarize(forward(model, x))."""
    return int(np.argmax(binarize(forward(model, x))))


def _validate_patterns(config: MlpConfig, patterns) -> list:
    if not patterns:
        raise ValueError("no training patterns")
    prepared = []
    for i, (x, t) in enumerate(patterns):
        x = _as_input(x)
        t = np.asarray(t, dtype=np.float64)
        if x.shape != (config.input_dim,):
            raise ValueError(f"pattern {i}: input shape {x.shape} != ({config.input_dim},)")
        if t.shape != (config.output_dim,):
            raise ValueError(f"pattern {i}: target shape {t.shape} != ({config.output_dim},)")
        ones = np.count_nonzero(t == 1.0)
        if ones != 1 or np.count_nonzero(t) != ones:
            raise ValueError(f"pattern {i}: target must be one-hot, got {t}")
        prepared.append((x, t))
    return prepared


def _train_accuracy(model: MlpModel, prepared) -> float:
    hits = 0
    for x, t in prepared:
        if np.array_equal(binarize(forward(model, x)), t):
            hits += 1
    return hits / len(prepared)


def train(model: MlpModel, patterns) -> TrainingReport:
    """Online back-propagation with momentum; mutates the model in place."""
    cfg = model.config
    prepared = _validate_patterns(cfg, list(patterns))
    rng = np.random.default_rng([cfg.seed, 1])
    lr, mc = cfg.learning_rate, cfg.momentum

    losses: list[float] = []
    accuracy = 0.0
    stopped_by = STOP_MAX_EPOCHS
    epochs_run = 0
    for _ in range(cfg.max_epochs):
        total_loss = 0.0
        for i in rng.permutation(len(prepared)):
            x, t = prepared[i]
            loss, gw1, gb1, gw2, gb2 = loss_and_gradients(model, x, t)
            total_loss += loss
            model.prev_dw1 = -lr * gw1 + mc * model.prev_dw1
            model.prev_db1 = -lr * gb1 + mc * model.prev_db1
            model.prev_dw2 = -lr * gw2 + mc * model.prev_dw2
            model.prev_db2 = -lr * gb2 + mc * model.prev_db2
            model.w1 += model.prev_dw1
            model.b1 += model.prev_db1
            model.w2 += model.prev_dw2
            model.b2 += model.prev_db2
        epochs_run += 1
        losses.append(total_loss / len(prepared))
        accuracy = _train_accuracy(model, prepared)
        if accuracy >= cfg.target_train_accuracy:
            stopped_by = STOP_ACCURACY
            break
    return TrainingReport(
        epochs_run=epochs_run,
        final_train_accuracy=accuracy,
        epoch_losses=losses,
        stopped_by=stopped_by,
    )


# --- text serialization ------------------------------------------------

_FORMAT_LINE = "mammodx-mlp 1"

_CONFIG_FIELDS = (
    ("input_dim", int),
    ("hidden_size", int),
    ("output_dim", int),
    ("learning_rate", float),
    ("momentum", float),
    ("max_epochs", int),
    ("target_train_accuracy", float),
    ("seed", int),
)

_PLANES = ("w1", "b1", "w2", "b2", "prev_dw1", "prev_db1", "prev_dw2", "prev_db2")


class ModelFormatError(ValueError):
    """Raised for unreadable or inconsistent model files."""


def _fmt(value) -> str:
    return format(value, ".17g") if isinstance(value, float) else str(value)


def save_model(model: MlpModel, path, feature_scale: float = 1.0) -> None:
    """Write the model as text; floats use 17 significant digits, so a
    load followed by a save reproduces the file byte for byte."""
    with open(path, "w") as fh:
        fh.write(_FORMAT_LINE + "\n")
        for name, _ in _CONFIG_FIELDS:
            fh.write(f"{name}={_fmt(getattr(model.config, name))}\n")
        fh.write(f"feature_scale={_fmt(float(feature_scale))}\n")
        for name in _PLANES:
            plane = np.atleast_2d(getattr(model, name))
            fh.write(f"plane {name} {plane.shape[0]} {plane.shape[1]}\n")
            for row in plane:
                fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def load_model(path):
    """Read a save_model() file; returns (model, feature_scale)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise ModelFormatError(f"{path}: truncated model file")
        line = lines[pos]
        pos += 1
        return line

    if take() != _FORMAT_LINE:
        raise ModelFormatError(f"{path}: not a {_FORMAT_LINE!r} file")
    fields = {}
    for name, conv in _CONFIG_FIELDS + (("feature_scale", float),):
        line = take()
        key, _, raw = line.partition("=")
        if key != name:
            raise ModelFormatError(f"{path}: expected {name}=..., got {line!r}")
        try:
            fields[name] = conv(raw)
        except ValueError as exc:
            raise ModelFormatError(f"{path}: bad value for {name}: {raw!r}") from exc
    feature_scale = fields.pop("feature_scale")
    config = MlpConfig(**fields)

    planes = {}
    for name in _PLANES:
        header = take().split()
        if len(header) != 4 or header[0] != "plane" or header[1] != name:
            raise ModelFormatError(f"{path}: expected plane header for {name}")
        rows, cols = int(header[2]), int(header[3])
        data = np.empty((rows, cols))
        for r in range(rows):
            parts = take().split()
            if len(parts) != cols:
                raise ModelFormatError(f"{path}: plane {name} row {r} has {len(parts)} values, want {cols}")
            data[r] = [float(p) for p in parts]
        planes[name] = data[0] if name.endswith(("b1", "b2")) else data

    model = MlpModel(config=config, **planes)
    expect = {
        "w1": (config.hidden_size, config.input_dim),
        "b1": (config.hidden_size,),
        "w2": (config.output_dim, config.hidden_size),
        "b2": (config.output_dim,),
    }
    for name, shape in expect.items():
        if getattr(model, name).shape != shape:
            raise ModelFormatError(f"{path}: plane {name} shape mismatch with config")
        if getattr(model, "prev_d" + name).shape != shape:
            raise ModelFormatError(f"{path}: plane prev_d{name} shape mismatch with config")
    return model, feature_scale
