"""A small residual MLP that fits an unsigned distance function.

Architecture: three blocks of two fully connected layers with Leaky-ReLU
activations (3 -> h, h -> h | h -> h, h -> h | h -> h, h -> 1). The output of
block 2 adds its input (a residual skip at the block 1 -> 2 junction), and
block 3's first activation adds its input before the final linear head (the
2 -> 3 junction skip). Forward, training (Adam on mean squared error) and the
exact gradient with respect to the 3D input are implemented directly on
float64 numpy arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError, InvalidInputError

__all__ = [
    "MlpArchitecture",
    "TrainConfig",
    "NeuralUdf",
    "param_count",
    "init",
    "forward",
    "train",
    "input_gradient",
    "value_and_input_gradient",
    "mse",
    "save_checkpoint",
    "load_checkpoint",
    "write_loss_trace",
]

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer widths and activation slope of the 6-layer residual MLP."""

    hidden: int = 128
    negative_slope: float = 0.01  # Leaky-ReLU; derivative at 0 is the slope

    def __post_init__(self):
        if self.hidden < 1:
            raise InvalidInputError("hidden width must be >= 1")
        if not 0.0 < self.negative_slope < 1.0:
            raise InvalidInputError("negative_slope must lie in (0, 1)")

    @property
    def layer_dims(self):
        h = self.hidden
        return [(3, h), (h, h), (h, h), (h, h), (h, h), (h, 1)]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    epochs: int = 2000
    seed: int = 0

    def __post_init__(self):
        if min(self.learning_rate, self.beta1, self.beta2, self.epsilon) <= 0:
            raise InvalidInputError("Adam parameters must be positive")
        if max(self.beta1, self.beta2) >= 1.0:
            raise InvalidInputError("Adam betas must be < 1")
        if self.batch_size < 1 or self.epochs < 1:
            raise InvalidInputError("batch_size and epochs must be >= 1")


def param_count(arch: MlpArchitecture) -> int:
    return sum(din * dout + dout for din, dout in arch.layer_dims)


@dataclass(frozen=True)
class NeuralUdf:
    """Architecture plus a flat parameter vector; immutable during evaluation."""

    arch: MlpArchitecture
    theta: np.ndarray  # flat float64 parameter vector
    seed: int = 0
    epochs_trained: int = 0
    final_loss: float = float("nan")
    loss_trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64).ravel()
        expected = param_count(self.arch)
        if theta.size != expected:
            raise InvalidInputError(f"theta has {theta.size} entries, expected {expected}")
        object.__setattr__(self, "theta", theta)

    def layers(self):
        """(W, b) views into the flat parameter vector, in layer order."""
        out = []
        offset = 0
        for din, dout in self.arch.layer_dims:
            w = self.theta[offset:offset + din * dout].reshape(din, dout)
            offset += din * dout
            b = self.theta[offset:offset + dout]
            offset += dout
            out.append((w, b))
        return out

    def __call__(self, x):
        return forward(self, x)

    def gradient(self, x):
        return input_gradient(self, x)

    def value_and_gradient(self, x):
        return value_and_input_gradient(self, x)


def init(arch: MlpArchitecture, seed: int) -> NeuralUdf:
    """He fan-in normal weights, zero biases; deterministic per seed."""
    rng = np.random.default_rng(seed)
    parts = []
    for din, dout in arch.layer_dims:
        parts.append(rng.normal(0.0, np.sqrt(2.0 / din), size=din * dout))
        parts.append(np.zeros(dout))
    return NeuralUdf(arch=arch, theta=np.concatenate(parts), seed=seed)


def _lrelu(z, slope):
    return np.where(z > 0.0, z, slope * z)


def _lrelu_grad(z, slope):
    # derivative at exactly 0 is the negative slope, fixed for reproducibility
    return np.where(z > 0.0, 1.0, slope)


def _forward_full(net: NeuralUdf, x: np.ndarray):
    """Forward pass keeping pre-activations and skip sums for backprop."""
    slope = net.arch.negative_slope
    (w1, b1), (w2, b2), (w3, b3), (w4, b4), (w5, b5), (w6, b6) = net.layers()
    z1 = x @ w1 + b1
    a1 = _lrelu(z1, slope)
    z2 = a1 @ w2 + b2
    a2 = _lrelu(z2, slope)          # block 1 output
    z3 = a2 @ w3 + b3
    a3 = _lrelu(z3, slope)
    z4 = a3 @ w4 + b4
    s4 = _lrelu(z4, slope) + a2     # skip at the 1 -> 2 junction
    z5 = s4 @ w5 + b5
    s5 = _lrelu(z5, slope) + s4     # skip at the 2 -> 3 junction
    out = s5 @ w6 + b6
    return out[:, 0], (x, z1, a1, z2, a2, z3, a3, z4, s4, z5, s5)


def forward(net: NeuralUdf, x):
    """Network output: a scalar for a (3,) input, a vector for (n, 3)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out, _ = _forward_full(net, x.reshape(-1, 3))
    return float(out[0]) if single else out


def _input_gradient_from_cache(net: NeuralUdf, cache):
    slope = net.arch.negative_slope
    (w1, _), (w2, _), (w3, _), (w4, _), (w5, _), (w6, _) = net.layers()
    _, z1, _, z2, _, z3, _, z4, _, z5, _ = cache
    g_s5 = np.broadcast_to(w6[:, 0], (len(z1), w6.shape[0]))
    g_s4 = (g_s5 * _lrelu_grad(z5, slope)) @ w5.T + g_s5
    g_a3 = (g_s4 * _lrelu_grad(z4, slope)) @ w4.T
    g_a2 = (g_a3 * _lrelu_grad(z3, slope)) @ w3.T + g_s4
    g_a1 = (g_a2 * _lrelu_grad(z2, slope)) @ w2.T
    return (g_a1 * _lrelu_grad(z1, slope)) @ w1.T


def input_gradient(net: NeuralUdf, x):
    """Exact reverse-mode gradient of the output with respect to the input."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    _, cache = _forward_full(net, x.reshape(-1, 3))
    g_x = _input_gradient_from_cache(net, cache)
    return g_x[0] if single else g_x


def value_and_input_gradient(net: NeuralUdf, x):
    """Output and its input gradient from a single forward pass."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out, cache = _forward_full(net, x.reshape(-1, 3))
    g_x = _input_gradient_from_cache(net, cache)
    return (float(out[0]), g_x[0]) if single else (out, g_x)


def _backprop_params(net: NeuralUdf, cache, residual_grad):
    """Gradient of the batch loss with respect to the flat parameter vector."""
    slope = net.arch.negative_slope
    (w1, _), (w2, _), (w3, _), (w4, _), (w5, _), (w6, _) = net.layers()
    x, z1, a1, z2, a2, z3, a3, z4, s4, z5, s5 = cache
    g_out = residual_grad[:, None]  # (n, 1)

    g_w6 = s5.T @ g_out
    g_b6 = g_out.sum(axis=0)
    g_s5 = g_out @ w6.T

    g_z5 = g_s5 * _lrelu_grad(z5, slope)
    g_w5 = s4.T @ g_z5
    g_b5 = g_z5.sum(axis=0)
    g_s4 = g_z5 @ w5.T + g_s5  # skip carries the gradient past block 3

    g_z4 = g_s4 * _lrelu_grad(z4, slope)
    g_w4 = a3.T @ g_z4
    g_b4 = g_z4.sum(axis=0)

    g_a3 = g_z4 @ w4.T
    g_z3 = g_a3 * _lrelu_grad(z3, slope)
    g_w3 = a2.T @ g_z3
    g_b3 = g_z3.sum(axis=0)

    g_a2 = g_z3 @ w3.T + g_s4  # skip carries the gradient past block 2
    g_z2 = g_a2 * _lrelu_grad(z2, slope)
    g_w2 = a1.T @ g_z2
    g_b2 = g_z2.sum(axis=0)

    g_a1 = g_z2 @ w2.T
    g_z1 = g_a1 * _lrelu_grad(z1, slope)
    g_w1 = x.T @ g_z1
    g_b1 = g_z1.sum(axis=0)

    return np.concatenate([
        g_w1.ravel(), g_b1, g_w2.ravel(), g_b2, g_w3.ravel(), g_b3,
        g_w4.ravel(), g_b4, g_w5.ravel(), g_b5, g_w6.ravel(), g_b6,
    ])


def train(net: NeuralUdf, data, cfg: TrainConfig) -> NeuralUdf:
    """Minimize mean squared error with Adam over shuffled mini-batches.

    `data` is a TrainingSet (anything with .inputs and .targets) or an
    (inputs, targets) pair. Returns a new NeuralUdf carrying the epoch-wise
    loss trace; the input net is left untouched. Raises DivergenceError on a
    non-finite loss.
    """
    if hasattr(data, "inputs"):
        inputs, targets = data.inputs, data.targets
    else:
        inputs, targets = data
    x = np.asarray(inputs, dtype=np.float64).reshape(-1, 3)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if len(x) == 0:
        raise InvalidInputError("training set is empty")
    if len(x) != len(y):
        raise InvalidInputError("inputs and targets disagree in length")

    theta = net.theta.copy()
    work = replace(net, theta=theta)  # shares theta: views update in place
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    rng = np.random.default_rng(cfg.seed)
    order = np.arange(len(x))
    trace = []
    t = 0
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        epoch_losses = []
        for start in range(0, len(x), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            out, cache = _forward_full(work, x[batch])
            residual = out - y[batch]
            loss = float(residual @ residual) / len(batch)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            grad = _backprop_params(work, cache, 2.0 * residual / len(batch))
            t += 1
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
            m_hat = m / (1.0 - cfg.beta1**t)
            v_hat = v / (1.0 - cfg.beta2**t)
            theta -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
            epoch_losses.append(loss)
        trace.append(float(np.mean(epoch_losses)))
    return replace(
        net,
        theta=theta,
        epochs_trained=net.epochs_trained + cfg.epochs,
        final_loss=trace[-1],
        loss_trace=tuple(trace),
    )


def mse(net: NeuralUdf, inputs, targets) -> float:
    """Mean squared error over a full dataset."""
    out = forward(net, np.asarray(inputs, dtype=np.float64).reshape(-1, 3))
    residual = out - np.asarray(targets, dtype=np.float64).ravel()
    return float(residual @ residual) / len(residual)


def save_checkpoint(path, net: NeuralUdf) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "arch": {"hidden": net.arch.hidden, "negative_slope": net.arch.negative_slope},
        "seed": net.seed,
        "epochs_trained": net.epochs_trained,
        "final_loss": net.final_loss,
        "loss_trace": list(net.loss_trace),
        "theta": net.theta.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> NeuralUdf:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise InvalidInputError(f"unsupported checkpoint version {payload.get('format_version')}")
    arch = MlpArchitecture(hidden=payload["arch"]["hidden"],
                           negative_slope=payload["arch"]["negative_slope"])
    return NeuralUdf(arch=arch, theta=np.array(payload["theta"], dtype=np.float64),
                     seed=payload["seed"], epochs_trained=payload["epochs_trained"],
                     final_loss=payload["final_loss"],
                     loss_trace=tuple(payload.get("loss_trace", ())))


def write_loss_trace(path, net: NeuralUdf) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(net.loss_trace, start=1):
            fh.write(f"{i},{loss!r}\n")
