"""A small fully connected Q-network in plain numpy.

ReLU hidden layers, linear output, masked squared-error loss with exact
backpropagation and plain SGD.  Inputs may be a single vector or a batch
(rows are samples); batch losses and gradients are means over the batch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DIMS = (18, 64, 64, 64, 7)
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    """Non-finite loss or gradient during training."""


class CheckpointError(ValueError):
    """Malformed or incompatible checkpoint text."""


@dataclass(frozen=True)
class NetworkSpec:
    layer_dims: tuple[int, ...] = DEFAULT_DIMS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        if len(self.layer_dims) < 2 or any(d < 1 for d in self.layer_dims):
            raise ValueError(f"bad layer_dims {self.layer_dims}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1


@dataclass
class NetworkParams:
    spec: NetworkSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def arrays(self) -> list[np.ndarray]:
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def init_params(spec: NetworkSpec) -> NetworkParams:
    """He-uniform weights (std sqrt(2 / fan_in)), zero biases."""
    rng = np.random.default_rng(spec.seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_dims[:-1], spec.layer_dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(spec, weights, biases)


def _as_batch(params: NetworkParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.spec.layer_dims[0]:
        raise ValueError(f"input of shape {x.shape} does not match input dim {params.spec.layer_dims[0]}")
    return x, single


def _forward_cache(params: NetworkParams, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = acts[-1] @ w.T + b
        acts.append(z if i == last else np.maximum(z, 0.0))
    return acts


def forward(params: NetworkParams, x) -> np.ndarray:
    xb, single = _as_batch(params, x)
    out = _forward_cache(params, xb)[-1]
    return out[0] if single else out


def mse_loss(pred, action, target) -> tuple[float, np.ndarray]:
    """Mean of ``(target - pred[action])**2`` and its gradient w.r.t. ``pred``."""
    pred = np.asarray(pred, dtype=float)
    single = pred.ndim == 1
    if single:
        pred = pred[None, :]
    action = np.atleast_1d(np.asarray(action, dtype=int))
    target = np.atleast_1d(np.asarray(target, dtype=float))
    n_out = pred.shape[1]
    if np.any(action < 0) or np.any(action >= n_out):
        raise ValueError(f"action index out of range [0, {n_out})")
    idx = np.arange(len(pred))
    diff = pred[idx, action] - target
    loss = float(np.mean(diff ** 2))
    grad = np.zeros_like(pred)
    grad[idx, action] = 2.0 * diff / len(pred)
    return loss, (grad[0] if single else grad)


def backward(params: NetworkParams, x, action, target) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss plus exact gradients for every weight matrix and bias vector."""
    xb, _ = _as_batch(params, x)
    acts = _forward_cache(params, xb)
    loss, delta = mse_loss(acts[-1], action, target)
    delta = np.atleast_2d(delta)
    gw = [None] * len(params.weights)
    gb = [None] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        gw[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ params.weights[i]) * (acts[i] > 0)
    return loss, gw, gb


def sgd_step(params: NetworkParams, grad_w, grad_b, learning_rate: float) -> NetworkParams:
    """In-place ``params -= lr * grad``; returns ``params``."""
    if learning_rate < 0:
        raise ValueError("learning_rate must be >= 0")
    for g in list(grad_w) + list(grad_b):
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient")
    for w, g in zip(params.weights, grad_w):
        w -= learning_rate * g
    for b, g in zip(params.biases, grad_b):
        b -= learning_rate * g
    return params


def copy_params(src: NetworkParams, dst: NetworkParams | None = None) -> NetworkParams:
    """Deep copy of ``src``; written into ``dst`` when it is given."""
    if dst is None:
        return src.copy()
    for d, s in zip(dst.arrays(), src.arrays()):
        d[...] = s
    return dst


# --- text serialisation ------------------------------------------------------

def params_to_lines(params: NetworkParams) -> list[str]:
    lines = ["layer_dims " + " ".join(map(str, params.spec.layer_dims)),
             f"seed {params.spec.seed}"]
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        lines.append(f"weight {i} {w.shape[0]} {w.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in w)
        lines.append(f"bias {i} {b.shape[0]}")
        lines.append(" ".join(repr(float(v)) for v in b))
    return lines


def params_from_lines(lines: list[str], pos: int = 0) -> tuple[NetworkParams, int]:
    """Parse what :func:`params_to_lines` wrote, starting at ``lines[pos]``."""
    try:
        head = lines[pos].split()
        if head[0] != "layer_dims":
            raise CheckpointError(f"expected layer_dims at line {pos + 1}")
        dims = tuple(int(v) for v in head[1:])
        seed_line = lines[pos + 1].split()
        if seed_line[0] != "seed":
            raise CheckpointError(f"expected seed at line {pos + 2}")
        spec = NetworkSpec(dims, int(seed_line[1]))
        pos += 2
        weights, biases = [], []
        for i in range(spec.n_layers):
            tag, idx, rows, cols = lines[pos].split()
            if tag != "weight" or int(idx) != i or (int(rows), int(cols)) != (dims[i + 1], dims[i]):
                raise CheckpointError(f"bad weight header at line {pos + 1}")
            w = np.array([[float(v) for v in lines[pos + 1 + r].split()] for r in range(int(rows))])
            if w.shape != (int(rows), int(cols)):
                raise CheckpointError(f"weight {i} has wrong shape")
            pos += 1 + int(rows)
            tag, idx, n = lines[pos].split()
            if tag != "bias" or int(idx) != i or int(n) != dims[i + 1]:
                raise CheckpointError(f"bad bias header at line {pos + 1}")
            b = np.array([float(v) for v in lines[pos + 1].split()])
            if b.shape != (int(n),):
                raise CheckpointError(f"bias {i} has wrong shape")
            pos += 2
            weights.append(w)
            biases.append(b)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"malformed network block: {exc}") from exc
    return NetworkParams(spec, weights, biases), pos
