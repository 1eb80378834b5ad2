"""Minimal dense-network substrate: forward evaluation, reverse-mode
gradients, and the RMSprop optimizer.

Networks are stacks of fully connected layers, tanh on hidden layers and a
linear output layer whose columns are carved into heads: plain linear
blocks for numeric outputs and softmax blocks for categorical ones. The
layout is deliberately small and explicit so gradients can be audited
against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DivergenceError, StaleCacheError

CHECKPOINT_FORMAT = "agentsynth-mlp"
CHECKPOINT_VERSION = 1


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray   # (out,)
    activation: str      # "tanh" | "linear"

    def __post_init__(self):
        if self.activation not in ("tanh", "linear"):
            raise DataError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class Head:
    kind: str   # "linear" | "softmax"
    width: int


@dataclass
class Mlp:
    layers: list[DenseLayer]
    heads: tuple[Head, ...]

    @property
    def input_width(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_width(self) -> int:
        return self.layers[-1].weights.shape[0]

    def head_slices(self) -> list[tuple[Head, slice]]:
        out, col = [], 0
        for head in self.heads:
            out.append((head, slice(col, col + head.width)))
            col += head.width
        return out


@dataclass
class ForwardCache:
    """Activations recorded by forward(), consumed by backward()."""

    inputs: list[np.ndarray]    # per layer: input batch
    preacts: list[np.ndarray]   # per layer: W x + b
    outputs: np.ndarray         # post-head outputs
    squeezed: bool              # input arrived as a single vector


def init_mlp(input_width: int, hidden: tuple[int, ...], heads: tuple[Head, ...],
             rng: np.random.Generator) -> Mlp:
    """Glorot-uniform weights, zero biases, tanh hiddens, linear output."""
    output_width = sum(h.width for h in heads)
    widths = [input_width, *hidden, output_width]
    layers = []
    for l in range(len(widths) - 1):
        fan_in, fan_out = widths[l], widths[l + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        activation = "tanh" if l < len(widths) - 2 else "linear"
        layers.append(DenseLayer(weights, np.zeros(fan_out), activation))
    return Mlp(layers, tuple(heads))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-logit subtraction for overflow safety."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(mlp: Mlp, x) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network on a vector or a batch.

    Returns the post-head outputs and a cache for backward(). Softmax heads
    produce strictly positive blocks summing to one per row.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DataError("non-finite network input")
    squeezed = arr.ndim == 1
    a = arr[None, :] if squeezed else arr
    if a.shape[1] != mlp.input_width:
        raise DataError(f"input width {a.shape[1]} does not match network input {mlp.input_width}")
    inputs, preacts = [], []
    for layer in mlp.layers:
        inputs.append(a)
        z = a @ layer.weights.T + layer.biases
        preacts.append(z)
        a = np.tanh(z) if layer.activation == "tanh" else z
    out = a.copy()
    for head, sl in Mlp.head_slices(mlp):
        if head.kind == "softmax":
            out[:, sl] = softmax(a[:, sl])
    cache = ForwardCache(inputs, preacts, out, squeezed)
    return (out[0] if squeezed else out), cache


def backward(mlp: Mlp, cache: ForwardCache, output_grad) -> tuple[list[np.ndarray], np.ndarray]:
    """Reverse-mode gradients for every weight and bias.

    ``output_grad`` is the loss gradient with respect to the post-head
    outputs. Returns flat parameter gradients ordered like
    :func:`parameters` plus the gradient with respect to the input batch.
    """
    g = np.asarray(output_grad, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    if len(cache.inputs) != len(mlp.layers) or g.shape != cache.outputs.shape:
        raise StaleCacheError(
            f"cache shape {cache.outputs.shape} does not match gradient {g.shape} / network")
    # push through the heads: softmax needs its Jacobian, linear passes through
    d_act = np.empty_like(g)
    for head, sl in Mlp.head_slices(mlp):
        if head.kind == "softmax":
            s = cache.outputs[:, sl]
            d_act[:, sl] = s * (g[:, sl] - np.sum(g[:, sl] * s, axis=1, keepdims=True))
        else:
            d_act[:, sl] = g[:, sl]
    grads: list[np.ndarray] = [np.empty(0)] * (2 * len(mlp.layers))
    for l in range(len(mlp.layers) - 1, -1, -1):
        layer = mlp.layers[l]
        if layer.activation == "tanh":
            d_pre = d_act * (1.0 - np.tanh(cache.preacts[l]) ** 2)
        else:
            d_pre = d_act
        grads[2 * l] = d_pre.T @ cache.inputs[l]
        grads[2 * l + 1] = d_pre.sum(axis=0)
        d_act = d_pre @ layer.weights
    return grads, (d_act[0] if cache.squeezed else d_act)


def parameters(mlp: Mlp) -> list[np.ndarray]:
    """Flat parameter list [W0, b0, W1, b1, ...]."""
    out = []
    for layer in mlp.layers:
        out.append(layer.weights)
        out.append(layer.biases)
    return out


def set_parameters(mlp: Mlp, arrays: list[np.ndarray]) -> None:
    for layer, (w, b) in zip(mlp.layers, zip(arrays[0::2], arrays[1::2])):
        layer.weights = w
        layer.biases = b


@dataclass
class RmspropState:
    learning_rate: float
    rho: float
    epsilon: float
    accumulators: list[np.ndarray]


def rmsprop_init(params: list[np.ndarray], learning_rate: float = 0.001,
                 rho: float = 0.9, epsilon: float = 1e-8) -> RmspropState:
    return RmspropState(learning_rate, rho, epsilon, [np.zeros_like(p) for p in params])


def rmsprop_step(params: list[np.ndarray], grads: list[np.ndarray],
                 state: RmspropState) -> tuple[list[np.ndarray], RmspropState]:
    """One update: acc <- rho*acc + (1-rho)*g^2; p <- p - lr*g/sqrt(acc+eps)."""
    new_params, new_acc = [], []
    for i, (p, g, acc) in enumerate(zip(params, grads, state.accumulators)):
        if p.shape != g.shape:
            raise StaleCacheError(f"parameter block {i}: shape {p.shape} vs gradient {g.shape}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient in parameter block {i}")
        acc_next = state.rho * acc + (1.0 - state.rho) * g * g
        new_params.append(p - state.learning_rate * g / np.sqrt(acc_next + state.epsilon))
        new_acc.append(acc_next)
    return new_params, RmspropState(state.learning_rate, state.rho, state.epsilon, new_acc)


def mlp_to_dict(mlp: Mlp) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layers": [
            {"weights": layer.weights.tolist(), "biases": layer.biases.tolist(),
             "activation": layer.activation}
            for layer in mlp.layers
        ],
        "heads": [{"kind": h.kind, "width": h.width} for h in mlp.heads],
    }


def mlp_from_dict(doc: dict) -> Mlp:
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"not an MLP checkpoint: {doc.get('format')!r}")
    layers = [
        DenseLayer(np.asarray(entry["weights"], dtype=float),
                   np.asarray(entry["biases"], dtype=float),
                   entry["activation"])
        for entry in doc["layers"]
    ]
    heads = tuple(Head(h["kind"], int(h["width"])) for h in doc["heads"])
    return Mlp(layers, heads)
