"""Fully connected network: rectifier hiddens, linear output.

The rectifier derivative at exactly zero is taken as 0 (left derivative);
finite-difference checks avoid sitting on the kink by construction since
pre-activations are generic floats.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass
class FcnnParams:
    weights: list[np.ndarray]  # each (n_out, n_in)
    biases: list[np.ndarray]

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[0]

    def tensors(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def from_tensors(self, tensors: list[np.ndarray]) -> "FcnnParams":
        return FcnnParams(weights=tensors[0::2], biases=tensors[1::2])


def init_fcnn(n_inputs: int, n_outputs: int, hidden_sizes: list[int], rng) -> FcnnParams:
    sizes = [n_inputs] + list(hidden_sizes) + [n_outputs]
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return FcnnParams(weights=weights, biases=biases)


def fcnn_forward(params: FcnnParams, x: np.ndarray, need_cache: bool = True):
    """x has shape (batch, n_inputs); returns (y, cache)."""
    if x.ndim != 2 or x.shape[1] != params.n_inputs:
        raise ConfigError(f"input shape {x.shape} does not match n_inputs={params.n_inputs}")
    cache = [x] if need_cache else None
    a = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        a = z if k == last else np.maximum(z, 0.0)
        if need_cache and k != last:
            cache.append(a)
    return a, cache


def fcnn_backward(params: FcnnParams, cache, dy: np.ndarray) -> FcnnParams:
    """Gradients for a scalar loss; dy is dLoss/dy from the forward call."""
    g_w = [None] * len(params.weights)
    g_b = [None] * len(params.biases)
    delta = dy
    for k in range(len(params.weights) - 1, -1, -1):
        a_prev = cache[k]
        g_w[k] = delta.T @ a_prev
        g_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ params.weights[k]) * (cache[k] > 0.0)
    return FcnnParams(weights=g_w, biases=g_b)
