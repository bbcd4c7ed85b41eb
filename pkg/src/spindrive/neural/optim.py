"""Flat-vector Adam and parameter packing.

Both network types expose their tensors as an ordered list; packing them
into one flat vector keeps the optimizer a dozen lines and makes
checkpointing and finite-difference checks uniform.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def pack(arrays: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([a.ravel() for a in arrays])


def unpack(vector: np.ndarray, like: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    pos = 0
    for a in like:
        out.append(vector[pos: pos + a.size].reshape(a.shape).copy())
        pos += a.size
    if pos != vector.size:
        raise ValueError(f"vector has {vector.size} entries, layout needs {pos}")
    return out


@dataclass
class Adam:
    """Bias-corrected Adam over one flat parameter vector."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.step_count += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.step_count)
        v_hat = self.v / (1.0 - self.beta2 ** self.step_count)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
