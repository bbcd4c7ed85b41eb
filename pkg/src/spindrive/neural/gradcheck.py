"""Central finite-difference verification of the hand-written gradients."""
from __future__ import annotations

import numpy as np

from .fcnn import FcnnParams, fcnn_backward, fcnn_forward, init_fcnn
from .lstm import LstmParams, init_lstm, lstm_backward, lstm_forward
from .optim import pack, unpack


def _loss_and_grad(params, x, targets):
    if isinstance(params, LstmParams):
        y, cache = lstm_forward(params, x)
        dy = 2.0 * (y - targets) / targets.size
        grads = lstm_backward(params, cache, dy)
    else:
        y, cache = fcnn_forward(params, x)
        dy = 2.0 * (y - targets) / targets.size
        grads = fcnn_backward(params, cache, dy)
    return float(np.mean((y - targets) ** 2)), grads


def _loss_only(params, x, targets):
    if isinstance(params, LstmParams):
        y, _ = lstm_forward(params, x, need_cache=False)
    else:
        y, _ = fcnn_forward(params, x, need_cache=False)
    return float(np.mean((y - targets) ** 2))


def tensor_errors(params, x, targets, step: float = 1e-6) -> list[float]:
    """Per-tensor relative deviation between analytic and numeric gradients.

    The numeric side perturbs every entry of a tensor one at a time
    (central differences), so keep the nets tiny.
    """
    _, grads = _loss_and_grad(params, x, targets)
    tensors = params.tensors()
    grad_tensors = grads.tensors()
    vec = pack(tensors)
    errors = []
    pos = 0
    for tensor, analytic in zip(tensors, grad_tensors):
        numeric = np.empty(tensor.size)
        for k in range(tensor.size):
            idx = pos + k
            saved = vec[idx]
            vec[idx] = saved + step
            lp = _loss_only(params.from_tensors(unpack(vec, tensors)), x, targets)
            vec[idx] = saved - step
            lm = _loss_only(params.from_tensors(unpack(vec, tensors)), x, targets)
            vec[idx] = saved
            numeric[k] = (lp - lm) / (2.0 * step)
        pos += tensor.size
        num = np.linalg.norm(numeric - analytic.ravel())
        den = np.linalg.norm(numeric) + np.linalg.norm(analytic) + 1e-12
        errors.append(num / den)
    return errors


def check_lstm(seed: int, hidden_sizes=(5, 4), n_inputs=3, n_outputs=2,
               batch=2, steps=4) -> float:
    rng = np.random.default_rng(seed)
    params = init_lstm(n_inputs, n_outputs, list(hidden_sizes), rng)
    x = rng.normal(size=(batch, steps, n_inputs))
    targets = rng.normal(size=(batch, steps, n_outputs))
    return max(tensor_errors(params, x, targets))


def check_fcnn(seed: int, hidden_sizes=(7, 5), n_inputs=4, n_outputs=3,
               batch=3) -> float:
    rng = np.random.default_rng(seed)
    params = init_fcnn(n_inputs, n_outputs, list(hidden_sizes), rng)
    x = rng.normal(size=(batch, n_inputs))
    targets = rng.normal(size=(batch, n_outputs))
    return max(tensor_errors(params, x, targets))
