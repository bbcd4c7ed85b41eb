"""Training strategies and prediction front ends for the surrogate nets.

Full-evolution training fits the map (drive, initial locals) -> whole
observable trajectory; the LSTM consumes per-step features [D(t_k), t_k,
S(0)], the fully connected net the entire drive at once.  Step-wise
training fits a one-step map [S(t_k), t_k, D(t_k)] -> S(t_{k+1}) on true
frames (teacher forcing) and is rolled out closed-loop at prediction time,
feeding predictions back.

All losses are mean squared error over every step and observable.  Runs
are deterministic for a given seed: the shuffle order of epoch e is a pure
function of (seed, e), so a resumed run continues exactly where the
interrupted one would have gone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, TrainingDivergedError
from ..validation import check_positive
from .fcnn import FcnnParams, fcnn_backward, fcnn_forward
from .lstm import LstmParams, lstm_backward, lstm_forward
from .optim import Adam, pack, unpack


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 1000
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    #: gradient accumulation chunk; bounds peak activation memory only
    microbatch_size: int = 256

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1 or self.microbatch_size < 1:
            raise ConfigError("batch sizes must be >= 1")
        check_positive(self.learning_rate, "learning_rate")
        check_positive(self.adam_epsilon, "adam_epsilon")
        if not 0.0 <= self.adam_beta1 < 1.0 or not 0.0 <= self.adam_beta2 < 1.0:
            raise ConfigError("adam betas must lie in [0, 1)")


@dataclass
class TrainResult:
    params: LstmParams | FcnnParams
    train_loss: np.ndarray
    val_loss: np.ndarray | None
    optimizer: Adam
    epochs_done: int


def lstm_inputs(drives: np.ndarray, times: np.ndarray, s0: np.ndarray) -> np.ndarray:
    """Per-step features [D(t_k), t_k, S(0)]; shapes (B,T), (T,), (B,3) -> (B,T,5)."""
    b, t = drives.shape
    x = np.empty((b, t, 5))
    x[:, :, 0] = drives
    x[:, :, 1] = times[None, :]
    x[:, :, 2:] = s0[:, None, :]
    return x


def fcnn_full_inputs(drives: np.ndarray, s0: np.ndarray) -> np.ndarray:
    """Whole drive plus initial locals; shapes (B,T), (B,3) -> (B,T+3)."""
    return np.concatenate([drives, s0], axis=1)


def step_pairs(frames: np.ndarray, times: np.ndarray, drives: np.ndarray):
    """One-step supervised pairs from true trajectories.

    frames (B,T,O), times (T,), drives (B,T) -> inputs (B*(T-1), O+2) and
    targets (B*(T-1), O).
    """
    b, t, n_obs = frames.shape
    inputs = np.empty((b, t - 1, n_obs + 2))
    inputs[:, :, :n_obs] = frames[:, :-1, :]
    inputs[:, :, n_obs] = times[None, :-1]
    inputs[:, :, n_obs + 1] = drives[:, :-1]
    targets = frames[:, 1:, :]
    return inputs.reshape(-1, n_obs + 2), targets.reshape(-1, n_obs)


def _forward(params, x, need_cache):
    if isinstance(params, LstmParams):
        return lstm_forward(params, x, need_cache)
    return fcnn_forward(params, x, need_cache)


def _backward(params, cache, dy):
    if isinstance(params, LstmParams):
        return lstm_backward(params, cache, dy)
    return fcnn_backward(params, cache, dy)


def evaluate_loss(params, inputs, targets, chunk: int = 256) -> float:
    """MSE without caching activations, in memory-bounded chunks."""
    total = 0.0
    n = inputs.shape[0]
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        y, _ = _forward(params, inputs[lo:hi], need_cache=False)
        total += float(np.sum((y - targets[lo:hi]) ** 2))
    return total / targets.size


def train_mse(
    params,
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    val_inputs: np.ndarray | None = None,
    val_targets: np.ndarray | None = None,
    optimizer: Adam | None = None,
    start_epoch: int = 0,
    epoch_callback=None,
) -> TrainResult:
    """Mini-batch Adam on MSE; the core loop behind both strategies.

    Gradients within a batch are accumulated over microbatches (pure
    memory measure, results independent of the chunking up to float
    rounding).  Non-finite loss aborts with the offending epoch.
    """
    n = inputs.shape[0]
    if cfg.batch_size > n:
        raise ConfigError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    like = params.tensors()
    flat = pack(like)
    adam = optimizer if optimizer is not None else Adam(
        cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon
    )
    train_hist = []
    val_hist = [] if val_inputs is not None else None
    for epoch in range(start_epoch, cfg.epochs):
        order = np.random.default_rng(
            np.random.SeedSequence(cfg.seed, spawn_key=(epoch,))
        ).permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n - cfg.batch_size + 1, cfg.batch_size):
            batch = order[lo: lo + cfg.batch_size]
            grad = np.zeros_like(flat)
            loss = 0.0
            for mlo in range(0, batch.size, cfg.microbatch_size):
                micro = batch[mlo: mlo + cfg.microbatch_size]
                y, cache = _forward(params, inputs[micro], need_cache=True)
                diff = y - targets[micro]
                w = micro.size / batch.size
                loss += w * float(np.mean(diff**2))
                dy = (2.0 / diff.size) * diff
                grad += w * pack(_backward(params, cache, dy).tensors())
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise TrainingDivergedError(epoch)
            flat = adam.step(flat, grad)
            params = params.from_tensors(unpack(flat, like))
            epoch_loss += loss * batch.size
        train_hist.append(epoch_loss / (n - n % cfg.batch_size))
        if val_inputs is not None:
            val_hist.append(evaluate_loss(params, val_inputs, val_targets))
        if epoch_callback is not None:
            epoch_callback(epoch, train_hist[-1], val_hist[-1] if val_hist else None)
    return TrainResult(
        params=params,
        train_loss=np.array(train_hist),
        val_loss=None if val_hist is None else np.array(val_hist),
        optimizer=adam,
        epochs_done=cfg.epochs,
    )


def train_full_evolution(
    params,
    drives: np.ndarray,
    times: np.ndarray,
    s0: np.ndarray,
    frames: np.ndarray,
    cfg: TrainConfig,
    val=None,
    optimizer: Adam | None = None,
    start_epoch: int = 0,
    epoch_callback=None,
) -> TrainResult:
    """Whole-trajectory regression; params picks the architecture."""
    if isinstance(params, LstmParams):
        inputs = lstm_inputs(drives, times, s0)
        targets = frames
        val_in = None if val is None else lstm_inputs(val[0], times, val[1])
        val_tg = None if val is None else val[2]
    else:
        inputs = fcnn_full_inputs(drives, s0)
        targets = frames.reshape(frames.shape[0], -1)
        val_in = None if val is None else fcnn_full_inputs(val[0], val[1])
        val_tg = None if val is None else val[2].reshape(val[2].shape[0], -1)
    return train_mse(
        params, inputs, targets, cfg,
        val_inputs=val_in, val_targets=val_tg,
        optimizer=optimizer, start_epoch=start_epoch, epoch_callback=epoch_callback,
    )


def train_step_wise(
    params: FcnnParams,
    drives: np.ndarray,
    times: np.ndarray,
    frames: np.ndarray,
    cfg: TrainConfig,
    val=None,
    optimizer: Adam | None = None,
    start_epoch: int = 0,
    epoch_callback=None,
) -> TrainResult:
    """One-step map on true frames; inputs never contain model predictions."""
    if not isinstance(params, FcnnParams):
        raise ConfigError("step-wise training is defined for the fully connected net")
    inputs, targets = step_pairs(frames, times, drives)
    val_in = val_tg = None
    if val is not None:
        val_in, val_tg = step_pairs(val[1], times, val[0])
    return train_mse(
        params, inputs, targets, cfg,
        val_inputs=val_in, val_targets=val_tg,
        optimizer=optimizer, start_epoch=start_epoch, epoch_callback=epoch_callback,
    )


def predict_lstm(params: LstmParams, drives: np.ndarray, times: np.ndarray,
                 s0: np.ndarray, chunk: int = 250) -> np.ndarray:
    """Frames for a batch of drives; shapes (B,T), (T,), (B,3) -> (B,T,O).

    T may exceed the training length (the recurrence is length-agnostic).
    """
    x = lstm_inputs(drives, times, s0)
    outs = []
    for lo in range(0, x.shape[0], chunk):
        y, _ = lstm_forward(params, x[lo: lo + chunk], need_cache=False)
        outs.append(y)
    return np.concatenate(outs, axis=0)


def predict_fcnn_full(params: FcnnParams, drives: np.ndarray, s0: np.ndarray,
                      n_obs: int) -> np.ndarray:
    """(B,T), (B,3) -> (B,T,O); T is fixed by the trained input width."""
    t = params.n_inputs - 3
    if drives.shape[1] != t:
        raise ConfigError(
            f"net was trained on {t} steps, got {drives.shape[1]}; "
            "full-evolution prediction cannot change length"
        )
    y, _ = fcnn_forward(params, fcnn_full_inputs(drives, s0), need_cache=False)
    return y.reshape(drives.shape[0], t, n_obs)


def rollout_step_wise(params: FcnnParams, s0_frames: np.ndarray,
                      times: np.ndarray, drives: np.ndarray) -> np.ndarray:
    """Closed-loop rollout feeding predictions back; (B,O), (T,), (B,T) -> (B,T,O)."""
    b, t = drives.shape
    n_obs = s0_frames.shape[1]
    if params.n_inputs != n_obs + 2:
        raise ConfigError(
            f"net expects {params.n_inputs} inputs, frames have {n_obs} observables"
        )
    out = np.empty((b, t, n_obs))
    out[:, 0, :] = s0_frames
    x = np.empty((b, n_obs + 2))
    for k in range(t - 1):
        x[:, :n_obs] = out[:, k, :]
        x[:, n_obs] = times[k]
        x[:, n_obs + 1] = drives[:, k]
        y, _ = fcnn_forward(params, x, need_cache=False)
        out[:, k + 1, :] = y
    return out
