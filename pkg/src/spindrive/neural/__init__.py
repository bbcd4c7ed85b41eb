"""Trajectory surrogates: hand-written LSTM and FCNN with Adam training."""
from .checkpoint import load_checkpoint, save_checkpoint
from .estimators import FcnnSurrogate, LstmSurrogate, StepwiseSurrogate
from .fcnn import FcnnParams, fcnn_forward, init_fcnn
from .lstm import LstmParams, init_lstm, lstm_forward
from .optim import Adam, pack, unpack
from .training import (
    TrainConfig,
    TrainResult,
    fcnn_full_inputs,
    lstm_inputs,
    predict_fcnn_full,
    predict_lstm,
    rollout_step_wise,
    step_pairs,
    train_full_evolution,
    train_mse,
    train_step_wise,
)

__all__ = [
    "Adam",
    "FcnnParams",
    "FcnnSurrogate",
    "LstmParams",
    "LstmSurrogate",
    "StepwiseSurrogate",
    "TrainConfig",
    "TrainResult",
    "fcnn_forward",
    "fcnn_full_inputs",
    "init_fcnn",
    "init_lstm",
    "load_checkpoint",
    "lstm_forward",
    "lstm_inputs",
    "pack",
    "predict_fcnn_full",
    "predict_lstm",
    "rollout_step_wise",
    "save_checkpoint",
    "step_pairs",
    "train_full_evolution",
    "train_mse",
    "train_step_wise",
    "unpack",
]
