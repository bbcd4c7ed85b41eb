"""Estimator facade over the surrogate networks.

fit/predict wrappers in the scikit-learn style (get_params/set_params
work, attributes learned from data get a trailing underscore).  X rows are
[D(t_0), ..., D(t_{n-1}), Sx(0), Sy(0), Sz(0)]; y is the stacked frame
tensor (n_samples, n_steps, n_observables).  The rest of the toolkit calls
the functional layer directly; these classes exist for interactive use and
for composing with scikit-learn tooling.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from ..errors import ConfigError
from .fcnn import init_fcnn
from .lstm import init_lstm
from .training import (
    TrainConfig,
    predict_fcnn_full,
    predict_lstm,
    rollout_step_wise,
    train_full_evolution,
    train_step_wise,
)


def _split_x(x):
    x = check_array(x, dtype=np.float64)
    if x.shape[1] < 4:
        raise ConfigError("X needs at least one drive value plus 3 initial locals")
    return x[:, :-3], x[:, -3:]


class _SurrogateBase(BaseEstimator):
    def __init__(self, hidden_sizes, epochs, batch_size, learning_rate, seed, dt):
        self.hidden_sizes = hidden_sizes
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.dt = dt

    def _cfg(self, n_samples) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=min(self.batch_size, n_samples),
            learning_rate=self.learning_rate,
            seed=self.seed,
        )

    def _check_y(self, drives, y):
        y = np.asarray(y, dtype=np.float64)
        if y.ndim != 3 or y.shape[0] != drives.shape[0] or y.shape[1] != drives.shape[1]:
            raise ConfigError(
                f"y shape {y.shape} does not match {drives.shape[0]} samples "
                f"x {drives.shape[1]} steps"
            )
        return y

    def _require_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")


class LstmSurrogate(_SurrogateBase):
    """Full-evolution recurrent surrogate; prediction length is free."""

    def __init__(self, hidden_sizes=(128, 128), epochs=40, batch_size=1000,
                 learning_rate=1e-3, seed=0, dt=0.125):
        super().__init__(hidden_sizes, epochs, batch_size, learning_rate, seed, dt)

    def fit(self, X, y):
        drives, s0 = _split_x(X)
        y = self._check_y(drives, y)
        times = self.dt * np.arange(drives.shape[1])
        params = init_lstm(5, y.shape[2], list(self.hidden_sizes),
                           np.random.default_rng(self.seed))
        result = train_full_evolution(params, drives, times, s0, y,
                                      self._cfg(drives.shape[0]))
        self.params_ = result.params
        self.train_loss_ = result.train_loss
        self.n_steps_ = drives.shape[1]
        self.n_obs_ = y.shape[2]
        return self

    def predict(self, X):
        self._require_fitted()
        drives, s0 = _split_x(X)
        times = self.dt * np.arange(drives.shape[1])
        return predict_lstm(self.params_, drives, times, s0)


class FcnnSurrogate(_SurrogateBase):
    """Full-evolution fully connected surrogate; fixed-length prediction."""

    def __init__(self, hidden_sizes=(256, 256, 256, 256), epochs=40, batch_size=1000,
                 learning_rate=1e-3, seed=0, dt=0.125):
        super().__init__(hidden_sizes, epochs, batch_size, learning_rate, seed, dt)

    def fit(self, X, y):
        drives, s0 = _split_x(X)
        y = self._check_y(drives, y)
        times = self.dt * np.arange(drives.shape[1])
        params = init_fcnn(drives.shape[1] + 3, y.shape[1] * y.shape[2],
                           list(self.hidden_sizes), np.random.default_rng(self.seed))
        result = train_full_evolution(params, drives, times, s0, y,
                                      self._cfg(drives.shape[0]))
        self.params_ = result.params
        self.train_loss_ = result.train_loss
        self.n_steps_ = drives.shape[1]
        self.n_obs_ = y.shape[2]
        return self

    def predict(self, X):
        self._require_fitted()
        drives, s0 = _split_x(X)
        return predict_fcnn_full(self.params_, drives, s0, self.n_obs_)


class StepwiseSurrogate(_SurrogateBase):
    """One-step map trained with teacher forcing, rolled out closed-loop.

    Prediction rebuilds the initial frame from the initial locals (product
    states: correlators factorize), then feeds its own outputs back.
    """

    def __init__(self, hidden_sizes=(256, 256, 256, 256), epochs=40, batch_size=1000,
                 learning_rate=1e-3, seed=0, dt=0.125):
        super().__init__(hidden_sizes, epochs, batch_size, learning_rate, seed, dt)

    def fit(self, X, y):
        drives, _ = _split_x(X)
        y = self._check_y(drives, y)
        times = self.dt * np.arange(drives.shape[1])
        params = init_fcnn(y.shape[2] + 2, y.shape[2], list(self.hidden_sizes),
                           np.random.default_rng(self.seed))
        result = train_step_wise(params, drives, times, y, self._cfg(drives.shape[0]))
        self.params_ = result.params
        self.train_loss_ = result.train_loss
        self.n_steps_ = drives.shape[1]
        self.n_obs_ = y.shape[2]
        return self

    def predict(self, X):
        self._require_fitted()
        from ..observables import product_frame

        drives, s0 = _split_x(X)
        times = self.dt * np.arange(drives.shape[1])
        l_max = (self.n_obs_ - 3) // 9
        p = np.clip((s0[:, 2] + 1.0) / 2.0, 0.0, 1.0)
        frames0 = np.stack([product_frame(pi, l_max) for pi in p])
        return rollout_step_wise(self.params_, frames0, times, drives)
