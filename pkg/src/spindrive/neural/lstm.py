"""Stacked LSTM with a linear head, forward and backward by hand.

Gate equations, per layer, acting on the concatenation [h_{t-1}, x_t]:

    f_t = sig(W_f [h, x] + b_f)         forget
    i_t = sig(W_i [h, x] + b_i)         input
    C~_t = tanh(W_C [h, x] + b_C)       candidate cell
    C_t = f_t * C_{t-1} + i_t * C~_t
    o_t = sig(W_o [h, x] + b_o)         output
    h_t = o_t * tanh(C_t)

Initial h and C are zero.  The head maps the top hidden state linearly to
the observable frame at every step.  The recurrence never looks ahead, so
running on a longer input reproduces the shorter run on the shared prefix
bit for bit; length extrapolation rests on that.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import ConfigError


@dataclass
class LstmLayer:
    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    @property
    def hidden(self) -> int:
        return self.w_f.shape[0]


@dataclass
class LstmParams:
    layers: list[LstmLayer]
    w_out: np.ndarray
    b_out: np.ndarray

    @property
    def layer_sizes(self) -> list[int]:
        return [layer.hidden for layer in self.layers]

    @property
    def n_inputs(self) -> int:
        first = self.layers[0]
        return first.w_f.shape[1] - first.hidden

    @property
    def n_outputs(self) -> int:
        return self.w_out.shape[0]

    def tensors(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out += [layer.w_f, layer.w_i, layer.w_c, layer.w_o,
                    layer.b_f, layer.b_i, layer.b_c, layer.b_o]
        out += [self.w_out, self.b_out]
        return out

    def from_tensors(self, tensors: list[np.ndarray]) -> "LstmParams":
        layers = []
        for k in range(len(self.layers)):
            w_f, w_i, w_c, w_o, b_f, b_i, b_c, b_o = tensors[8 * k: 8 * k + 8]
            layers.append(LstmLayer(w_f, w_i, w_c, w_o, b_f, b_i, b_c, b_o))
        return LstmParams(layers=layers, w_out=tensors[-2], b_out=tensors[-1])


def _glorot(rng, n_out, n_in):
    bound = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-bound, bound, size=(n_out, n_in))


def init_lstm(n_inputs: int, n_outputs: int, hidden_sizes: list[int], rng) -> LstmParams:
    """Glorot-uniform weights, zero biases except forget bias at +1."""
    layers = []
    prev = n_inputs
    for h in hidden_sizes:
        cat = h + prev
        layers.append(
            LstmLayer(
                w_f=_glorot(rng, h, cat),
                w_i=_glorot(rng, h, cat),
                w_c=_glorot(rng, h, cat),
                w_o=_glorot(rng, h, cat),
                b_f=np.ones(h),
                b_i=np.zeros(h),
                b_c=np.zeros(h),
                b_o=np.zeros(h),
            )
        )
        prev = h
    return LstmParams(
        layers=layers,
        w_out=_glorot(rng, n_outputs, prev),
        b_out=np.zeros(n_outputs),
    )


def lstm_forward(params: LstmParams, x: np.ndarray, need_cache: bool = True):
    """x has shape (batch, steps, n_inputs); returns (y, cache).

    y has shape (batch, steps, n_outputs).  cache is None when
    need_cache=False (inference); otherwise it holds per-layer activations
    for backpropagation through time.
    """
    if x.ndim != 3 or x.shape[2] != params.n_inputs:
        raise ConfigError(
            f"input shape {x.shape} does not end in n_inputs={params.n_inputs}"
        )
    batch, steps, _ = x.shape
    cache = [] if need_cache else None
    current = x
    for layer in params.layers:
        hdim = layer.hidden
        h = np.zeros((batch, hdim))
        c = np.zeros((batch, hdim))
        hs = np.empty((batch, steps, hdim))
        if need_cache:
            lc = {
                "cat": np.empty((batch, steps, layer.w_f.shape[1])),
                "f": np.empty((batch, steps, hdim)),
                "i": np.empty((batch, steps, hdim)),
                "g": np.empty((batch, steps, hdim)),
                "o": np.empty((batch, steps, hdim)),
                "c_prev": np.empty((batch, steps, hdim)),
                "tanh_c": np.empty((batch, steps, hdim)),
            }
        for t in range(steps):
            cat = np.concatenate([h, current[:, t, :]], axis=1)
            f = expit(cat @ layer.w_f.T + layer.b_f)
            i = expit(cat @ layer.w_i.T + layer.b_i)
            g = np.tanh(cat @ layer.w_c.T + layer.b_c)
            o = expit(cat @ layer.w_o.T + layer.b_o)
            c_prev = c
            c = f * c_prev + i * g
            tanh_c = np.tanh(c)
            h = o * tanh_c
            hs[:, t, :] = h
            if need_cache:
                lc["cat"][:, t] = cat
                lc["f"][:, t] = f
                lc["i"][:, t] = i
                lc["g"][:, t] = g
                lc["o"][:, t] = o
                lc["c_prev"][:, t] = c_prev
                lc["tanh_c"][:, t] = tanh_c
        if need_cache:
            cache.append(lc)
        current = hs
    y = current @ params.w_out.T + params.b_out
    if need_cache:
        cache.append(current)  # top hidden states, for the head gradient
    return y, cache


def lstm_backward(params: LstmParams, cache, dy: np.ndarray) -> LstmParams:
    """Gradient of a scalar loss with respect to every parameter.

    dy is dLoss/dy with y from the matching lstm_forward call; the return
    value mirrors the parameter structure.
    """
    top_h = cache[-1]
    batch, steps, _ = dy.shape
    g_w_out = np.tensordot(dy, top_h, axes=([0, 1], [0, 1]))
    g_b_out = dy.sum(axis=(0, 1))
    d_hidden = dy @ params.w_out

    g_layers = []
    for li in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[li]
        lc = cache[li]
        hdim = layer.hidden
        g = LstmLayer(
            w_f=np.zeros_like(layer.w_f),
            w_i=np.zeros_like(layer.w_i),
            w_c=np.zeros_like(layer.w_c),
            w_o=np.zeros_like(layer.w_o),
            b_f=np.zeros_like(layer.b_f),
            b_i=np.zeros_like(layer.b_i),
            b_c=np.zeros_like(layer.b_c),
            b_o=np.zeros_like(layer.b_o),
        )
        d_input = np.empty((batch, steps, layer.w_f.shape[1] - hdim))
        dh_carry = np.zeros((batch, hdim))
        dc_carry = np.zeros((batch, hdim))
        for t in range(steps - 1, -1, -1):
            dh = d_hidden[:, t, :] + dh_carry
            f = lc["f"][:, t]
            i = lc["i"][:, t]
            gt = lc["g"][:, t]
            o = lc["o"][:, t]
            tanh_c = lc["tanh_c"][:, t]
            cat = lc["cat"][:, t]
            do = dh * tanh_c
            dc = dc_carry + dh * o * (1.0 - tanh_c * tanh_c)
            df = dc * lc["c_prev"][:, t]
            di = dc * gt
            dg = dc * i
            dzf = df * f * (1.0 - f)
            dzi = di * i * (1.0 - i)
            dzg = dg * (1.0 - gt * gt)
            dzo = do * o * (1.0 - o)
            g.w_f += dzf.T @ cat
            g.w_i += dzi.T @ cat
            g.w_c += dzg.T @ cat
            g.w_o += dzo.T @ cat
            g.b_f += dzf.sum(axis=0)
            g.b_i += dzi.sum(axis=0)
            g.b_c += dzg.sum(axis=0)
            g.b_o += dzo.sum(axis=0)
            dcat = dzf @ layer.w_f + dzi @ layer.w_i + dzg @ layer.w_c + dzo @ layer.w_o
            dh_carry = dcat[:, :hdim]
            d_input[:, t, :] = dcat[:, hdim:]
            dc_carry = dc * f
        g_layers.append(g)
        d_hidden = d_input
    g_layers.reverse()
    return LstmParams(layers=g_layers, w_out=g_w_out, b_out=g_b_out)
