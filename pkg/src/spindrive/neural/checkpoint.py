"""Checkpoint files: one JSON header plus raw float64 tensors.

Layout: u32 little-endian header length, JSON header, then every
parameter tensor in declaration order, then (when present) the Adam first
and second moment vectors.  The header records architecture, shapes, the
training configuration, loss histories and the fingerprint of the dataset
the run was bound to; nothing in the file depends on wall-clock time, so
equal runs produce equal bytes.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataIntegrityError
from .fcnn import FcnnParams
from .lstm import LstmLayer, LstmParams
from .optim import Adam, pack, unpack

FORMAT_VERSION = 1


def _arch_name(params) -> str:
    return "lstm" if isinstance(params, LstmParams) else "fcnn"


def _empty_like_arch(header) -> list[np.ndarray]:
    """Zero tensors in declaration order for the header's architecture."""
    hidden = header["hidden_sizes"]
    n_in, n_out = header["n_inputs"], header["n_outputs"]
    tensors = []
    if header["arch"] == "lstm":
        prev = n_in
        for h in hidden:
            cat = h + prev
            tensors += [np.zeros((h, cat)) for _ in range(4)]
            tensors += [np.zeros(h) for _ in range(4)]
            prev = h
        tensors += [np.zeros((n_out, prev)), np.zeros(n_out)]
    elif header["arch"] == "fcnn":
        sizes = [n_in] + list(hidden) + [n_out]
        for a, b in zip(sizes[:-1], sizes[1:]):
            tensors += [np.zeros((b, a)), np.zeros(b)]
    else:
        raise ConfigError(f"unknown architecture {header['arch']!r}")
    return tensors


def _params_from_tensors(header, tensors: list[np.ndarray]):
    if header["arch"] == "lstm":
        layers = []
        n_layers = len(header["hidden_sizes"])
        for k in range(n_layers):
            w_f, w_i, w_c, w_o, b_f, b_i, b_c, b_o = tensors[8 * k: 8 * k + 8]
            layers.append(LstmLayer(w_f, w_i, w_c, w_o, b_f, b_i, b_c, b_o))
        return LstmParams(layers=layers, w_out=tensors[-2], b_out=tensors[-1])
    return FcnnParams(weights=tensors[0::2], biases=tensors[1::2])


def _hidden_sizes(params) -> list[int]:
    if isinstance(params, LstmParams):
        return params.layer_sizes
    return [w.shape[0] for w in params.weights[:-1]]


def save_checkpoint(path, params, meta: dict, optimizer: Adam | None = None) -> Path:
    """meta is stored verbatim under 'meta'; keep it JSON-plain."""
    path = Path(path)
    tensors = params.tensors()
    header = {
        "format_version": FORMAT_VERSION,
        "arch": _arch_name(params),
        "n_inputs": params.n_inputs,
        "n_outputs": params.n_outputs,
        "hidden_sizes": _hidden_sizes(params),
        "n_params": int(sum(t.size for t in tensors)),
        "adam_step": 0 if optimizer is None else optimizer.step_count,
        "has_optimizer": optimizer is not None and optimizer.m is not None,
        "adam_rates": None if optimizer is None else [
            optimizer.learning_rate, optimizer.beta1, optimizer.beta2, optimizer.epsilon
        ],
        "meta": meta,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(pack(tensors), dtype="<f8").tobytes())
        if header["has_optimizer"]:
            fh.write(np.ascontiguousarray(optimizer.m, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(optimizer.v, dtype="<f8").tobytes())
    return path


def load_checkpoint(path):
    """Returns (params, header, optimizer-or-None)."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read(4)
        if len(raw) < 4:
            raise DataIntegrityError(f"{path} is not a checkpoint")
        (hlen,) = struct.unpack("<I", raw)
        header = json.loads(fh.read(hlen))
        if header.get("format_version") != FORMAT_VERSION:
            raise DataIntegrityError(
                f"{path}: unsupported checkpoint version {header.get('format_version')}"
            )
        like = _empty_like_arch(header)
        n = sum(t.size for t in like)
        if n != header["n_params"]:
            raise DataIntegrityError(f"{path}: parameter count mismatch")
        vec = np.frombuffer(fh.read(8 * n), dtype="<f8")
        if vec.size != n:
            raise DataIntegrityError(f"{path}: truncated parameter block")
        params = _params_from_tensors(header, unpack(vec.copy(), like))
        optimizer = None
        if header["has_optimizer"]:
            lr, b1, b2, eps = header["adam_rates"]
            m = np.frombuffer(fh.read(8 * n), dtype="<f8")
            v = np.frombuffer(fh.read(8 * n), dtype="<f8")
            if m.size != n or v.size != n:
                raise DataIntegrityError(f"{path}: truncated optimizer block")
            optimizer = Adam(lr, b1, b2, eps, step_count=header["adam_step"],
                             m=m.copy(), v=v.copy())
    return params, header, optimizer
