"""Numpy neural-network primitives with hand-written reverse-mode gradients.

Every forward op works on a leading batch axis and returns ``(out, cache)``;
the matching ``*_backward`` takes the upstream gradient and the cache.
All arithmetic is float64.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


# -- lookup -------------------------------------------------------------------

def embedding_lookup(ids: np.ndarray, E: np.ndarray) -> np.ndarray:
    """``ids`` (B, T) -> (B, T, d). Row 0 of ``E`` is the zero PAD vector."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= E.shape[0]):
        raise IndexError(f"embedding index out of range [0, {E.shape[0]})")
    return E[ids]


def embedding_backward(dX: np.ndarray, ids: np.ndarray, vocab_size: int) -> np.ndarray:
    dE = np.zeros((vocab_size, dX.shape[-1]))
    np.add.at(dE, np.asarray(ids).reshape(-1), dX.reshape(-1, dX.shape[-1]))
    dE[0] = 0.0  # PAD never moves
    return dE


# -- convolution ----------------------------------------------------------------

def conv1d(X: np.ndarray, W: np.ndarray, b: np.ndarray):
    """Valid stride-1 convolution with ReLU.

    ``X`` (B, T, d); ``W`` (N, k*d) holds one flattened filter per row, in
    the order of the concatenated window ``[x_t; ...; x_{t+k-1}]``.
    Returns ``H`` (B, T-k+1, N).
    """
    B, T, d = X.shape
    k = W.shape[1] // d
    if k * d != W.shape[1]:
        raise ValueError(f"filter width {W.shape[1]} is not a multiple of d={d}")
    if T < k:
        raise ValueError(f"sequence length {T} shorter than filter width {k}")
    # (B, T-k+1, d, k) -> (B, T-k+1, k, d) -> flatten window
    win = sliding_window_view(X, k, axis=1).transpose(0, 1, 3, 2).reshape(B * (T - k + 1), k * d)
    pre = (win @ W.T + b).reshape(B, T - k + 1, -1)
    return np.maximum(pre, 0.0), (win, pre, W, X.shape)


def conv1d_backward(dH: np.ndarray, cache, need_dX: bool = True):
    """Returns ``(dX, dW, db)``; ``dX`` is None when ``need_dX`` is false."""
    win, pre, W, xshape = cache
    B, T, d = xshape
    k = W.shape[1] // d
    dpre = (dH * (pre > 0)).reshape(win.shape[0], -1)
    dW = dpre.T @ win
    db = dpre.sum(axis=0)
    if not need_dX:
        return None, dW, db
    dwin = (dpre @ W).reshape(B, T - k + 1, k, d)
    dX = np.zeros(xshape)
    for off in range(k):
        dX[:, off:off + T - k + 1, :] += dwin[:, :, off, :]
    return dX, dW, db


# -- pooling ----------------------------------------------------------------------

def pooled_length(m: int, p: int) -> int:
    return -(-m // p)


def maxpool_windowed(H: np.ndarray, p: int):
    """Max over non-overlapping windows of ``p`` along axis 1.

    A trailing short window still yields its max, so the output length is
    ``ceil(m / p)``. Accepts a 1-D column or a (B, m, N) batch.
    """
    if p < 1:
        raise ValueError("pool size must be >= 1")
    squeeze = H.ndim == 1
    if squeeze:
        H = H[None, :, None]
    B, m, N = H.shape
    P = pooled_length(m, p)
    if P * p == m:
        windows = H.reshape(B, P, p, N)
    else:
        padded = np.full((B, P * p, N), -np.inf)
        padded[:, :m] = H
        windows = padded.reshape(B, P, p, N)
    arg = windows.argmax(axis=2)                       # first max on ties
    out = np.take_along_axis(windows, arg[:, :, None, :], axis=2)[:, :, 0, :]
    if squeeze:
        return out[0, :, 0], (arg, H.shape, p, True)
    return out, (arg, H.shape, p, False)


def maxpool_backward(dout: np.ndarray, cache) -> np.ndarray:
    arg, shape, p, squeeze = cache
    if squeeze:
        dout = dout[None, :, None]
    B, m, N = shape
    P = arg.shape[1]
    dwin = np.zeros((B, P, p, N))
    np.put_along_axis(dwin, arg[:, :, None, :], dout[:, :, None, :], axis=2)
    dH = dwin.reshape(B, P * p, N)[:, :m]
    return dH[0, :, 0] if squeeze else dH


# -- dense ------------------------------------------------------------------------

def dense_forward(x: np.ndarray, V: np.ndarray, b: np.ndarray, activation: str = "relu"):
    """``activation(x V^T + b)`` for ``x`` of shape (B, in) or (in,)."""
    if x.shape[-1] != V.shape[1]:
        raise ValueError(f"dense input has {x.shape[-1]} features, layer expects {V.shape[1]}")
    pre = x @ V.T + b
    if activation == "relu":
        out = np.maximum(pre, 0.0)
    elif activation == "identity":
        out = pre
    else:
        raise ValueError(f"unknown activation {activation!r}")
    return out, (x, pre, V, activation)


def dense_backward(dout: np.ndarray, cache):
    x, pre, V, activation = cache
    dpre = dout * (pre > 0) if activation == "relu" else dout
    if x.ndim == 1:
        return dpre @ V, np.outer(dpre, x), dpre
    return dpre @ V, dpre.T @ x, dpre.sum(axis=0)


# -- output nonlinearities ------------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def log_sigmoid(x):
    """``log(sigmoid(x))`` without overflow or log(0)."""
    x = np.asarray(x, dtype=np.float64)
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


def dropout(x: np.ndarray, rate: float, train: bool, rng=None):
    """Inverted dropout; returns ``(y, mask)`` with ``mask`` already scaled."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not train or rate == 0.0:
        return x, None
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dout: np.ndarray, mask) -> np.ndarray:
    return dout if mask is None else dout * mask


# -- optimizer ---------------------------------------------------------------------

@dataclass
class Adadelta:
    """Adadelta with a multiplicative step scale.

    ``lr_scale`` multiplies the applied update only; the squared-update
    accumulator tracks the unscaled step.
    """

    rho: float = 0.95
    eps: float = 1e-6
    lr_scale: float = 1.0
    sq_grad: dict = field(default_factory=dict)
    sq_delta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    def step(self, params: dict, grads: dict) -> None:
        """Update ``params`` in place for every name present in ``grads``."""
        rho, eps = self.rho, self.eps
        for name, g in grads.items():
            p = params[name]
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name}")
            eg = self.sq_grad.get(name)
            if eg is None:
                eg = self.sq_grad[name] = np.zeros_like(p)
                self.sq_delta[name] = np.zeros_like(p)
            ed = self.sq_delta[name]
            eg *= rho
            eg += (1 - rho) * g * g
            delta = -np.sqrt(ed + eps) / np.sqrt(eg + eps) * g
            ed *= rho
            ed += (1 - rho) * delta * delta
            p += self.lr_scale * delta


# -- checkpoints ---------------------------------------------------------------------

MAGIC = b"CGCKPT1\n"


class CheckpointError(ValueError):
    pass


def digest(obj) -> str:
    """Stable short hash of a JSON-serializable object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path, tensors: dict, meta: dict) -> None:
    """Magic line, little-endian u64 manifest length, JSON manifest, raw float64 data."""
    entries, offset = [], 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "dtype": "float64",
                        "offset": offset, "nbytes": arr.nbytes})
        offset += arr.nbytes
    manifest = {"byte_order": "little", "tensors": entries, "meta": meta}
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in sorted(tensors):
            fh.write(np.ascontiguousarray(tensors[name], dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        (size,) = struct.unpack("<Q", fh.read(8))
        manifest = json.loads(fh.read(size).decode("utf-8"))
        data = fh.read()
    if manifest.get("byte_order") != "little":
        raise CheckpointError(f"{path}: unsupported byte order")
    tensors = {}
    for e in manifest["tensors"]:
        chunk = data[e["offset"]:e["offset"] + e["nbytes"]]
        if len(chunk) != e["nbytes"]:
            raise CheckpointError(f"{path}: truncated tensor {e['name']}")
        tensors[e["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(e["shape"]).astype(np.float64)
    return tensors, manifest["meta"]
