"""CNN tweet classifier with an optional graph/label context branch.

Supervised path:  ids -> E -> conv banks -> windowed max-pool -> m
                  -> z1 = relu(V1 m) -> z2 = relu(V2 z1) -> softmax(Wk z2)
Semi path adds:   z3 = relu(V3 z1) -> z4 = relu(V4 z3), softmax(Wk [z2; z4]),
                  and the context predictor sigma(gamma * Wctx[j] . z3(i)).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import nn

SUPERVISED, SEMI = "supervised", "semi"
PROB_FLOOR = 1e-12


@dataclass
class ModelConfig:
    max_len: int = 30
    filters: list = field(default_factory=lambda: [(2, 100, 2), (3, 150, 3), (4, 200, 4)])
    hidden: tuple = (100, 100, 100, 100)       # sizes of z1, z2, z3, z4
    K: int = 2
    lam: float = 1.0
    dropout: float = 0.02
    mode: str = SEMI
    fine_tune: bool = False

    def __post_init__(self):
        self.filters = [tuple(int(x) for x in f) for f in self.filters]
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.mode not in (SUPERVISED, SEMI):
            raise ValueError(f"mode must be {SUPERVISED!r} or {SEMI!r}")
        if not self.filters:
            raise ValueError("need at least one filter bank")
        if any(min(f) < 1 for f in self.filters) or len(self.hidden) != 4 or min(self.hidden) < 1:
            raise ValueError("filter specs and hidden sizes must be >= 1")
        if self.max_len < max(f[0] for f in self.filters):
            raise ValueError("max_len must be at least the widest filter")
        if self.K < 2:
            raise ValueError("need K >= 2 classes")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def pooled_dim(self) -> int:
        return sum(n * nn.pooled_length(self.max_len - k + 1, p) for k, n, p in self.filters)

    @property
    def class_input_dim(self) -> int:
        h1, h2, h3, h4 = self.hidden
        return h2 + h4 if self.mode == SEMI else h2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filters"] = [list(f) for f in self.filters]
        d["hidden"] = list(self.hidden)
        return d


def _glorot(rng, shape, fan_in, fan_out):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(config: ModelConfig, d: int, n_nodes: int = 0, seed: int = 0) -> dict:
    """Glorot-uniform weights, zero biases. ``n_nodes`` sizes the context matrix."""
    rng = np.random.default_rng(seed)
    h1, h2, h3, h4 = config.hidden
    P: dict = {}
    for b, (k, n, _) in enumerate(config.filters):
        P[f"conv{b}.W"] = _glorot(rng, (n, k * d), k * d, n)
        P[f"conv{b}.b"] = np.zeros(n)
    P["V1"] = _glorot(rng, (h1, config.pooled_dim), config.pooled_dim, h1)
    P["b1"] = np.zeros(h1)
    P["V2"] = _glorot(rng, (h2, h1), h1, h2)
    P["b2"] = np.zeros(h2)
    if config.mode == SEMI:
        P["V3"] = _glorot(rng, (h3, h1), h1, h3)
        P["b3"] = np.zeros(h3)
        P["V4"] = _glorot(rng, (h4, h3), h3, h4)
        P["b4"] = np.zeros(h4)
        P["Wctx"] = _glorot(rng, (n_nodes, h3), h3, 1) if n_nodes else np.zeros((0, h3))
    P["Wk"] = _glorot(rng, (config.K, config.class_input_dim), config.class_input_dim, config.K)
    P["bk"] = np.zeros(config.K)
    return P


@dataclass
class ForwardTrace:
    ids: np.ndarray
    X: np.ndarray
    m: np.ndarray
    z1: np.ndarray
    z2: Optional[np.ndarray] = None
    z3: Optional[np.ndarray] = None
    z4: Optional[np.ndarray] = None
    logits: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None
    h: list = field(default_factory=list)
    caches: dict = field(default_factory=dict)


def _encode(ids, P, E, config, train, rng, tr_caches):
    """ids -> (X, pooled m, feature maps)."""
    X = nn.embedding_lookup(ids, E)
    B = X.shape[0]
    pooled, maps = [], []
    for b, (k, n, p) in enumerate(config.filters):
        H, conv_cache = nn.conv1d(X, P[f"conv{b}.W"], P[f"conv{b}.b"])
        pool, pool_cache = nn.maxpool_windowed(H, p)
        tr_caches[f"conv{b}"] = conv_cache
        tr_caches[f"pool{b}"] = pool_cache
        maps.append(H)
        # (B, P, N) -> (B, N, P): one pooled feature map per filter
        pooled.append(pool.transpose(0, 2, 1).reshape(B, -1))
    m = np.concatenate(pooled, axis=1)
    return X, m, maps


def forward(ids, P: dict, E: np.ndarray, config: ModelConfig, train: bool = False,
            rng=None, upto: str = "probs") -> ForwardTrace:
    """Run the network on a (B, max_len) id batch.

    ``upto="z3"`` stops after the context representation (semi mode only),
    which is all the context loss needs. Dropout is active only when
    ``train`` is true.
    """
    ids = np.atleast_2d(np.asarray(ids))
    if ids.shape[1] != config.max_len:
        raise ValueError(f"ids must be padded to max_len={config.max_len}, got {ids.shape[1]}")
    caches: dict = {}
    X, m, maps = _encode(ids, P, E, config, train, rng, caches)
    rate = config.dropout
    m_d, caches["drop_m"] = nn.dropout(m, rate, train, rng)
    z1, caches["V1"] = nn.dense_forward(m_d, P["V1"], P["b1"])
    z1_d, caches["drop_z1"] = nn.dropout(z1, rate, train, rng)
    tr = ForwardTrace(ids=ids, X=X, m=m, z1=z1, h=maps, caches=caches)
    if config.mode == SEMI:
        tr.z3, caches["V3"] = nn.dense_forward(z1_d, P["V3"], P["b3"])
        if upto == "z3":
            return tr
    elif upto == "z3":
        raise ValueError("supervised model has no context branch")
    tr.z2, caches["V2"] = nn.dense_forward(z1_d, P["V2"], P["b2"])
    if config.mode == SEMI:
        z3_d, caches["drop_z3"] = nn.dropout(tr.z3, rate, train, rng)
        tr.z4, caches["V4"] = nn.dense_forward(z3_d, P["V4"], P["b4"])
        feat = np.concatenate([tr.z2, tr.z4], axis=1)
    else:
        feat = tr.z2
    tr.logits, caches["Wk"] = nn.dense_forward(feat, P["Wk"], P["bk"], "identity")
    tr.probs = nn.softmax(tr.logits)
    return tr


def _backward(tr: ForwardTrace, P: dict, config: ModelConfig, dlogits=None, dz3=None,
              vocab_size: Optional[int] = None) -> dict:
    """Backpropagate from logits and/or z3 to every parameter used."""
    c = tr.caches
    G: dict = {}
    dz1 = np.zeros_like(tr.z1)
    dz3_total = np.zeros_like(tr.z3) if tr.z3 is not None else None
    if dz3 is not None:
        dz3_total += dz3
    if dlogits is not None:
        dfeat, G["Wk"], G["bk"] = nn.dense_backward(dlogits, c["Wk"])
        h2 = config.hidden[1]
        dz2 = dfeat[:, :h2]
        if config.mode == SEMI:
            dz4 = dfeat[:, h2:]
            dz3_in, G["V4"], G["b4"] = nn.dense_backward(dz4, c["V4"])
            dz3_total += nn.dropout_backward(dz3_in, c["drop_z3"])
        dz1_d, G["V2"], G["b2"] = nn.dense_backward(dz2, c["V2"])
        dz1 += nn.dropout_backward(dz1_d, c["drop_z1"])
    if config.mode == SEMI and (dz3 is not None or dlogits is not None):
        dz1_d, G["V3"], G["b3"] = nn.dense_backward(dz3_total, c["V3"])
        dz1 += nn.dropout_backward(dz1_d, c["drop_z1"])
    dm_d, G["V1"], G["b1"] = nn.dense_backward(dz1, c["V1"])
    dm = nn.dropout_backward(dm_d, c["drop_m"])
    B = dm.shape[0]
    dX = np.zeros_like(tr.X) if config.fine_tune else None
    start = 0
    for b, (k, n, p) in enumerate(config.filters):
        npool = nn.pooled_length(config.max_len - k + 1, p)
        block = dm[:, start:start + n * npool].reshape(B, n, npool).transpose(0, 2, 1)
        start += n * npool
        dH = nn.maxpool_backward(block, c[f"pool{b}"])
        dXb, G[f"conv{b}.W"], G[f"conv{b}.b"] = nn.conv1d_backward(dH, c[f"conv{b}"], need_dX=dX is not None)
        if dX is not None:
            dX += dXb
    if dX is not None:
        G["E"] = nn.embedding_backward(dX, tr.ids, vocab_size)
    return G


def class_loss(probs: np.ndarray, labels) -> float:
    """Mean negative log-probability of the true classes."""
    labels = np.asarray(labels)
    p = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(p, PROB_FLOOR))))


def context_loss(z3: np.ndarray, Wctx: np.ndarray, j, gamma) -> float:
    """Mean of ``-log sigmoid(gamma * Wctx[j] . z3)`` over a batch of samples."""
    z3 = np.atleast_2d(z3)
    score = np.einsum("bh,bh->b", Wctx[np.atleast_1d(j)], z3)
    return float(-np.mean(nn.log_sigmoid(np.atleast_1d(gamma) * score)))


def combined_loss(class_part: float, context_part: float, lam: float) -> float:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return class_part + lam * context_part


def class_loss_and_grads(P, E, config, ids, labels, train=False, rng=None):
    tr = forward(ids, P, E, config, train, rng)
    labels = np.asarray(labels)
    B = len(labels)
    loss = class_loss(tr.probs, labels)
    dlogits = tr.probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B
    return loss, _backward(tr, P, config, dlogits=dlogits, vocab_size=E.shape[0])


def context_loss_and_grads(P, E, config, ids, j, gamma, scale=1.0, train=False, rng=None):
    """Context loss for sample batch ``(ids of i, j, gamma)``; grads scaled by ``scale``."""
    tr = forward(ids, P, E, config, train, rng, upto="z3")
    j = np.asarray(j)
    gamma = np.asarray(gamma, dtype=np.float64)
    B = len(j)
    w = P["Wctx"][j]
    score = np.einsum("bh,bh->b", w, tr.z3)
    loss = float(-np.mean(nn.log_sigmoid(gamma * score)))
    # d/ds -log sigmoid(g s) = -g * sigmoid(-g s)
    ds = -gamma * nn.sigmoid(-gamma * score) * (scale / B)
    dz3 = ds[:, None] * w
    G = _backward(tr, P, config, dz3=dz3, vocab_size=E.shape[0])
    dW = np.zeros_like(P["Wctx"])
    np.add.at(dW, j, ds[:, None] * tr.z3)
    G["Wctx"] = dW
    return loss, G


def combined_loss_and_grads(P, E, config, class_batch, context_batch):
    """``class_loss + lam * context_loss`` with summed gradients (no dropout)."""
    lc, Gc = class_loss_and_grads(P, E, config, *class_batch)
    lx, Gx = context_loss_and_grads(P, E, config, *context_batch, scale=config.lam)
    G = dict(Gc)
    for name, g in Gx.items():
        G[name] = G[name] + g if name in G else g
    return combined_loss(lc, lx, config.lam), G


def predict(ids, P, E, config):
    """Eval-mode argmax (lowest class id on ties) and probabilities; no graph input."""
    tr = forward(ids, P, E, config, train=False)
    return tr.probs.argmax(axis=1), tr.probs
