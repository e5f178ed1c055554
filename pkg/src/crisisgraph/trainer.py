"""Supervised and semi-supervised training loops, evaluation and label-budget sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import model as M
from .corpus import DataSplit, subsample_labels
from .embedding import EmbeddingTable, average_matrix, batch_ids
from .graph import DEFAULT_K, build_graph
from .metrics import MetricsReport, report
from .nn import Adadelta
from .sampler import ContextSampler, SamplerConfig

log = logging.getLogger(__name__)


class NumericError(ArithmeticError):
    """A loss became NaN or infinite."""


@dataclass
class TrainConfig:
    max_epochs: int = 200
    patience: int = 25
    batch_size: int = 32
    context_batch_size: int = 32
    # context samples per epoch; None means 10x the number of labeled examples
    context_per_epoch: Optional[int] = None
    lr_class: float = 0.1
    lr_context: float = 0.001
    rho: float = 0.95
    eps: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("max_epochs", "patience", "batch_size", "context_batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.patience > self.max_epochs:
            raise ValueError("patience cannot exceed max_epochs")
        if self.context_per_epoch is not None and self.context_per_epoch < 0:
            raise ValueError("context_per_epoch must be >= 0")


@dataclass
class EpochRecord:
    epoch: int
    class_loss: float
    context_loss: float
    dev_f1: float

    def line(self) -> str:
        return f"{self.epoch}\t{self.class_loss!r}\t{self.context_loss!r}\t{self.dev_f1!r}"


@dataclass
class EarlyStopState:
    best_f1: float = -1.0
    best_epoch: int = 0
    since_best: int = 0
    best_params: Optional[dict] = None
    patience: int = 25

    def update(self, epoch: int, f1: float, params: dict) -> bool:
        """Record an epoch result; returns True while training may continue."""
        if f1 > self.best_f1:  # ties do not reset patience
            self.best_f1, self.best_epoch, self.since_best = f1, epoch, 0
            self.best_params = {k: v.copy() for k, v in params.items()}
        else:
            self.since_best += 1
        return self.since_best < self.patience


@dataclass
class TrainResult:
    params: dict
    log: list = field(default_factory=list)
    best_epoch: int = 0
    best_dev_f1: float = 0.0
    model_config: Optional[M.ModelConfig] = None

    def log_text(self) -> str:
        return "".join(r.line() + "\n" for r in self.log)


def _labeled_arrays(tweets, table, config):
    tweets = [t for t in tweets if t.label is not None]
    return batch_ids(tweets, table, config.max_len), np.array([t.label for t in tweets], dtype=np.int64)


def _check_finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise NumericError(f"{what} is not finite ({value})")
    return value


def evaluate(params: dict, table: EmbeddingTable, config: M.ModelConfig, examples,
             batch_size: int = 256) -> MetricsReport:
    """Weighted P/R/F1 of eval-mode predictions on labeled ``examples``."""
    ids, labels = _labeled_arrays(examples, table, config)
    if len(labels) == 0:
        raise ValueError("evaluate needs at least one labeled example")
    return report(labels, _predict_ids(params, table, config, ids, batch_size), config.K)


def _embedding(params, table):
    return params["E"] if "E" in params else table.vectors


def _predict_ids(params, table, config, ids, batch_size=256) -> np.ndarray:
    E = _embedding(params, table)
    out = [M.predict(ids[s:s + batch_size], params, E, config)[0]
           for s in range(0, len(ids), batch_size)]
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def _fit(split: DataSplit, table: EmbeddingTable, config: M.ModelConfig, tcfg: TrainConfig,
         sampler: Optional[ContextSampler] = None) -> TrainResult:
    train_ids, train_y = _labeled_arrays(split.train, table, config)
    if len(train_y) == 0:
        raise ValueError("no labeled training examples")
    dev_ids, dev_y = _labeled_arrays(split.dev, table, config)
    if len(dev_y) == 0:
        raise ValueError("early stopping needs a labeled dev set")
    if np.unique(train_y).size < config.K:
        log.warning("only %d of %d classes present in the labeled training set",
                    np.unique(train_y).size, config.K)

    rng = np.random.default_rng(tcfg.seed)
    params = M.init_params(config, table.d, n_nodes=split.n if config.mode == M.SEMI else 0,
                           seed=tcfg.seed)
    if config.fine_tune:
        params["E"] = table.vectors.copy()
    opt_class = Adadelta(tcfg.rho, tcfg.eps, tcfg.lr_class)
    opt_context = Adadelta(tcfg.rho, tcfg.eps, tcfg.lr_context)

    node_ids = batch_ids(split.train, table, config.max_len) if sampler is not None else None
    n_context = 0
    if sampler is not None:
        n_context = 10 * len(train_y) if tcfg.context_per_epoch is None else tcfg.context_per_epoch

    stop = EarlyStopState(patience=tcfg.patience)
    result = TrainResult(params=params, model_config=config)
    for epoch in range(1, tcfg.max_epochs + 1):
        ctx_losses = []
        if n_context:
            samples = sampler.batch(n_context, rng)
            for s in range(0, n_context, tcfg.context_batch_size):
                chunk = samples[s:s + tcfg.context_batch_size]
                i = np.array([c.i for c in chunk])
                j = np.array([c.j for c in chunk])
                g = np.array([c.gamma for c in chunk], dtype=np.float64)
                loss, grads = M.context_loss_and_grads(
                    params, _embedding(params, table), config, node_ids[i], j, g,
                    scale=config.lam, train=True, rng=rng)
                ctx_losses.append(_check_finite(loss, "context loss") * len(chunk))
                opt_context.step(params, grads)
                if config.fine_tune:
                    params["E"][0] = 0.0
        cls_losses = []
        order = rng.permutation(len(train_y))
        for s in range(0, len(order), tcfg.batch_size):
            b = order[s:s + tcfg.batch_size]
            loss, grads = M.class_loss_and_grads(
                params, _embedding(params, table), config, train_ids[b], train_y[b],
                train=True, rng=rng)
            cls_losses.append(_check_finite(loss, "classification loss") * len(b))
            opt_class.step(params, grads)
            if config.fine_tune:
                params["E"][0] = 0.0
        dev_pred = _predict_ids(params, table, config, dev_ids)
        dev_f1 = report(dev_y, dev_pred, config.K).weighted_f1
        rec = EpochRecord(epoch, sum(cls_losses) / len(train_y),
                          sum(ctx_losses) / n_context if n_context else 0.0, dev_f1)
        result.log.append(rec)
        log.debug("epoch %d class=%.4f context=%.4f dev_f1=%.4f",
                  epoch, rec.class_loss, rec.context_loss, dev_f1)
        if not stop.update(epoch, dev_f1, params):
            break
    result.params = stop.best_params
    result.best_epoch = stop.best_epoch
    result.best_dev_f1 = stop.best_f1
    return result


def train_supervised(split: DataSplit, table: EmbeddingTable, config: M.ModelConfig,
                     tcfg: TrainConfig) -> TrainResult:
    """CNN on labeled tweets only; classification reads z2 alone."""
    if not split.train:
        raise ValueError("empty training split")
    return _fit(split, table, replace(config, mode=M.SUPERVISED), tcfg)


def train_semisupervised(split: DataSplit, graph, table: EmbeddingTable, config: M.ModelConfig,
                         tcfg: TrainConfig, scfg: SamplerConfig) -> TrainResult:
    """Alternate a context pass and a classification pass every epoch.

    Graph node ``i`` is ``split.train[i]``; unlabeled tweets carry ``label=None``.
    """
    if not split.train:
        raise ValueError("empty training split")
    if graph.n != split.n:
        raise ValueError(f"graph has {graph.n} nodes but the training split has {split.n} tweets")
    config = replace(config, mode=M.SEMI)
    sampler = ContextSampler(graph, [t.label for t in split.train], scfg)
    return _fit(split, table, config, tcfg, sampler)


@dataclass
class SweepRow:
    budget: str
    mode: str
    report: MetricsReport

    def line(self) -> str:
        r = self.report
        return (f"{self.budget}\t{self.mode}\t{r.weighted_precision:.4f}\t"
                f"{r.weighted_recall:.4f}\t{r.weighted_f1:.4f}")


def budget_graph(split: DataSplit, table: EmbeddingTable, k: int = DEFAULT_K):
    """k-NN graph over ``split.train`` (labeled + unlabeled) using averaged vectors."""
    return build_graph(average_matrix(split.train, table), k)


def label_budget_sweep(budgets: Sequence[Optional[int]], split: DataSplit,
                       table: EmbeddingTable, config: M.ModelConfig, tcfg: TrainConfig,
                       scfg: SamplerConfig, k: int = DEFAULT_K,
                       modes=(M.SUPERVISED, M.SEMI)) -> list:
    """Train each mode at each label budget and score on the fixed test split.

    A budget of ``None`` means every labeled training tweet. Subsampling is
    class-stratified and seeded by ``tcfg.seed``. The semi-supervised run
    at budget ``L`` uses a graph over the ``L`` selected tweets plus the
    unlabeled pool, rebuilt per budget.
    """
    pool = split.L
    for b in budgets:
        if b is not None and b > pool:
            raise ValueError(f"budget {b} exceeds the labeled pool of {pool}")
    rows = []
    for b in budgets:
        sub = subsample_labels(split, b, seed=tcfg.seed)
        name = "all" if b is None else str(b)
        graph = budget_graph(sub, table, k) if M.SEMI in modes else None
        for mode in modes:
            if mode == M.SUPERVISED:
                res = train_supervised(sub, table, config, tcfg)
            else:
                res = train_semisupervised(sub, graph, table, config, tcfg, scfg)
            rep = evaluate(res.params, table, res.model_config, split.test)
            log.info("budget=%s mode=%s %s", name, mode, rep.summary())
            rows.append(SweepRow(name, mode, rep))
    return rows
