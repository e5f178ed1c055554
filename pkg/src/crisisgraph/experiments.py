"""Desk-scale experiment presets shared by ``scripts/`` and the acceptance tests.

The synthetic fixture has 10 topics per class (each with its own vocabulary
block), so averaged-vector neighbourhoods are very pure while 100 labels
leave most topics thinly covered. The model is a narrower version of the
default architecture so that five seeds fit in a few CPU minutes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from . import model as M
from .corpus import subsample_labels
from .fixture import Fixture, build_fixture
from .sampler import SamplerConfig
from .synth import SynthSpec
from .trainer import (TrainConfig, budget_graph, evaluate, label_budget_sweep, train_semisupervised,
                      train_supervised)

FIXTURE = SynthSpec(classes=2, docs_per_class=3000, unlabeled=5000, margin=0.6,
                    topics_per_class=10, dim=32, tokens_per_doc=20)
MODEL = M.ModelConfig(filters=[(2, 20, 2), (3, 30, 3), (4, 40, 4)], hidden=(50, 50, 50, 50))
UPLIFT_TRAIN = TrainConfig(lr_context=0.3, context_per_epoch=10_000, context_batch_size=128)
SWEEP_TRAIN = TrainConfig(max_epochs=25, patience=10, lr_context=0.3, context_per_epoch=3_000,
                          context_batch_size=128)
SAMPLER = SamplerConfig(rho1=0.5, rho2=0.9)
SWEEP_BUDGETS = (100, 500, 2000, None)


def fixture(spec: SynthSpec = FIXTURE) -> Fixture:
    return build_fixture(spec, split_seed=0, k=None)


@dataclass
class UpliftResult:
    seed: int
    supervised_f1: float
    semi_f1: float

    @property
    def uplift(self) -> float:
        return self.semi_f1 - self.supervised_f1


def uplift(fx: Fixture, seed: int, L: int = 100, model: M.ModelConfig = MODEL,
           tcfg: TrainConfig = UPLIFT_TRAIN, scfg: SamplerConfig = SAMPLER) -> UpliftResult:
    """Supervised vs semi-supervised test F1 at a stratified budget of ``L`` labels."""
    sub = subsample_labels(fx.split, L, seed=seed)
    tcfg = replace(tcfg, seed=seed)
    sup = train_supervised(sub, fx.table, model, tcfg)
    semi = train_semisupervised(sub, budget_graph(sub, fx.table), fx.table, model, tcfg,
                                replace(scfg, seed=seed))
    test = fx.split.test
    return UpliftResult(seed,
                        evaluate(sup.params, fx.table, sup.model_config, test).weighted_f1,
                        evaluate(semi.params, fx.table, semi.model_config, test).weighted_f1)


def sweep(fx: Fixture, seed: int, budgets: Sequence[Optional[int]] = SWEEP_BUDGETS,
          model: M.ModelConfig = MODEL, tcfg: TrainConfig = SWEEP_TRAIN,
          scfg: SamplerConfig = SAMPLER) -> list:
    return label_budget_sweep(budgets, fx.split, fx.table, model, replace(tcfg, seed=seed),
                              replace(scfg, seed=seed))


def inversions(values: Sequence[float]) -> list:
    """Drops between consecutive entries (positive numbers)."""
    return [a - b for a, b in zip(values, values[1:]) if b < a]


def nearly_monotone(values: Sequence[float], max_inversions: int = 1, tol: float = 0.01) -> bool:
    """Non-decreasing except for at most ``max_inversions`` drops of at most ``tol``."""
    drops = inversions(values)
    return len(drops) <= max_inversions and all(d <= tol for d in drops)
