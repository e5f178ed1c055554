"""Context-pair sampling for the graph/label context loss.

A draw first picks the context kind (label-based with probability rho2,
else graph-based) and the sign (positive with probability rho1), then a
node pair satisfying that kind and sign. Graph contexts use only direct
neighbors of the symmetrized k-NN graph; there are no random walks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

GRAPH, LABEL = "graph", "label"
MAX_RETRIES = 100


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    rho1: float = 0.5
    rho2: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("rho1", "rho2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


@dataclass(frozen=True)
class ContextSample:
    i: int
    j: int
    gamma: int
    kind: str


class ContextSampler:
    """Precomputes neighbor and label indexes for repeated draws."""

    def __init__(self, graph, labels: Sequence[Optional[int]], cfg: SamplerConfig):
        if graph.n < 2:
            raise ValueError("graph needs at least 2 nodes")
        if len(labels) != graph.n:
            raise ValueError(f"{len(labels)} labels for a {graph.n}-node graph")
        self.cfg = cfg
        self.n = graph.n
        sets = graph.neighbor_sets()
        self.neighbor_sets = sets
        self.neighbors = [np.array(sorted(s), dtype=np.int64) for s in sets]
        self.connected = np.array([i for i in range(self.n) if sets[i]], dtype=np.int64)
        self.labels = list(labels)
        self.labeled = np.array([i for i, y in enumerate(labels) if y is not None], dtype=np.int64)
        self.by_class = {}
        for i in self.labeled.tolist():
            self.by_class.setdefault(self.labels[i], []).append(i)
        self.by_class = {c: np.array(v, dtype=np.int64) for c, v in self.by_class.items()}

    def _pick(self, rng, arr):
        return int(arr[rng.integers(len(arr))])

    def _graph_pair(self, rng, positive: bool):
        if positive:
            if not len(self.connected):
                raise SamplingError("graph has no edges")
            i = self._pick(rng, self.connected)
            return i, self._pick(rng, self.neighbors[i])
        for _ in range(MAX_RETRIES):
            i = int(rng.integers(self.n))
            nbrs = self.neighbor_sets[i]
            for _ in range(MAX_RETRIES):
                j = int(rng.integers(self.n))
                if j != i and j not in nbrs:
                    return i, j
        raise SamplingError("no non-neighbor found for graph negative")

    def _label_pair(self, rng, positive: bool):
        if len(self.labeled) < 2:
            raise SamplingError("label contexts need at least 2 labeled nodes")
        if not positive and len(self.by_class) < 2:
            raise SamplingError("label negatives need at least 2 classes")
        for _ in range(MAX_RETRIES):
            i = self._pick(rng, self.labeled)
            y = self.labels[i]
            if positive:
                same = self.by_class[y]
                if len(same) < 2:
                    continue
                # uniform over same-class nodes other than i
                j = self._pick(rng, same[:-1])
                if j == i:
                    j = int(same[-1])
                return i, j
            others = [c for c in self.by_class if c != y]
            sizes = np.array([len(self.by_class[c]) for c in others])
            r = int(rng.integers(sizes.sum()))
            for c, s in zip(others, sizes):
                if r < s:
                    return i, int(self.by_class[c][r])
                r -= s
        raise SamplingError("could not draw a label-positive pair (singleton classes)")

    def sample(self, rng) -> ContextSample:
        kind = LABEL if rng.random() < self.cfg.rho2 else GRAPH
        positive = rng.random() < self.cfg.rho1
        if kind == LABEL:
            i, j = self._label_pair(rng, positive)
        else:
            i, j = self._graph_pair(rng, positive)
        return ContextSample(i, j, 1 if positive else -1, kind)

    def batch(self, count: int, rng) -> list:
        return [self.sample(rng) for _ in range(count)]


def sample_context(graph, labels, cfg: SamplerConfig, rng) -> ContextSample:
    return ContextSampler(graph, labels, cfg).sample(rng)


def sample_batch(count: int, graph, labels, cfg: SamplerConfig, rng=None) -> list:
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    return ContextSampler(graph, labels, cfg).batch(count, rng)


def is_valid(sample: ContextSample, sampler: ContextSampler) -> bool:
    """Check a sample against the definition of its sign."""
    i, j = sample.i, sample.j
    if i == j:
        return False
    if sample.kind == GRAPH:
        linked = j in sampler.neighbor_sets[i]
        return linked if sample.gamma == 1 else not linked
    yi, yj = sampler.labels[i], sampler.labels[j]
    if yi is None or yj is None:
        return False
    return (yi == yj) if sample.gamma == 1 else (yi != yj)
