"""How much label information the k-NN graph carries versus a supervised CNN.

For each seed: label propagation from L stratified labels over the graph of
labeled + unlabeled + test documents (a transductive upper bound), next to
the supervised test F1 of the fixture model.

    python3 scripts/graph_signal.py --margin 0.6 --topics 10 --seeds 0 1
"""

import argparse
from dataclasses import replace

import numpy as np

from crisisgraph import experiments as X
from crisisgraph.corpus import subsample_labels
from crisisgraph.embedding import average_matrix
from crisisgraph.graph import build_graph
from crisisgraph.trainer import evaluate, train_supervised


def label_propagation(graph, seeds: dict, K: int, alpha=0.9, iters=50) -> np.ndarray:
    n = graph.n
    A = np.zeros((n, n))
    for i, j in ((i, j) for i, e in enumerate(graph.adjacency) for j, _ in e):
        A[i, j] = A[j, i] = 1.0
    deg = A.sum(1)
    S = A / np.sqrt(np.outer(deg, deg))
    Y = np.zeros((n, K))
    for i, c in seeds.items():
        Y[i, c] = 1.0
    F = Y.copy()
    for _ in range(iters):
        F = alpha * S @ F + (1 - alpha) * Y
    return F.argmax(1)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--margin", type=float, default=X.FIXTURE.margin)
    ap.add_argument("--topics", type=int, default=X.FIXTURE.topics_per_class)
    ap.add_argument("--L", type=int, default=100)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1])
    args = ap.parse_args(argv)

    fx = X.fixture(replace(X.FIXTURE, margin=args.margin, topics_per_class=args.topics))
    test = fx.split.test
    truth = np.array([t.label for t in test])
    for seed in args.seeds:
        sub = subsample_labels(fx.split, args.L, seed=seed)
        docs = sub.train + test
        g = build_graph(average_matrix(docs, fx.table), 10)
        seeds = {i: t.label for i, t in enumerate(sub.train) if t.label is not None}
        lp = (label_propagation(g, seeds, fx.label_map.K)[len(sub.train):] == truth).mean()
        res = train_supervised(sub, fx.table, X.MODEL, replace(X.UPLIFT_TRAIN, seed=seed))
        f1 = evaluate(res.params, fx.table, res.model_config, test).weighted_f1
        print(f"seed {seed}: label propagation acc {lp:.3f}, supervised CNN F1 {f1:.3f}")


if __name__ == "__main__":
    main()
