"""In-memory experiment fixture: synthetic corpus -> split -> graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import DataSplit, LabelMap, RawDocument, add_unlabeled, process, split_dataset
from .embedding import EmbeddingTable, average_matrix
from .graph import SimilarityGraph, build_graph
from .synth import SynthSpec, class_names, generate


@dataclass
class Fixture:
    split: DataSplit
    graph: Optional[SimilarityGraph]
    table: EmbeddingTable
    label_map: LabelMap


def table_from_arrays(words, vectors, seed: int = 0) -> EmbeddingTable:
    d = vectors.shape[1]
    vocab = {"<PAD>": 0, "<UNK>": 1}
    for w in words:
        vocab[w] = len(vocab)
    full = np.zeros((len(words) + 2, d))
    full[1] = np.random.default_rng(seed).uniform(-0.25, 0.25, size=d)
    full[2:] = vectors
    return EmbeddingTable(vocab, full)


def build_fixture(spec: SynthSpec, split_seed: int = 0, k: Optional[int] = 10,
                  ratios=(0.6, 0.3, 0.1)) -> Fixture:
    """Synthetic corpus, 60/30/10 split plus unlabeled pool; ``k=None`` skips the graph."""
    corpus = generate(spec)
    label_map = LabelMap(tuple(class_names(spec.classes)))
    docs = [process(RawDocument(i, text, label), label_map) for i, label, text in corpus.labeled]
    unl = [process(RawDocument(i, text)) for i, text in corpus.unlabeled]
    split = add_unlabeled(split_dataset(docs, ratios, seed=split_seed), unl)
    split.label_map = label_map
    table = table_from_arrays(corpus.words, corpus.vectors, seed=spec.seed)
    graph = build_graph(average_matrix(split.train, table), k) if k else None
    return Fixture(split, graph, table, label_map)
