"""Synthetic labeled/unlabeled corpora with matching word vectors.

Each class is a mixture of ``topics_per_class`` topics and every topic owns
a block of the vocabulary; the rest is shared. A token's vector is its
topic centroid plus isotropic noise (shared tokens sit at the mean of the
centroids), so one token says little about the class but the average over
a document does. Centroids are orthonormal directions scaled to pairwise
distance ``margin`` (random directions with the same norm when there are
more topics than dimensions); token noise has unit expected norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .embedding import save_word_vectors


@dataclass(frozen=True)
class SynthSpec:
    classes: int = 2
    docs_per_class: int = 3000
    vocab_size: int = 2000
    tokens_per_doc: int = 20
    margin: float = 1.0
    unlabeled: int = 5000
    seed: int = 0
    dim: int = 32
    class_token_frac: float = 0.5     # share of a document's tokens drawn from its class block
    shared_vocab_frac: float = 0.5
    topics_per_class: int = 1

    def __post_init__(self):
        if self.classes < 2 or self.docs_per_class < 1 or self.tokens_per_doc < 1:
            raise ValueError("classes >= 2, docs_per_class >= 1, tokens_per_doc >= 1 required")
        if self.unlabeled < 0:
            raise ValueError("unlabeled count must be >= 0")
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.dim < self.classes:
            raise ValueError("dim must be at least the number of classes")
        if not 0 < self.class_token_frac <= 1 or not 0 <= self.shared_vocab_frac < 1:
            raise ValueError("token fractions out of range")
        if self.topics_per_class < 1:
            raise ValueError("topics_per_class must be >= 1")
        if self.topic_vocab < 1:
            raise ValueError("vocabulary too small for the number of classes")

    @property
    def class_vocab(self) -> int:
        return int(self.vocab_size * (1 - self.shared_vocab_frac)) // self.classes

    @property
    def n_topics(self) -> int:
        return self.classes * self.topics_per_class

    @property
    def topic_vocab(self) -> int:
        return self.class_vocab // self.topics_per_class

    @property
    def shared_vocab(self) -> int:
        return max(self.vocab_size - self.topic_vocab * self.n_topics, 1)


def class_names(K: int) -> list[str]:
    return ["relevant", "irrelevant"] if K == 2 else [f"class{c}" for c in range(K)]


@dataclass
class SynthCorpus:
    labeled: list            # (id, class name, text)
    unlabeled: list          # (id, text)
    words: list
    vectors: np.ndarray
    centroids: np.ndarray
    labels_unlabeled: list   # hidden truth for the unlabeled pool


def generate(spec: SynthSpec) -> SynthCorpus:
    rng = np.random.default_rng(spec.seed)
    K, d, T = spec.classes, spec.dim, spec.n_topics
    if T <= d:
        basis, _ = np.linalg.qr(rng.normal(size=(d, T)))
        centroids = basis.T
    else:
        centroids = rng.normal(size=(T, d))
        centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    centroids *= spec.margin / np.sqrt(2.0)
    center = centroids.mean(axis=0)
    topic_class = np.repeat(np.arange(K), spec.topics_per_class)

    words, vecs = [], []
    topic_tokens = []
    for t in range(T):
        c, sub = topic_class[t], t % spec.topics_per_class
        ids = []
        for w in range(spec.topic_vocab):
            ids.append(len(words))
            words.append(f"c{c}t{sub}w{w}" if spec.topics_per_class > 1 else f"c{c}w{w}")
            vecs.append(centroids[t] + rng.normal(scale=1 / np.sqrt(d), size=d))
        topic_tokens.append(np.array(ids))
    shared = []
    for w in range(spec.shared_vocab):
        shared.append(len(words))
        words.append(f"sw{w}")
        vecs.append(center + rng.normal(scale=1 / np.sqrt(d), size=d))
    shared = np.array(shared)
    names = class_names(K)

    def doc(c: int) -> str:
        t = c * spec.topics_per_class + int(rng.integers(spec.topics_per_class))
        from_topic = rng.random(spec.tokens_per_doc) < spec.class_token_frac
        toks = np.where(from_topic,
                        rng.choice(topic_tokens[t], spec.tokens_per_doc),
                        rng.choice(shared, spec.tokens_per_doc))
        return " ".join(words[i] for i in toks)

    labeled = []
    order = [c for c in range(K) for _ in range(spec.docs_per_class)]
    rng.shuffle(order)
    for n, c in enumerate(order):
        labeled.append((f"L{n}", names[c], doc(c)))
    unlabeled, hidden = [], []
    for n in range(spec.unlabeled):
        c = int(rng.integers(K))
        unlabeled.append((f"U{n}", doc(c)))
        hidden.append(c)
    return SynthCorpus(labeled, unlabeled, words, np.array(vecs), centroids, hidden)


def write(corpus: SynthCorpus, labeled_path, unlabeled_path: Optional[str], embeddings_path) -> None:
    with open(labeled_path, "w", encoding="utf-8", newline="\n") as fh:
        for doc_id, label, text in corpus.labeled:
            fh.write(f"{doc_id}\t{label}\t{text}\n")
    if corpus.unlabeled and unlabeled_path is not None:
        with open(unlabeled_path, "w", encoding="utf-8", newline="\n") as fh:
            for doc_id, text in corpus.unlabeled:
                fh.write(f"{doc_id}\t{text}\n")
    save_word_vectors(embeddings_path, corpus.words, corpus.vectors)
