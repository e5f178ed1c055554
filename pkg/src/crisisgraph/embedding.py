"""Pretrained word vectors: loading, id lookup and document averaging."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<PAD>", "<UNK>"  # uppercase: never produced by clean_text


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    """Vocabulary plus a ``|V| x d`` matrix; row 0 is PAD (zero), row 1 is UNK."""

    vocab: dict
    vectors: np.ndarray

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def vocab_hash(self) -> str:
        h = hashlib.sha256()
        for word in sorted(self.vocab, key=self.vocab.get):
            h.update(word.encode("utf-8"))
            h.update(b"\n")
        h.update(str(self.d).encode())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class DocVector:
    values: np.ndarray
    source_id: str


def _parse_float(tok: str, path, lineno: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise EmbeddingFormatError(f"{path}:{lineno}: bad number {tok!r}") from None
    if not math.isfinite(value):
        raise EmbeddingFormatError(f"{path}:{lineno}: non-finite value {tok!r}")
    return value


def load_word_vectors(path, seed: int = 0) -> EmbeddingTable:
    """Read a word2vec text file (``count dim`` header, then ``word v1 .. vd``)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError(f"{path}:1: header must be 'count dim'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingFormatError(f"{path}:1: header must be two integers") from None
        if dim < 1 or count < 0:
            raise EmbeddingFormatError(f"{path}:1: invalid header {header}")
        vocab = {PAD_TOKEN: PAD, UNK_TOKEN: UNK}
        rows = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values for {word!r}, got {len(values)}"
                )
            if word in vocab:
                raise EmbeddingFormatError(f"{path}:{lineno}: duplicate word {word!r}")
            vocab[word] = len(vocab)
            rows.append([_parse_float(v, path, lineno) for v in values])
    if len(rows) != count:
        raise EmbeddingFormatError(f"{path}: header says {count} words, found {len(rows)}")
    vectors = np.zeros((len(rows) + 2, dim))
    vectors[UNK] = np.random.default_rng(seed).uniform(-0.25, 0.25, size=dim)
    if rows:
        vectors[2:] = np.asarray(rows, dtype=np.float64)
    return EmbeddingTable(vocab, vectors)


def save_word_vectors(path, words, vectors) -> None:
    """Write vectors in word2vec text format with round-trip float repr."""
    vectors = np.asarray(vectors, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(words)} {vectors.shape[1]}\n")
        for word, vec in zip(words, vectors):
            fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def lookup_ids(tokens, table: EmbeddingTable, max_len: int) -> np.ndarray:
    """Map tokens to vocabulary ids, truncated or PAD-padded to ``max_len``."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = np.full(max_len, PAD, dtype=np.int64)
    for t, tok in enumerate(list(tokens)[:max_len]):
        ids[t] = table.vocab.get(tok, UNK)
    return ids


def batch_ids(tweets, table: EmbeddingTable, max_len: int) -> np.ndarray:
    return np.stack([lookup_ids(t.tokens, table, max_len) for t in tweets]) if tweets \
        else np.zeros((0, max_len), dtype=np.int64)


def average_vector(tokens, table: EmbeddingTable, source_id: str = "") -> DocVector:
    """Mean of in-vocabulary token vectors; the zero vector if none are known."""
    idx = [table.vocab[t] for t in tokens if table.vocab.get(t, UNK) > UNK]
    if not idx:
        return DocVector(np.zeros(table.d), source_id)
    return DocVector(table.vectors[idx].mean(axis=0), source_id)


def average_matrix(tweets, table: EmbeddingTable) -> np.ndarray:
    return np.stack([average_vector(t.tokens, table, t.id).values for t in tweets])
