import filecmp

import numpy as np
from hypothesis import given, settings, strategies as st

from crisisgraph import synth as S
from crisisgraph.corpus import clean_text, load_documents, tokenize
from crisisgraph.embedding import EmbeddingTable, average_vector, load_word_vectors


def _nearest_centroid_accuracy(corpus):
    table = _table(corpus)
    labels = [lab for _, lab, _ in corpus.labeled]
    names = sorted(set(labels))
    X = np.array([average_vector(tokenize(clean_text(t)), table).values
                  for _, _, t in corpus.labeled])
    y = np.array([names.index(lab) for lab in labels])
    cents = np.array([X[y == c].mean(axis=0) for c in range(len(names))])
    d = ((X[:, None, :] - cents[None]) ** 2).sum(-1)
    return float((d.argmin(1) == y).mean())


def _table(corpus):
    vocab = {"<PAD>": 0, "<UNK>": 1}
    for w in corpus.words:
        vocab[w] = len(vocab)
    vecs = np.vstack([np.zeros((2, corpus.vectors.shape[1])), corpus.vectors])
    return EmbeddingTable(vocab, vecs)


def test_large_margin_is_separable_by_nearest_centroid():
    spec = S.SynthSpec(docs_per_class=300, unlabeled=0, margin=4.0, vocab_size=400, seed=3)
    assert _nearest_centroid_accuracy(S.generate(spec)) >= 0.99


def test_same_seed_identical_files(tmp_path):
    spec = S.SynthSpec(docs_per_class=20, unlabeled=10, vocab_size=100, dim=4, seed=9)
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        S.write(S.generate(spec), d / "lab.tsv", d / "unl.tsv", d / "emb.txt")
    for name in ("lab.tsv", "unl.tsv", "emb.txt"):
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)


def test_zero_unlabeled_writes_no_unlabeled_file(tmp_path):
    spec = S.SynthSpec(docs_per_class=5, unlabeled=0, vocab_size=50, dim=4)
    S.write(S.generate(spec), tmp_path / "lab.tsv", tmp_path / "unl.tsv", tmp_path / "emb.txt")
    assert not (tmp_path / "unl.tsv").exists()
    assert (tmp_path / "lab.tsv").exists()


def test_files_load_with_corpus_and_embedding_readers(tmp_path):
    spec = S.SynthSpec(classes=3, docs_per_class=7, unlabeled=4, vocab_size=90, dim=5)
    S.write(S.generate(spec), tmp_path / "l.tsv", tmp_path / "u.tsv", tmp_path / "e.txt")
    docs, lm = load_documents(tmp_path / "l.tsv", labeled=True)
    assert len(docs) == 21 and lm.K == 3
    unl, _ = load_documents(tmp_path / "u.tsv", labeled=False)
    assert len(unl) == 4
    table = load_word_vectors(tmp_path / "e.txt")
    assert table.d == 5 and len(table) == len(S.generate(spec).words) + 2


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 4), st.integers(1, 12), st.integers(0, 10_000))
def test_class_counts_and_token_counts(K, per_class, seed):
    spec = S.SynthSpec(classes=K, docs_per_class=per_class, unlabeled=3, vocab_size=60,
                       dim=6, tokens_per_doc=7, seed=seed)
    c = S.generate(spec)
    assert len(c.labeled) == K * per_class and len(c.unlabeled) == 3
    for _, _, text in c.labeled:
        assert len(text.split()) == 7
    assert sorted({lab for _, lab, _ in c.labeled}) == sorted(S.class_names(K))
