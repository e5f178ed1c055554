"""Document ingestion, tweet cleaning, tokenization and dataset splitting."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence


class CorpusFormatError(ValueError):
    """Malformed input file (bad column count, duplicate id, ...)."""


URL_RE = re.compile(r"\S*(?:http|www\.)\S*")
MENTION_RE = re.compile(r"@\S*")
TIME_RE = re.compile(r"\d{1,2}:\d{2}(?::\d{2})?(?:am|pm)?")
DIGITS_RE = re.compile(r"\d+")
SPECIAL_RE = re.compile(r"[^a-z0-9 ]")
EDGE_RE = re.compile(r"^[^a-z0-9]+|[^a-z0-9]+$")


@dataclass(frozen=True)
class RawDocument:
    id: str
    text: str
    label: Optional[str] = None


@dataclass(frozen=True)
class ProcessedTweet:
    id: str
    tokens: tuple[str, ...]
    label: Optional[int] = None


@dataclass(frozen=True)
class LabelMap:
    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) < 2:
            raise ValueError("a label map needs at least 2 classes")
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")

    @property
    def K(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def save(self, path) -> None:
        Path(path).write_text("".join(f"{n}\n" for n in self.names), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "LabelMap":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        return cls(tuple(line for line in lines if line))


@dataclass
class DataSplit:
    """Train/dev/test partition.

    ``train`` holds labeled training tweets first, followed by any unlabeled
    tweets (``label is None``); its order is the node order of the
    similarity graph.
    """

    train: list[ProcessedTweet]
    dev: list[ProcessedTweet]
    test: list[ProcessedTweet]
    label_map: Optional[LabelMap] = None
    meta: dict = field(default_factory=dict)

    @property
    def L(self) -> int:
        return sum(t.label is not None for t in self.train)

    @property
    def U(self) -> int:
        return sum(t.label is None for t in self.train)

    @property
    def n(self) -> int:
        return len(self.train)

    @property
    def labeled_train(self) -> list[ProcessedTweet]:
        return [t for t in self.train if t.label is not None]


def _drop_tokens(text: str, pattern: re.Pattern) -> str:
    return " ".join(tok for tok in text.split()
                    if not pattern.fullmatch(EDGE_RE.sub("", tok)))


def clean_text(raw: str) -> str:
    """Lowercase and strip URLs, mentions, times, digits, symbols and 1-char tokens."""
    text = raw.lower()
    text = URL_RE.sub(" ", text)
    text = MENTION_RE.sub(" ", text)
    text = _drop_tokens(text, TIME_RE)
    text = _drop_tokens(text, DIGITS_RE)
    text = SPECIAL_RE.sub(" ", text)
    # symbol stripping can expose new digit runs ("abc-123"), drop those too
    tokens = [tok for tok in text.split() if len(tok) >= 2 and not tok.isdigit()]
    return " ".join(tokens)


def tokenize(clean: str) -> list[str]:
    return clean.split()


def process(doc: RawDocument, label_map: Optional[LabelMap] = None) -> ProcessedTweet:
    label = None
    if doc.label is not None:
        if label_map is None:
            raise ValueError("labeled document requires a label map")
        label = label_map.index(doc.label)
    return ProcessedTweet(doc.id, tuple(tokenize(clean_text(doc.text))), label)


def load_documents(path, labeled: bool, label_map: Optional[LabelMap] = None):
    """Read a TSV corpus file.

    Labeled files have ``id<TAB>label<TAB>text``; unlabeled files have
    ``id<TAB>text``. Returns ``(docs, label_map)``; when no label map is
    given one is interned from labels in first-seen order. Unknown labels
    with a supplied map raise :class:`CorpusFormatError`.
    """
    ncols = 3 if labeled else 2
    docs: list[RawDocument] = []
    seen: set[str] = set()
    names: list[str] = list(label_map.names) if label_map is not None else []
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != ncols:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected {ncols} columns, got {len(cols)}"
                )
            doc_id = cols[0]
            if not doc_id:
                raise CorpusFormatError(f"{path}:{lineno}: empty id")
            if doc_id in seen:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate id {doc_id!r}")
            seen.add(doc_id)
            if labeled:
                label = cols[1]
                if label not in names:
                    if label_map is not None:
                        raise CorpusFormatError(f"{path}:{lineno}: unknown label {label!r}")
                    names.append(label)
                docs.append(RawDocument(doc_id, cols[2], label))
            else:
                docs.append(RawDocument(doc_id, cols[1]))
    if labeled and label_map is None:
        if len(names) < 2:
            raise CorpusFormatError(f"{path}: need at least 2 distinct labels, found {len(names)}")
        label_map = LabelMap(tuple(names))
    return docs, label_map


def split_dataset(docs: Sequence, ratios=(0.6, 0.3, 0.1), seed: int = 0) -> DataSplit:
    """Shuffle with ``seed`` and slice into train/test/dev.

    ``ratios`` is ``(train, test, dev)``. Test and dev sizes are
    ``floor(ratio * n)``; the remainder goes to train.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(docs)
    if n < 3:
        raise ValueError(f"need at least 3 documents to split, got {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_test = int(ratios[1] * n)
    n_dev = int(ratios[2] * n)
    n_train = n - n_test - n_dev
    shuffled = [docs[i] for i in order]
    return DataSplit(
        train=shuffled[:n_train],
        test=shuffled[n_train:n_train + n_test],
        dev=shuffled[n_train + n_test:],
    )


def add_unlabeled(split: DataSplit, unlabeled: Sequence[ProcessedTweet], cap: Optional[int] = None) -> DataSplit:
    """Append unlabeled tweets (up to ``cap``) after the labeled training tweets."""
    extra = list(unlabeled)[:cap] if cap is not None else list(unlabeled)
    if any(t.label is not None for t in extra):
        raise ValueError("unlabeled pool contains labeled tweets")
    return replace(split, train=list(split.train) + extra)


def subsample_labels(split: DataSplit, budget: Optional[int], seed: int = 0,
                     keep_unselected: bool = False) -> DataSplit:
    """Keep ``budget`` class-stratified training labels.

    Unselected labeled tweets are removed from ``train``, so the result holds
    the ``budget`` labeled tweets plus the unlabeled pool, in their original
    order. With ``keep_unselected`` they stay in place with their label
    erased instead, which keeps a graph built over ``split.train`` valid.
    ``budget=None`` keeps every label.
    """
    labeled = [i for i, t in enumerate(split.train) if t.label is not None]
    if budget is None or budget == len(labeled):
        return split
    if budget < 1 or budget > len(labeled):
        raise ValueError(f"budget {budget} outside labeled pool of {len(labeled)}")
    by_class: dict[int, list[int]] = {}
    for i in labeled:
        by_class.setdefault(split.train[i].label, []).append(i)
    rng = random.Random(seed)
    classes = sorted(by_class)
    # largest-remainder allocation, at least one per class when possible
    quotas = {c: budget * len(by_class[c]) / len(labeled) for c in classes}
    alloc = {c: int(quotas[c]) for c in classes}
    if budget >= len(classes):
        for c in classes:
            alloc[c] = max(alloc[c], 1)
    while sum(alloc.values()) > budget:
        c = max(classes, key=lambda c: (alloc[c] - quotas[c], c))
        alloc[c] -= 1
    for c in sorted(classes, key=lambda c: (-(quotas[c] - alloc[c]), c)):
        if sum(alloc.values()) >= budget:
            break
        if alloc[c] < len(by_class[c]):
            alloc[c] += 1
    keep: set[int] = set()
    for c in classes:
        keep.update(rng.sample(by_class[c], alloc[c]))
    if keep_unselected:
        train = [t if (t.label is None or i in keep) else replace(t, label=None)
                 for i, t in enumerate(split.train)]
    else:
        train = [t for i, t in enumerate(split.train) if t.label is None or i in keep]
    return replace(split, train=train)


def write_processed(path, tweets: Sequence[ProcessedTweet], label_map: Optional[LabelMap]) -> None:
    """Write processed tweets as TSV (text column = space-joined tokens)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in tweets:
            text = " ".join(t.tokens)
            if t.label is None:
                fh.write(f"{t.id}\t{text}\n")
            else:
                fh.write(f"{t.id}\t{label_map.names[t.label]}\t{text}\n")


def read_processed(path, labeled: bool, label_map: Optional[LabelMap] = None):
    """Load a TSV and turn it into tweets; returns ``(tweets, label_map)``."""
    docs, label_map = load_documents(path, labeled, label_map)
    return [process(d, label_map) for d in docs], label_map
