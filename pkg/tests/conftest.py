import numpy as np
import pytest

from crisisgraph.embedding import EmbeddingTable

# acceptance verdicts: criterion number -> (name, passed, detail)
VERDICTS: dict = {}


def record(n: int, name: str, passed: bool, detail: str) -> None:
    VERDICTS[n] = (name, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        name, passed, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n} [{'PASS' if passed else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def tiny_table():
    """PAD, UNK, a=(1,0), b=(0,1)."""
    vocab = {"<PAD>": 0, "<UNK>": 1, "a": 2, "b": 3}
    vectors = np.array([[0.0, 0.0], [0.1, -0.2], [1.0, 0.0], [0.0, 1.0]])
    return EmbeddingTable(vocab, vectors)
