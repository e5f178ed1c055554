import numpy as np
import pytest

from crisisgraph import model as M
from crisisgraph.corpus import DataSplit, LabelMap, ProcessedTweet
from crisisgraph.embedding import EmbeddingTable, average_matrix
from crisisgraph.fixture import build_fixture
from crisisgraph.graph import build_graph
from crisisgraph.sampler import SamplerConfig
from crisisgraph.synth import SynthSpec
from crisisgraph.trainer import (EarlyStopState, TrainConfig, budget_graph, evaluate,
                                 label_budget_sweep, train_semisupervised, train_supervised)

SMALL = M.ModelConfig(max_len=8, filters=[(2, 6, 2)], hidden=(8, 8, 8, 8), K=2, dropout=0.0)


def _separable(n=20):
    """'a'-heavy tweets are class 0, 'b'-heavy tweets class 1."""
    vocab = {"<PAD>": 0, "<UNK>": 1, "a": 2, "b": 3, "c": 4}
    vectors = np.array([[0, 0, 0], [0.1, 0.1, 0.1], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    table = EmbeddingTable(vocab, vectors)
    rng = np.random.default_rng(3)

    def tweet(i, label):
        main = "a" if label == 0 else "b"
        toks = [main if rng.random() < 0.7 else "c" for _ in range(6)]
        toks[0] = main
        return ProcessedTweet(f"t{i}", tuple(toks), label)

    train = [tweet(i, i % 2) for i in range(n)]
    dev = [tweet(100 + i, i % 2) for i in range(6)]
    test = [tweet(200 + i, i % 2) for i in range(6)]
    return DataSplit(train, dev, test, LabelMap(("x", "y"))), table


@pytest.fixture(scope="module")
def small_fixture():
    spec = SynthSpec(docs_per_class=100, unlabeled=120, vocab_size=200, dim=8, seed=1,
                     margin=0.8, topics_per_class=2)
    return build_fixture(spec, split_seed=0, k=5)


def test_separable_corpus_reaches_full_train_accuracy():
    split, table = _separable()
    # select on the training set itself so the kept checkpoint is the best fit
    split = DataSplit(split.train, split.train, split.test, split.label_map)
    tc = TrainConfig(max_epochs=50, patience=50, batch_size=4, seed=0)
    res = train_supervised(split, table, SMALL, tc)
    rep = evaluate(res.params, table, res.model_config, split.train)
    assert rep.accuracy == 1.0 and res.best_epoch <= 50


def test_zero_learning_rate_with_patience_one_stops_after_two_epochs():
    split, table = _separable()
    tc = TrainConfig(max_epochs=20, patience=1, lr_class=0.0, seed=0)
    res = train_supervised(split, table, SMALL, tc)
    assert len(res.log) == 2
    assert res.log[0].dev_f1 == res.log[1].dev_f1
    assert res.best_epoch == 1


def test_same_seed_same_log():
    split, table = _separable()
    tc = TrainConfig(max_epochs=5, patience=5, seed=4)
    a = train_supervised(split, table, SMALL, tc)
    b = train_supervised(split, table, SMALL, tc)
    assert a.log_text() == b.log_text()
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])


def test_log_line_format():
    split, table = _separable()
    res = train_supervised(split, table, SMALL, TrainConfig(max_epochs=2, patience=2))
    for n, line in enumerate(res.log_text().splitlines(), start=1):
        cols = line.split("\t")
        assert len(cols) == 4 and int(cols[0]) == n
        assert float(cols[2]) == 0.0   # no context loss in supervised mode
        assert 0.0 <= float(cols[3]) <= 1.0


def test_early_stop_state_keeps_best_and_ignores_ties():
    st = EarlyStopState(patience=2)
    p = {"w": np.zeros(1)}
    assert st.update(1, 0.5, {"w": np.ones(1)})
    assert st.update(2, 0.5, p)            # tie: counts against patience
    assert not st.update(3, 0.4, p)
    assert st.best_epoch == 1 and st.best_params["w"][0] == 1.0


def test_returned_params_are_best_not_last(small_fixture):
    fx = small_fixture
    tc = TrainConfig(max_epochs=8, patience=8, seed=2)
    res = train_supervised(fx.split, fx.table, SMALL, tc)
    f1s = [r.dev_f1 for r in res.log]
    assert res.best_epoch == int(np.argmax(f1s)) + 1
    rep = evaluate(res.params, fx.table, res.model_config, fx.split.dev)
    assert rep.weighted_f1 == pytest.approx(max(f1s))


def test_empty_split_rejected():
    _, table = _separable()
    empty = DataSplit([], [], [], LabelMap(("x", "y")))
    with pytest.raises(ValueError):
        train_supervised(empty, table, SMALL, TrainConfig())


def test_graph_split_misalignment_rejected(small_fixture):
    fx = small_fixture
    g = build_graph(average_matrix(fx.split.train[:-1], fx.table), 5)
    with pytest.raises(ValueError):
        train_semisupervised(fx.split, g, fx.table, SMALL, TrainConfig(max_epochs=1, patience=1),
                             SamplerConfig())


def test_semi_without_unlabeled_or_context_matches_semi_architecture(small_fixture):
    fx = small_fixture
    labeled_only = DataSplit(fx.split.labeled_train, fx.split.dev, fx.split.test, fx.label_map)
    g = budget_graph(labeled_only, fx.table, 5)
    tc = TrainConfig(max_epochs=3, patience=3, context_per_epoch=0, seed=1)
    res = train_semisupervised(labeled_only, g, fx.table, SMALL, tc, SamplerConfig())
    assert res.model_config.mode == M.SEMI
    assert all(r.context_loss == 0.0 for r in res.log)
    # Wctx never receives a gradient
    init = M.init_params(res.model_config, fx.table.d, n_nodes=labeled_only.n, seed=1)
    np.testing.assert_array_equal(res.params["Wctx"], init["Wctx"])


def test_context_loss_decreases_early(small_fixture):
    fx = small_fixture
    tc = TrainConfig(max_epochs=5, patience=5, lr_context=0.1, seed=0)
    res = train_semisupervised(fx.split, fx.graph, fx.table, SMALL, tc, SamplerConfig(seed=0))
    ctx = [r.context_loss for r in res.log]
    assert len(ctx) == 5
    assert ctx[-1] < ctx[0]


def test_sweep_shape_and_errors(small_fixture):
    fx = small_fixture
    tc = TrainConfig(max_epochs=2, patience=2, seed=0)
    rows = label_budget_sweep([20, None], fx.split, fx.table, SMALL, tc, SamplerConfig(), k=5)
    assert [(r.budget, r.mode) for r in rows] == [
        ("20", "supervised"), ("20", "semi"), ("all", "supervised"), ("all", "semi")]
    for r in rows:
        cols = r.line().split("\t")
        assert len(cols) == 5 and all(len(c.split(".")[1]) == 4 for c in cols[2:])
    with pytest.raises(ValueError):
        label_budget_sweep([fx.split.L + 1], fx.split, fx.table, SMALL, tc, SamplerConfig())


def test_sweep_budget_all_equals_direct_training(small_fixture):
    fx = small_fixture
    tc = TrainConfig(max_epochs=2, patience=2, seed=5)
    rows = label_budget_sweep([None], fx.split, fx.table, SMALL, tc, SamplerConfig(),
                              modes=(M.SUPERVISED,))
    direct = train_supervised(fx.split, fx.table, SMALL, tc)
    rep = evaluate(direct.params, fx.table, direct.model_config, fx.split.test)
    assert rows[0].report.weighted_f1 == rep.weighted_f1


def test_supervised_evaluation_ignores_graph(small_fixture):
    fx = small_fixture
    tc = TrainConfig(max_epochs=2, patience=2, seed=0)
    res = train_supervised(fx.split, fx.table, SMALL, tc)
    assert "Wctx" not in res.params
    a = evaluate(res.params, fx.table, res.model_config, fx.split.test)
    b = evaluate(res.params, fx.table, res.model_config, fx.split.test)
    assert a.weighted_f1 == b.weighted_f1
