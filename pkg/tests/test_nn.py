import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from crisisgraph import nn


def numeric_grad(f, x, h=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


def test_embedding_lookup():
    E = np.array([[0.0, 0.0], [0.3, 0.3], [1.0, 0.0]])
    np.testing.assert_array_equal(nn.embedding_lookup(np.array([[0, 0]]), E)[0], np.zeros((2, 2)))
    np.testing.assert_array_equal(nn.embedding_lookup(np.array([[2]]), E)[0], [[1, 0]])
    np.testing.assert_array_equal(nn.embedding_lookup(np.array([[2, 1]]), E)[0], [[1, 0], [0.3, 0.3]])
    with pytest.raises(IndexError):
        nn.embedding_lookup(np.array([[3]]), E)


def test_conv1d_examples():
    X = np.array([[[1.0], [2.0], [3.0]]])
    H, _ = nn.conv1d(X, np.array([[1.0, 1.0]]), np.zeros(1))
    np.testing.assert_array_equal(H[0, :, 0], [3, 5])
    H, _ = nn.conv1d(X, np.array([[-1.0, -1.0]]), np.zeros(1))
    np.testing.assert_array_equal(H[0, :, 0], [0, 0])
    H, _ = nn.conv1d(np.zeros((1, 4, 2)), np.ones((3, 4)), np.full(3, 0.5))
    np.testing.assert_array_equal(H, np.full((1, 3, 3), 0.5))
    with pytest.raises(ValueError):
        nn.conv1d(np.zeros((1, 1, 2)), np.ones((1, 4)), np.zeros(1))


def test_conv1d_window_order():
    # filter weights apply to [x_t; x_{t+1}] in that order
    X = np.array([[[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]]])
    W = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    H, _ = nn.conv1d(X, W, np.zeros(2))
    np.testing.assert_array_equal(H[0], [[1, 20], [2, 30]])


def test_conv1d_linear_before_relu():
    rng = np.random.default_rng(0)
    X1, X2 = rng.normal(size=(2, 1, 6, 3))
    W, b = rng.normal(size=(4, 6)), np.zeros(4)
    pre = lambda X: nn.conv1d(X, W, b)[1][1]
    np.testing.assert_allclose(pre(X1 + 2 * X2), pre(X1) + 2 * pre(X2), atol=1e-12)
    H, _ = nn.conv1d(X1, np.zeros((4, 6)), np.zeros(4))
    assert not H.any()


def test_maxpool_examples():
    assert nn.maxpool_windowed(np.array([1.0, 3, 2, 5]), 2)[0].tolist() == [3, 5]
    assert nn.maxpool_windowed(np.array([1.0, 3, 2]), 2)[0].tolist() == [3, 2]
    h = np.array([4.0, -1, 2])
    assert nn.maxpool_windowed(h, 1)[0].tolist() == h.tolist()


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e6, 1e6)), st.integers(1, 8))
def test_maxpool_windows(h, p):
    out, _ = nn.maxpool_windowed(h, p)
    assert len(out) == -(-len(h) // p)
    for t, v in enumerate(out):
        assert v == h[t * p:(t + 1) * p].max()


def test_maxpool_gradient_goes_to_first_max():
    h = np.array([2.0, 2.0, 1.0])
    _, cache = nn.maxpool_windowed(h, 3)
    np.testing.assert_array_equal(nn.maxpool_backward(np.array([1.0]), cache), [1, 0, 0])


def test_dense_examples():
    out, _ = nn.dense_forward(np.array([1.0, -1.0]), np.eye(2), np.zeros(2))
    np.testing.assert_array_equal(out, [1, 0])
    out, _ = nn.dense_forward(np.array([5.0, 7.0]), np.zeros((2, 2)), np.array([0.5, -2.0]))
    np.testing.assert_array_equal(out, [0.5, 0])
    V = np.array([[1.0, 2.0], [3.0, 4.0]])
    out, _ = nn.dense_forward(np.ones(2), V, np.zeros(2), "identity")
    np.testing.assert_array_equal(out, [3, 7])
    with pytest.raises(ValueError):
        nn.dense_forward(np.ones(3), V, np.zeros(2))


def test_softmax_examples():
    np.testing.assert_allclose(nn.softmax(np.array([0.0, 0.0])), [0.5, 0.5])
    p = nn.softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(p))
    np.testing.assert_allclose(p, [1, 0], atol=1e-12)


@given(arrays(np.float64, st.integers(1, 10), elements=st.floats(-500, 500)), st.floats(-100, 100))
def test_softmax_sums_to_one_and_shift_invariant(x, c):
    p = nn.softmax(x)
    assert abs(p.sum() - 1) <= 1e-9 and np.all(p >= 0) and np.all(p <= 1)
    np.testing.assert_allclose(nn.softmax(x + c), p, atol=1e-12)


def test_sigmoid():
    assert nn.sigmoid(0.0) == 0.5
    assert nn.sigmoid(-745.0) > 0.0
    assert nn.sigmoid(800.0) == 1.0
    assert np.isfinite(nn.log_sigmoid(-800.0))
    assert nn.log_sigmoid(-800.0) == pytest.approx(-800.0)


@given(st.floats(-700, 700))
def test_sigmoid_symmetry(x):
    assert abs(nn.sigmoid(x) + nn.sigmoid(-x) - 1) <= 1e-12


def test_dropout_modes():
    x = np.arange(10.0)
    rng = np.random.default_rng(0)
    for train in (True, False):
        y, mask = nn.dropout(x, 0.0, train, rng)
        np.testing.assert_array_equal(y, x)
    y, mask = nn.dropout(x, 0.5, False, rng)
    np.testing.assert_array_equal(y, x)
    with pytest.raises(ValueError):
        nn.dropout(x, 1.0, True, rng)


def test_dropout_rate_statistics():
    y, mask = nn.dropout(np.ones(1_000_000), 0.02, True, np.random.default_rng(7))
    assert abs((y == 0).mean() - 0.02) <= 0.0005
    np.testing.assert_allclose(y[y != 0], 1 / 0.98)


def test_layer_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(2, 7, 3))
    W, b = rng.normal(size=(4, 9)), rng.normal(size=4)
    up = rng.normal(size=(2, 5, 4))

    def conv_loss():
        return float((nn.conv1d(X, W, b)[0] * up).sum())

    H, cache = nn.conv1d(X, W, b)
    dX, dW, db = nn.conv1d_backward(up, cache)
    for analytic, x in ((dX, X), (dW, W), (db, b)):
        assert rel_error(analytic, numeric_grad(conv_loss, x)) <= 1e-4

    H = rng.normal(size=(2, 7, 3))
    up = rng.normal(size=(2, 3, 3))
    _, cache = nn.maxpool_windowed(H, 3)
    assert rel_error(nn.maxpool_backward(up, cache),
                     numeric_grad(lambda: float((nn.maxpool_windowed(H, 3)[0] * up).sum()), H)) <= 1e-4

    x, V, c = rng.normal(size=(3, 5)), rng.normal(size=(4, 5)), rng.normal(size=4)
    up = rng.normal(size=(3, 4))
    for act in ("relu", "identity"):
        f = lambda: float((nn.dense_forward(x, V, c, act)[0] * up).sum())
        dx, dV, dc = nn.dense_backward(up, nn.dense_forward(x, V, c, act)[1])
        for analytic, arr in ((dx, x), (dV, V), (dc, c)):
            assert rel_error(analytic, numeric_grad(f, arr)) <= 1e-4


def test_softmax_cross_entropy_gradient_closed_form():
    rng = np.random.default_rng(4)
    z = rng.normal(size=3)
    y = 1
    f = lambda: float(-np.log(nn.softmax(z)[y]))
    expected = nn.softmax(z) - np.eye(3)[y]
    np.testing.assert_allclose(numeric_grad(f, z), expected, atol=1e-8)


def test_embedding_backward_skips_pad():
    dX = np.ones((1, 3, 2))
    dE = nn.embedding_backward(dX, np.array([[0, 2, 2]]), 4)
    np.testing.assert_array_equal(dE, [[0, 0], [0, 0], [2, 2], [0, 0]])


def test_adadelta_first_step():
    p = {"x": np.array([0.0])}
    opt = nn.Adadelta(rho=0.95, eps=1e-6, lr_scale=1.0)
    opt.step(p, {"x": np.array([1.0])})
    # sqrt(1e-6) / sqrt(0.05 + 1e-6)
    assert p["x"][0] == pytest.approx(-0.0044721, abs=1e-7)


def test_adadelta_zero_gradient_only_decays():
    p = {"x": np.array([1.0])}
    opt = nn.Adadelta()
    opt.step(p, {"x": np.array([2.0])})
    before = p["x"].copy()
    eg, ed = opt.sq_grad["x"].copy(), opt.sq_delta["x"].copy()
    opt.step(p, {"x": np.array([0.0])})
    np.testing.assert_array_equal(p["x"], before)
    np.testing.assert_allclose(opt.sq_grad["x"], 0.95 * eg)
    np.testing.assert_allclose(opt.sq_delta["x"], 0.95 * ed)


def test_adadelta_lr_scale_is_linear():
    moves = []
    for lr in (0.1, 0.001):
        p = {"x": np.array([0.0])}
        nn.Adadelta(lr_scale=lr).step(p, {"x": np.array([1.0])})
        moves.append(p["x"][0])
    assert moves[0] / moves[1] == pytest.approx(100.0, rel=1e-12)


def test_adadelta_decreases_quadratic():
    p = {"x": np.array([3.0])}
    opt = nn.Adadelta()
    losses = []
    for _ in range(200):
        losses.append(float(p["x"][0] ** 2))
        opt.step(p, {"x": 2 * p["x"]})
    assert all(b < a for a, b in zip(losses[1:], losses[2:]))


def test_checkpoint_roundtrip(tmp_path):
    t = {"a": np.arange(6.0).reshape(2, 3), "b": np.array([1.5])}
    nn.save_checkpoint(tmp_path / "c.bin", t, {"k": 1})
    back, meta = nn.load_checkpoint(tmp_path / "c.bin")
    assert meta == {"k": 1}
    for name in t:
        np.testing.assert_array_equal(back[name], t[name])
    (tmp_path / "bad.bin").write_bytes(b"nope")
    with pytest.raises(nn.CheckpointError):
        nn.load_checkpoint(tmp_path / "bad.bin")
