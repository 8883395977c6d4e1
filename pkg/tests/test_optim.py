"""Optimizer update rules against reference implementations, state
persistence across steps, and the trainable flag."""

import numpy as np
import pytest

from glyphgan import layers as L
from glyphgan.network import Network
from glyphgan.optim import Adam, Rmsprop, adam_step, make_optimizer, rmsprop_step
from glyphgan.rng import Rng


def test_rmsprop_first_step_formula():
    # fresh state: v = 0.1 * g^2, update = lr * g / (sqrt(v) + eps)
    param = np.array([1.0], dtype=np.float32)
    grad = np.array([1.0], dtype=np.float32)
    state = {"v": np.zeros(1, dtype=np.float32)}
    rmsprop_step(param, grad, state, lr=1e-3, rho=0.9, eps=1e-7)
    want = 1.0 - 1e-3 * 1.0 / (np.sqrt(0.1) + 1e-7)
    assert abs(param[0] - want) < 1e-7
    assert abs(state["v"][0] - 0.1) < 1e-8


def test_adam_first_step_is_roughly_lr():
    # bias correction makes mhat = g, vhat = g^2, so step ~ lr for any g
    for g in (0.001, 1.0, 500.0):
        param = np.array([0.0], dtype=np.float32)
        state = {"m": np.zeros(1, dtype=np.float32), "v": np.zeros(1, dtype=np.float32)}
        adam_step(param, np.array([g], dtype=np.float32), state, t=1, lr=1e-3)
        assert abs(-param[0] - 1e-3) < 1e-6


@pytest.mark.parametrize("seed", [0, 1])
def test_adam_matches_float64_reference(seed):
    rng = Rng(seed)
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-7
    param = rng.normal((5,)).astype(np.float32)
    ref = param.astype(np.float64)
    m = np.zeros(5)
    v = np.zeros(5)
    state = {"m": np.zeros(5, dtype=np.float32), "v": np.zeros(5, dtype=np.float32)}
    for t in range(1, 21):
        g = rng.normal((5,)).astype(np.float32)
        adam_step(param, g, state, t, lr, b1, b2, eps)
        g64 = g.astype(np.float64)
        m = b1 * m + (1 - b1) * g64
        v = b2 * v + (1 - b2) * g64 * g64
        ref -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    assert np.max(np.abs(param - ref)) < 1e-5


@pytest.mark.parametrize("seed", [0, 1])
def test_rmsprop_matches_float64_reference(seed):
    rng = Rng(seed)
    lr, rho, eps = 1e-3, 0.9, 1e-7
    param = rng.normal((5,)).astype(np.float32)
    ref = param.astype(np.float64)
    v = np.zeros(5)
    state = {"v": np.zeros(5, dtype=np.float32)}
    for _ in range(20):
        g = rng.normal((5,)).astype(np.float32)
        rmsprop_step(param, g, state, lr, rho, eps)
        g64 = g.astype(np.float64)
        v = rho * v + (1 - rho) * g64 * g64
        ref -= lr * g64 / (np.sqrt(v) + eps)
    assert np.max(np.abs(param - ref)) < 1e-5


def _tiny_net(seed=0):
    net = Network([L.Dense(3), L.Activation("softmax")], (4,), seed=seed,
                  loss="sparse_categorical_ce")
    return net


def test_step_counter_and_state_allocation():
    net = _tiny_net()
    opt = Adam()
    x = Rng(1).normal((6, 4)).astype(np.float32)
    y = Rng(2).integers(6, 3)
    assert net.opt_t == 0
    net.train_step(x, y, opt)
    assert net.opt_t == 1
    dense = net.layers[0]
    assert set(dense.opt_state) == {"w", "b"}
    assert set(dense.opt_state["w"]) == {"m", "v"}
    assert dense.opt_state["w"]["m"].shape == dense.params["w"].shape
    net.train_step(x, y, opt)
    assert net.opt_t == 2


def test_state_persists_across_steps():
    """Two steps with the optimizer must differ from two independent
    first steps: the moment buffers have to carry over."""
    net_a = _tiny_net()
    net_b = _tiny_net()
    opt = Adam(learning_rate=0.05)
    x = Rng(1).normal((6, 4)).astype(np.float32)
    y = Rng(2).integers(6, 3)

    net_a.train_step(x, y, opt)
    w_after_one = net_a.layers[0].params["w"].copy()
    net_a.train_step(x, y, opt)

    # replay on net_b but wipe state between steps
    opt_b = Adam(learning_rate=0.05)
    net_b.train_step(x, y, opt_b)
    np.testing.assert_array_equal(net_b.layers[0].params["w"], w_after_one)
    net_b.layers[0].opt_state.clear()
    net_b.opt_t = 0
    net_b.train_step(x, y, opt_b)

    assert not np.array_equal(net_a.layers[0].params["w"], net_b.layers[0].params["w"])


def test_frozen_layers_are_skipped():
    net = _tiny_net()
    before = {k: v.copy() for k, v in net.layers[0].params.items()}
    net.set_trainable(False)
    x = Rng(1).normal((6, 4)).astype(np.float32)
    y = Rng(2).integers(6, 3)
    net.train_step(x, y, Adam(learning_rate=0.5))
    for k in before:
        np.testing.assert_array_equal(net.layers[0].params[k], before[k])
    assert net.layers[0].opt_state == {}


def test_optimizer_lowers_loss_on_quadratic_task():
    net = _tiny_net(seed=3)
    opt = Rmsprop(learning_rate=0.01)
    x = Rng(4).normal((32, 4)).astype(np.float32)
    y = (x[:, 0] > 0).astype(np.int64)
    first = net.train_step(x, y, opt)
    for _ in range(60):
        last = net.train_step(x, y, opt)
    assert last < first * 0.5


def test_constructor_validation():
    with pytest.raises(ValueError):
        Adam(learning_rate=0)
    with pytest.raises(ValueError):
        Adam(beta1=1.0)
    with pytest.raises(ValueError):
        Adam(beta2=-0.1)
    with pytest.raises(ValueError):
        Rmsprop(rho=1.5)
    with pytest.raises(ValueError):
        Rmsprop(epsilon=0)


def test_make_optimizer():
    assert isinstance(make_optimizer("adam", learning_rate=2e-4), Adam)
    assert isinstance(make_optimizer("rmsprop"), Rmsprop)
    with pytest.raises(ValueError, match="unknown optimizer"):
        make_optimizer("sgd")
