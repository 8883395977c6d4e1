"""Adam and RMSprop, as in-place update rules over a network's parameters.

Both keep per-parameter moment buffers in each layer's ``opt_state``
dict, keyed by parameter name then slot name, so optimizer state rides
along with checkpoints.  The step counter ``t`` lives on the network
(``opt_t``) and is shared by every parameter, as usual.

Update rules (eps outside the square root in both):

    adam:    m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
             p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
    rmsprop: v <- rho v + (1-rho) g^2
             p -= lr * g / (sqrt(v) + eps)
"""

import numpy as np

from .ops import DTYPE


def adam_step(param, grad, state, t, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-7):
    """One Adam update, in place.  ``state`` holds slots 'm' and 'v'."""
    m = state["m"]
    v = state["v"]
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    param -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(DTYPE)


def rmsprop_step(param, grad, state, lr=1e-3, rho=0.9, eps=1e-7):
    """One RMSprop update, in place.  ``state`` holds slot 'v'."""
    v = state["v"]
    v *= rho
    v += (1.0 - rho) * grad * grad
    param -= (lr * grad / (np.sqrt(v) + eps)).astype(DTYPE)


def _check_unit_interval(name, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must be in (0, 1), got {value}")


class Adam:
    slots = ("m", "v")
    kind = "adam"

    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-7):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
        _check_unit_interval("beta1", beta1)
        _check_unit_interval("beta2", beta2)
        if epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {epsilon}")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

    def step(self, net):
        """Apply one update to every trainable parameter of ``net``."""
        net.opt_t += 1
        t = net.opt_t
        for layer in net.layers:
            if not layer.trainable:
                continue
            for name in layer.param_order():
                param = layer.params[name]
                grad = layer.grads[name]
                state = layer.opt_state.setdefault(
                    name, {s: np.zeros_like(param) for s in self.slots}
                )
                adam_step(param, grad, state, t, self.learning_rate, self.beta1, self.beta2, self.epsilon)


class Rmsprop:
    slots = ("v",)
    kind = "rmsprop"

    def __init__(self, learning_rate=1e-3, rho=0.9, epsilon=1e-7):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
        _check_unit_interval("rho", rho)
        if epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {epsilon}")
        self.learning_rate = learning_rate
        self.rho = rho
        self.epsilon = epsilon

    def step(self, net):
        net.opt_t += 1
        for layer in net.layers:
            if not layer.trainable:
                continue
            for name in layer.param_order():
                param = layer.params[name]
                grad = layer.grads[name]
                state = layer.opt_state.setdefault(
                    name, {s: np.zeros_like(param) for s in self.slots}
                )
                rmsprop_step(param, grad, state, self.learning_rate, self.rho, self.epsilon)


def make_optimizer(kind: str, **kwargs):
    if kind == "adam":
        return Adam(**kwargs)
    if kind == "rmsprop":
        return Rmsprop(**kwargs)
    raise ValueError(f"unknown optimizer kind {kind!r}")
