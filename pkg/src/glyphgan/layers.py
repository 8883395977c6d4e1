"""Neural-network layers with hand-written forward and backward passes.

Each layer owns its parameters, the matching gradient buffers, and any
non-trained state (batchnorm running statistics).  ``build`` fixes the
input shape (batch dimension excluded), allocates parameters, and
returns the output shape, so a whole network's shape chain is validated
at construction time.  ``forward`` caches whatever ``backward`` needs.

Weight initialisation is scaled-uniform: U(-L, L) with
L = sqrt(6 / (fan_in + fan_out)).
"""

import numpy as np

from . import ops
from .errors import ShapeError
from .ops import DTYPE
from .rng import Rng

ACTIVATION_KINDS = ("relu", "leaky_relu", "tanh", "sigmoid", "softmax")


def _fan_uniform(rng: Rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return (rng.uniform(shape) * 2.0 * limit - limit).astype(DTYPE)


class Layer:
    """Base class; subclasses fill params/grads/state as needed."""

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.state = {}
        self.opt_state = {}
        self.trainable = True
        self.in_shape = None
        self.out_shape = None
        self._cache = None

    def build(self, in_shape, rng: Rng):
        self.in_shape = tuple(in_shape)
        self.out_shape = self.in_shape
        return self.out_shape

    def forward(self, x, mode="infer", rng=None):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def get_config(self) -> dict:
        return {"kind": self.kind}

    def param_order(self):
        """Parameter names in declaration order (serialization contract)."""
        return []

    def state_order(self):
        return []


class Dense(Layer):
    """Fully connected layer: y = x @ w + b."""

    kind = "dense"

    def __init__(self, units: int):
        super().__init__()
        if units < 1:
            raise ValueError(f"units must be >= 1, got {units}")
        self.units = units

    def build(self, in_shape, rng):
        if len(in_shape) != 1:
            raise ShapeError(f"dense layer needs flat input, got shape {in_shape}")
        self.in_shape = tuple(in_shape)
        n_in = in_shape[0]
        self.params["w"] = _fan_uniform(rng, (n_in, self.units), n_in, self.units)
        self.params["b"] = np.zeros(self.units, dtype=DTYPE)
        self.out_shape = (self.units,)
        return self.out_shape

    def forward(self, x, mode="infer", rng=None):
        if x.ndim != 2 or x.shape[1] != self.in_shape[0]:
            raise ShapeError(
                f"dense layer built for width {self.in_shape[0]}, got input {x.shape}"
            )
        self._cache = x
        return ops.matmul(x, self.params["w"]) + self.params["b"]

    def backward(self, dout):
        x = self._cache
        self.grads["w"] = ops.matmul(x.T, dout)
        self.grads["b"] = dout.sum(axis=0)
        return ops.matmul(dout, self.params["w"].T)

    def get_config(self):
        return {"kind": self.kind, "units": self.units}

    def param_order(self):
        return ["w", "b"]


class Conv2D(Layer):
    """2-D convolution (cross-correlation) over NHWC input, with bias."""

    kind = "conv2d"

    def __init__(self, filters: int, kernel_size, padding="same", strides=(1, 1)):
        super().__init__()
        self.filters = filters
        self.kernel_size = tuple(kernel_size) if not isinstance(kernel_size, int) else (kernel_size, kernel_size)
        self.padding = padding
        self.strides = tuple(strides)
        if padding not in ("same", "valid"):
            raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")

    def build(self, in_shape, rng):
        if len(in_shape) != 3:
            raise ShapeError(f"conv2d needs (h, w, c) input, got shape {in_shape}")
        self.in_shape = tuple(in_shape)
        h, w, cin = in_shape
        kh, kw = self.kernel_size
        fan_in = kh * kw * cin
        fan_out = kh * kw * self.filters
        self.params["w"] = _fan_uniform(rng, (kh, kw, cin, self.filters), fan_in, fan_out)
        self.params["b"] = np.zeros(self.filters, dtype=DTYPE)
        probe, _ = ops.conv2d_forward(
            np.zeros((1,) + self.in_shape, dtype=DTYPE), self.params["w"], self.padding, self.strides
        )
        self.out_shape = probe.shape[1:]
        return self.out_shape

    def forward(self, x, mode="infer", rng=None):
        out, cache = ops.conv2d_forward(x, self.params["w"], self.padding, self.strides)
        self._cache = cache
        return out + self.params["b"]

    def backward(self, dout):
        dx, dw = ops.conv2d_backward(dout, self._cache)
        self.grads["w"] = dw
        self.grads["b"] = dout.sum(axis=(0, 1, 2))
        return dx

    def get_config(self):
        return {
            "kind": self.kind,
            "filters": self.filters,
            "kernel_size": list(self.kernel_size),
            "padding": self.padding,
            "strides": list(self.strides),
        }

    def param_order(self):
        return ["w", "b"]


class MaxPool2D(Layer):
    kind = "maxpool"

    def __init__(self, size=(2, 2), strides=(2, 2)):
        super().__init__()
        self.size = tuple(size)
        self.strides = tuple(strides)

    def build(self, in_shape, rng):
        if len(in_shape) != 3:
            raise ShapeError(f"maxpool needs (h, w, c) input, got shape {in_shape}")
        self.in_shape = tuple(in_shape)
        h, w, c = in_shape
        ph, pw = self.size
        if ph > h or pw > w:
            raise ShapeError(f"pool window {self.size} exceeds input spatial dims {(h, w)}")
        oh = (h - ph) // self.strides[0] + 1
        ow = (w - pw) // self.strides[1] + 1
        self.out_shape = (oh, ow, c)
        return self.out_shape

    def forward(self, x, mode="infer", rng=None):
        out, argmax = ops.maxpool2d(x, self.size, self.strides)
        self._cache = (argmax, x.shape)
        return out

    def backward(self, dout):
        argmax, in_shape = self._cache
        return ops.maxpool2d_backward(dout, argmax, in_shape, self.size, self.strides)

    def get_config(self):
        return {"kind": self.kind, "size": list(self.size), "strides": list(self.strides)}


class Flatten(Layer):
    kind = "flatten"

    def build(self, in_shape, rng):
        self.in_shape = tuple(in_shape)
        self.out_shape = (int(np.prod(in_shape)),)
        return self.out_shape

    def forward(self, x, mode="infer", rng=None):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._cache)


class Reshape(Layer):
    """Inverse of Flatten: (b, n) -> (b, *target_shape)."""

    kind = "reshape"

    def __init__(self, target_shape):
        super().__init__()
        self.target_shape = tuple(target_shape)

    def build(self, in_shape, rng):
        self.in_shape = tuple(in_shape)
        if int(np.prod(in_shape)) != int(np.prod(self.target_shape)):
            raise ShapeError(f"cannot reshape {in_shape} into {self.target_shape}")
        self.out_shape = self.target_shape
        return self.out_shape

    def forward(self, x, mode="infer", rng=None):
        self._cache = x.shape
        return x.reshape((x.shape[0],) + self.target_shape)

    def backward(self, dout):
        return dout.reshape(self._cache)

    def get_config(self):
        return {"kind": self.kind, "target_shape": list(self.target_shape)}


class BatchNorm(Layer):
    """Batch normalisation over all axes except the last (features).

    Train mode normalises by the batch statistics and updates the running
    ones as  running <- momentum * running + (1 - momentum) * batch;
    infer mode normalises by the running statistics.
    """

    kind = "batchnorm"

    def __init__(self, momentum=0.8, eps=1e-5):
        super().__init__()
        if not 0.0 < momentum < 1.0:
            raise ValueError(f"momentum must be in (0, 1), got {momentum}")
        self.momentum = momentum
        self.eps = eps

    def build(self, in_shape, rng):
        self.in_shape = tuple(in_shape)
        self.out_shape = self.in_shape
        nf = in_shape[-1]
        self.params["gamma"] = np.ones(nf, dtype=DTYPE)
        self.params["beta"] = np.zeros(nf, dtype=DTYPE)
        self.state["running_mean"] = np.zeros(nf, dtype=DTYPE)
        self.state["running_var"] = np.ones(nf, dtype=DTYPE)
        return self.out_shape

    def forward(self, x, mode="infer", rng=None):
        axes = tuple(range(x.ndim - 1))
        if mode == "train":
            if x.shape[0] < 2:
                raise ShapeError(f"degenerate batch of size {x.shape[0]} in train mode")
            mu = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = DTYPE(self.momentum)
            self.state["running_mean"] = (m * self.state["running_mean"] + (1 - m) * mu).astype(DTYPE)
            self.state["running_var"] = (m * self.state["running_var"] + (1 - m) * var).astype(DTYPE)
        else:
            mu = self.state["running_mean"]
            var = self.state["running_var"]
        inv_std = 1.0 / np.sqrt(var + DTYPE(self.eps))
        xhat = (x - mu) * inv_std
        self._cache = (xhat, inv_std, axes, mode)
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, dout):
        xhat, inv_std, axes, mode = self._cache
        self.grads["gamma"] = (dout * xhat).sum(axis=axes)
        self.grads["beta"] = dout.sum(axis=axes)
        dxhat = dout * self.params["gamma"]
        if mode != "train":
            return dxhat * inv_std
        n = DTYPE(np.prod([xhat.shape[a] for a in axes]))
        return (inv_std / n) * (
            n * dxhat
            - dxhat.sum(axis=axes, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
        )

    def get_config(self):
        return {"kind": self.kind, "momentum": self.momentum, "eps": self.eps}

    def param_order(self):
        return ["gamma", "beta"]

    def state_order(self):
        return ["running_mean", "running_var"]


class Dropout(Layer):
    """Inverted dropout: train mode zeroes with probability ``rate`` and
    scales survivors by 1/(1-rate); infer mode is the identity."""

    kind = "dropout"

    def __init__(self, rate: float):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, mode="infer", rng=None):
        if mode != "train" or self.rate == 0.0:
            self._cache = None
            return x
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        keep = (rng.uniform(x.shape) >= self.rate).astype(DTYPE)
        mask = keep / DTYPE(1.0 - self.rate)
        self._cache = mask
        return x * mask

    def backward(self, dout):
        if self._cache is None:
            return dout
        return dout * self._cache

    def get_config(self):
        return {"kind": self.kind, "rate": self.rate}


class Activation(Layer):
    """Elementwise activation; softmax acts over the last axis."""

    kind = "activation"

    def __init__(self, fn: str, alpha: float = 0.2):
        super().__init__()
        if fn not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {fn!r}")
        if fn == "leaky_relu" and alpha <= 0:
            raise ValueError(f"leaky_relu alpha must be > 0, got {alpha}")
        self.fn = fn
        self.alpha = alpha

    def forward(self, x, mode="infer", rng=None):
        out = apply_activation(self.fn, x, self.alpha)
        self._cache = x if self.fn in ("relu", "leaky_relu") else out
        return out

    def backward(self, dout):
        c = self._cache
        if self.fn == "relu":
            return dout * (c > 0)
        if self.fn == "leaky_relu":
            return dout * np.where(c >= 0, DTYPE(1.0), DTYPE(self.alpha))
        if self.fn == "tanh":
            return dout * (1.0 - c * c)
        if self.fn == "sigmoid":
            return dout * c * (1.0 - c)
        # softmax jacobian-vector product, row-wise
        s = c
        return s * (dout - (dout * s).sum(axis=-1, keepdims=True))

    def get_config(self):
        cfg = {"kind": self.kind, "fn": self.fn}
        if self.fn == "leaky_relu":
            cfg["alpha"] = self.alpha
        return cfg


def apply_activation(fn: str, x, alpha: float = 0.2):
    """Standalone activation application, preserving the input dtype
    (float32 in networks, float64 under the finite-difference probes)."""
    x = np.asarray(x)
    if fn == "relu":
        return np.maximum(x, 0)
    if fn == "leaky_relu":
        return np.where(x >= 0, x, alpha * x)
    if fn == "tanh":
        return np.tanh(x)
    if fn == "sigmoid":
        # split by sign so exp never overflows
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out
    if fn == "softmax":
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)
    raise ValueError(f"unknown activation {fn!r}")


_LAYER_CLASSES = {
    cls.kind: cls for cls in (Dense, Conv2D, MaxPool2D, Flatten, Reshape, BatchNorm, Dropout, Activation)
}


def layer_from_config(cfg: dict) -> Layer:
    """Rebuild a layer from its ``get_config`` dict."""
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    try:
        cls = _LAYER_CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown layer kind {kind!r}") from None
    if kind == "conv2d":
        return cls(cfg["filters"], tuple(cfg["kernel_size"]), cfg["padding"], tuple(cfg["strides"]))
    if kind == "maxpool":
        return cls(tuple(cfg["size"]), tuple(cfg["strides"]))
    if kind == "reshape":
        return cls(tuple(cfg["target_shape"]))
    if kind == "activation":
        return cls(cfg["fn"], cfg.get("alpha", 0.2))
    return cls(**cfg)
