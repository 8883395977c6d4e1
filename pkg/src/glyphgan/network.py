"""Sequential network container.

Layers are chained at construction time: each layer's ``build`` sees the
previous layer's output shape, so any mismatch (a dense layer after an
unflattened conv stack, a reshape with the wrong element count) fails
immediately rather than on the first batch.
"""

import numpy as np

from . import layers as L
from . import losses
from .errors import ShapeError
from .ops import DTYPE
from .rng import Rng


class Network:
    """A plain stack of layers with one loss attached.

    ``input_shape`` excludes the batch dimension.  ``seed`` drives weight
    initialisation only; dropout gets its randomness from the rng handed
    to ``forward`` per call.
    """

    def __init__(self, layer_list, input_shape, seed=0, loss=None, name="net", _init=True):
        if loss is not None and loss not in losses.LOSS_KINDS:
            raise ValueError(f"unknown loss kind {loss!r}")
        self.layers = list(layer_list)
        self.input_shape = tuple(input_shape)
        self.seed = seed
        self.loss = loss
        self.name = name
        self.opt_t = 0
        rng = Rng(seed).derive("init") if _init else Rng(0)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.build(shape, rng)
        self.output_shape = shape

    def forward(self, x, mode="infer", rng=None):
        if mode not in ("train", "infer"):
            raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
        x = np.ascontiguousarray(np.asarray(x, dtype=DTYPE))
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(
                f"network {self.name!r} expects input shape {self.input_shape}, "
                f"got {tuple(x.shape[1:])}"
            )
        for layer in self.layers:
            x = layer.forward(x, mode=mode, rng=rng)
        return x

    def backward(self, dout, skip_last=0):
        """Backpropagate ``dout`` through the stack, filling layer grads.

        ``skip_last=1`` starts below the final layer; used with fused
        loss gradients that are already w.r.t. that layer's input.
        """
        for layer in reversed(self.layers[: len(self.layers) - skip_last]):
            dout = layer.backward(dout)
        return dout

    def loss_and_backward(self, preds, targets):
        """Compute the attached loss and run the matching backward pass.

        Uses the fused softmax/sigmoid gradient when the last layer is
        the matching activation, otherwise backpropagates through it.
        Returns the scalar loss.
        """
        if self.loss is None:
            raise ValueError(f"network {self.name!r} has no loss attached")
        value, dpred = losses.loss(self.loss, preds, targets)
        last = self.layers[-1] if self.layers else None
        fused = None
        if isinstance(last, L.Activation):
            if last.fn == "softmax" and self.loss in ("categorical_ce", "sparse_categorical_ce"):
                fused = losses.softmax_ce_fused_grad(preds, targets)
            elif last.fn == "sigmoid" and self.loss == "binary_ce":
                fused = losses.sigmoid_bce_fused_grad(preds, targets)
        if fused is not None:
            self.backward(fused, skip_last=1)
        else:
            self.backward(dpred)
        return value

    def train_step(self, x, targets, optimizer, rng=None):
        """forward (train mode) -> loss -> backward -> optimizer step."""
        preds = self.forward(x, mode="train", rng=rng)
        value = self.loss_and_backward(preds, targets)
        optimizer.step(self)
        return value

    def predict(self, x, batch_size=256):
        """Inference in chunks; returns the stacked outputs."""
        x = np.asarray(x, dtype=DTYPE)
        outs = [self.forward(x[i : i + batch_size]) for i in range(0, len(x), batch_size)]
        return np.concatenate(outs, axis=0) if outs else np.empty((0,) + self.output_shape, dtype=DTYPE)

    def set_trainable(self, flag: bool):
        for layer in self.layers:
            layer.trainable = flag

    def named_arrays(self):
        """Yield (group, layer_index, name, slot, array) for every array the
        network owns, in a fixed order: per layer, params then state then
        optimizer slots (slots sorted by param name then slot name)."""
        for i, layer in enumerate(self.layers):
            for name in layer.param_order():
                yield ("params", i, name, None, layer.params[name])
            for name in layer.state_order():
                yield ("state", i, name, None, layer.state[name])
            for pname in sorted(layer.opt_state):
                for slot in sorted(layer.opt_state[pname]):
                    yield ("opt", i, pname, slot, layer.opt_state[pname][slot])

    def n_params(self):
        return sum(p.size for layer in self.layers for p in layer.params.values())

    def get_config(self):
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "seed": self.seed,
            "loss": self.loss,
            "opt_t": self.opt_t,
            "layers": [
                {"config": layer.get_config(), "trainable": layer.trainable}
                for layer in self.layers
            ],
        }

    @classmethod
    def from_config(cls, cfg):
        """Rebuild the structure; array contents must be restored separately."""
        layer_list = []
        for entry in cfg["layers"]:
            layer = L.layer_from_config(entry["config"])
            layer.trainable = bool(entry["trainable"])
            layer_list.append(layer)
        net = cls(
            layer_list,
            tuple(cfg["input_shape"]),
            seed=cfg["seed"],
            loss=cfg["loss"],
            name=cfg["name"],
            _init=False,
        )
        net.opt_t = int(cfg["opt_t"])
        return net
