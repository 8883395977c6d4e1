"""Finite-difference tour of the layer zoo.

Builds each layer type, runs one analytic backward pass, and compares
against a numeric gradient of sum(out * dout).  Everything is checked in
float64 so the probe noise floor sits well below the tolerance.
"""

import numpy as np

from glyphgan import layers as L
from glyphgan.ops import finite_diff_grad, relative_error
from glyphgan.rng import Rng

SEED = 7


def probe(layer, in_shape, batch=3):
    layer.build(in_shape, Rng(SEED))
    rng = Rng(SEED + 1)
    x = rng.normal((batch,) + in_shape)
    dout = rng.normal((batch,) + layer.out_shape)
    if layer.kind == "dropout":
        layer.forward(x, rng=Rng(99))
        dx = layer.backward(dout)
        num = finite_diff_grad(
            lambda v: float((layer.forward(v, rng=Rng(99)) * dout).sum()), x
        )
    else:
        layer.forward(x)
        dx = layer.backward(dout)
        num = finite_diff_grad(lambda v: float((layer.forward(v) * dout).sum()), x)
    errs = {"x": relative_error(dx, num)}
    for name in layer.params:
        p = layer.params[name]
        def f(v, name=name, p=p):
            layer.params[name] = v
            out = float((layer.forward(x) * dout).sum())
            layer.params[name] = p
            return out
        errs[name] = relative_error(layer.grads[name], finite_diff_grad(f, p))
    return errs


def main():
    cases = [
        ("dense", L.Dense(8), (6,)),
        ("conv same", L.Conv2D(4, (3, 3), "same"), (6, 6, 2)),
        ("conv valid", L.Conv2D(3, (3, 3), "valid"), (7, 7, 1)),
        ("batchnorm", L.BatchNorm(momentum=0.8), (10,)),
        ("dropout 0.25", L.Dropout(0.25), (12,)),
        ("relu", L.Activation("relu"), (9,)),
        ("leaky relu", L.Activation("leaky_relu", 0.2), (9,)),
        ("tanh", L.Activation("tanh"), (9,)),
        ("sigmoid", L.Activation("sigmoid"), (9,)),
        ("softmax", L.Activation("softmax"), (9,)),
        ("flatten", L.Flatten(), (4, 5)),
        ("reshape", L.Reshape((2, 6)), (12,)),
    ]
    worst = 0.0
    for label, layer, shape in cases:
        errs = probe(layer, shape)
        worst = max(worst, *errs.values())
        joined = "  ".join(f"{k}={v:.2e}" for k, v in errs.items())
        print(f"{label:12s} {joined}")

    # maxpool needs distinct window entries or the numeric probe tie-breaks
    pool = L.MaxPool2D((2, 2), (2, 2))
    pool.build((4, 4, 2), Rng(SEED))
    x = (Rng(SEED).permutation(2 * 32).astype(np.float64) * 0.1).reshape(2, 4, 4, 2)
    dout = Rng(SEED + 1).normal((2,) + pool.out_shape)
    pool.forward(x)
    err = relative_error(
        pool.backward(dout),
        finite_diff_grad(lambda v: float((pool.forward(v) * dout).sum()), x),
    )
    worst = max(worst, err)
    print(f"{'maxpool':12s} x={err:.2e}")
    print(f"\nworst relative error: {worst:.2e} (tolerance 1e-3)")


if __name__ == "__main__":
    main()
