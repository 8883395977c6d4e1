"""Cross-entropy losses and their gradients.

All three variants clamp probabilities to [1e-7, 1 - 1e-7] before the
log, and average over the batch.  Each function returns
``(loss, dpred)`` where ``dpred`` is the gradient with respect to the
(unclamped) prediction argument.

For networks ending in softmax or sigmoid the trainer prefers the fused
gradients below, which feed the error signal in *before* the final
activation: (probs - onehot) / b for softmax + categorical CE and
(p - t) / b for sigmoid + binary CE.  The fused form is exact and
sidesteps the clamp, so gradients stay finite even when the activation
saturates.
"""

import numpy as np

from .errors import DataError
from .ops import DTYPE

EPS = DTYPE(1e-7)

LOSS_KINDS = ("binary_ce", "categorical_ce", "sparse_categorical_ce")


def _clamp(p):
    return np.clip(p, EPS, DTYPE(1.0) - EPS)


def binary_ce(pred, target):
    """Binary cross-entropy, elementwise, averaged over all elements."""
    pred = np.asarray(pred, dtype=DTYPE)
    target = np.asarray(target, dtype=DTYPE)
    p = _clamp(pred)
    n = pred.size
    loss = float(-(target * np.log(p) + (1 - target) * np.log(1 - p)).mean())
    dpred = ((p - target) / (p * (1 - p))).astype(DTYPE) / DTYPE(n)
    return loss, dpred


def categorical_ce(probs, onehot):
    """Categorical cross-entropy against one-hot targets, batch-averaged."""
    probs = np.asarray(probs, dtype=DTYPE)
    onehot = np.asarray(onehot, dtype=DTYPE)
    if probs.shape != onehot.shape:
        raise DataError(f"probs shape {probs.shape} != target shape {onehot.shape}")
    p = _clamp(probs)
    b = probs.shape[0]
    loss = float(-(onehot * np.log(p)).sum() / b)
    dprobs = (-(onehot / p)).astype(DTYPE) / DTYPE(b)
    return loss, dprobs


def sparse_categorical_ce(probs, labels):
    """Categorical cross-entropy against integer labels, batch-averaged."""
    probs = np.asarray(probs, dtype=DTYPE)
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != probs.shape[0]:
        raise DataError(f"labels shape {labels.shape} does not match probs {probs.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise DataError(
            f"label outside [0, {probs.shape[1]}): min {labels.min()}, max {labels.max()}"
        )
    p = _clamp(probs)
    b = probs.shape[0]
    rows = np.arange(b)
    loss = float(-np.log(p[rows, labels]).sum() / b)
    dprobs = np.zeros_like(p)
    dprobs[rows, labels] = -1.0 / p[rows, labels]
    return loss, dprobs / DTYPE(b)


def to_onehot(labels, n_classes: int):
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise DataError(f"label outside [0, {n_classes})")
    out = np.zeros((labels.shape[0], n_classes), dtype=DTYPE)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def loss(kind, pred, target):
    """Dispatch on loss kind name; returns (loss, dpred)."""
    if kind == "binary_ce":
        return binary_ce(pred, target)
    if kind == "categorical_ce":
        return categorical_ce(pred, target)
    if kind == "sparse_categorical_ce":
        return sparse_categorical_ce(pred, target)
    raise ValueError(f"unknown loss kind {kind!r}")


def softmax_ce_fused_grad(probs, target):
    """Gradient w.r.t. softmax *input* for categorical CE: (p - y) / b.

    ``target`` may be one-hot (2-d) or integer labels (1-d).
    """
    probs = np.asarray(probs, dtype=DTYPE)
    if np.ndim(target) == 1:
        target = to_onehot(target, probs.shape[1])
    return (probs - np.asarray(target, dtype=DTYPE)) / DTYPE(probs.shape[0])


def sigmoid_bce_fused_grad(pred, target):
    """Gradient w.r.t. sigmoid *input* for binary CE: (p - t) / n."""
    pred = np.asarray(pred, dtype=DTYPE)
    target = np.asarray(target, dtype=DTYPE)
    return (pred - target) / DTYPE(pred.size)
