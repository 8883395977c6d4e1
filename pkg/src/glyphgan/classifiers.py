"""The three judge classifiers and their training/evaluation harness.

c1 is a small dense net (two hidden layers of 128), c2 a three-block
convnet (64@5x5 same, 32@3x3 valid, 16@3x3 same, each with BatchNorm,
ReLU, 2x2 max-pool and dropout 0.25, then dense 128/32 heads), c3 the
same topology with filters 32/64/32, dense 256/64 and BatchNorm after
every dense layer except the output.  c1 trains with sparse categorical
cross-entropy and Adam, c2 with categorical cross-entropy and Adam, c3
with categorical cross-entropy and RMSprop.

Training shuffles per epoch, reports Keras-style running train metrics
plus full validation metrics per epoch, and returns the parameters from
the best-validation-accuracy epoch.
"""

import csv
import dataclasses

import numpy as np

from . import checkpoint as ckpt_io
from . import layers as L
from . import losses
from .data import LabeledDataset, batches
from .errors import DataError, NumericError
from .network import Network
from .optim import Adam, Rmsprop
from .rng import Rng

CLASSIFIER_IDS = ("c1", "c2", "c3")

IMAGE_SHAPE = (32, 32, 1)


def _conv_block(filters, kernel, padding, drop_rate):
    return [
        L.Conv2D(filters, kernel, padding),
        L.BatchNorm(momentum=0.8),
        L.Activation("relu"),
        L.MaxPool2D((2, 2), (2, 2)),
        L.Dropout(drop_rate),
    ]


def _dense_head(widths, drop_rates, batchnorm):
    stack = []
    for width, rate in zip(widths, drop_rates):
        stack.append(L.Dense(width))
        if batchnorm:
            stack.append(L.BatchNorm(momentum=0.8))
        stack.append(L.Activation("relu"))
        stack.append(L.Dropout(rate))
    return stack


def build_classifier(classifier_id, num_classes, seed=0) -> Network:
    """Construct one of the three architectures, named by its id."""
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if classifier_id == "c1":
        stack = [
            L.Flatten(),
            L.Dense(128),
            L.Activation("relu"),
            L.Dense(128),
            L.Activation("relu"),
            L.Dense(num_classes),
            L.Activation("softmax"),
        ]
        loss = "sparse_categorical_ce"
    elif classifier_id == "c2":
        stack = (
            _conv_block(64, (5, 5), "same", 0.25)
            + _conv_block(32, (3, 3), "valid", 0.25)
            + _conv_block(16, (3, 3), "same", 0.25)
            + [L.Flatten()]
            + _dense_head((128, 32), (0.25, 0.5), batchnorm=False)
            + [L.Dense(num_classes), L.Activation("softmax")]
        )
        loss = "categorical_ce"
    elif classifier_id == "c3":
        stack = (
            _conv_block(32, (5, 5), "same", 0.25)
            + _conv_block(64, (3, 3), "valid", 0.25)
            + _conv_block(32, (3, 3), "same", 0.25)
            + [L.Flatten()]
            + _dense_head((256, 64), (0.25, 0.5), batchnorm=True)
            + [L.Dense(num_classes), L.Activation("softmax")]
        )
        loss = "categorical_ce"
    else:
        raise ValueError(f"unknown classifier id {classifier_id!r}")
    return Network(stack, input_shape=IMAGE_SHAPE, seed=seed, loss=loss, name=classifier_id)


def make_optimizer_for(classifier_id):
    if classifier_id in ("c1", "c2"):
        return Adam()
    if classifier_id == "c3":
        return Rmsprop()
    raise ValueError(f"unknown classifier id {classifier_id!r}")


@dataclasses.dataclass
class EpochRow:
    epoch: int
    loss: float
    accuracy: float
    val_loss: float
    val_accuracy: float


@dataclasses.dataclass
class TrainReport:
    classifier_id: str
    rows: list

    def best_epoch(self) -> int:
        """Epoch with the highest val accuracy (earliest on ties)."""
        best = max(self.rows, key=lambda r: (r.val_accuracy, -r.epoch))
        return best.epoch

    def final_row(self) -> EpochRow:
        return self.rows[-1]

    def best_row(self) -> EpochRow:
        return self.rows[self.best_epoch() - 1]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss", "accuracy", "val_loss", "val_accuracy"])
            for r in self.rows:
                writer.writerow(
                    [r.epoch]
                    + [f"{v:.4f}" for v in (r.loss, r.accuracy, r.val_loss, r.val_accuracy)]
                )


def _targets_for(net, labels):
    if net.loss == "sparse_categorical_ce":
        return labels
    return losses.to_onehot(labels, net.output_shape[-1])


def evaluate(net: Network, ds: LabeledDataset, batch_size=256):
    """(loss, accuracy) on a dataset, infer mode, chunked.

    Loss is the network's training loss kind, averaged per sample with
    float64 accumulation, so the result does not depend on chunking.
    """
    width = net.output_shape[-1]
    if ds.labels.size and ds.labels.max() >= width:
        raise DataError(
            f"classifier {net.name!r} has {width} outputs but dataset holds label {ds.labels.max()}"
        )
    total_loss = 0.0
    correct = 0
    for start in range(0, ds.n, batch_size):
        x = ds.images[start : start + batch_size]
        y = ds.labels[start : start + batch_size]
        preds = net.forward(x, mode="infer")
        value, _ = losses.loss(net.loss, preds, _targets_for(net, y))
        total_loss += value * x.shape[0]
        correct += int((preds.argmax(axis=1) == y).sum())
    return total_loss / ds.n, correct / ds.n


def train_classifier(
    classifier_id, train_ds: LabeledDataset, val_ds: LabeledDataset, epochs=30, batch_size=64, seed=42
):
    """Train one classifier; returns (best-val network, TrainReport)."""
    if train_ds.norm != "unit" or val_ds.norm != "unit":
        raise DataError("classifier training expects unit normalization")
    if classifier_id not in CLASSIFIER_IDS:
        raise ValueError(f"unknown classifier id {classifier_id!r}")
    num_classes = train_ds.num_classes
    net = build_classifier(classifier_id, num_classes, seed=Rng(seed).derive("init", classifier_id).seed)
    opt = make_optimizer_for(classifier_id)
    rows = []
    best_acc = -1.0
    best_blob = None
    for epoch in range(1, epochs + 1):
        shuffle_rng = Rng(seed).derive("shuffle", classifier_id, epoch)
        loss_sum = 0.0
        correct = 0
        seen = 0
        for b_idx, (x, y) in enumerate(batches(train_ds, batch_size, shuffle_rng)):
            if x.shape[0] < 2:
                continue  # a 1-sample tail batch cannot feed train-mode batchnorm
            drop_rng = Rng(seed).derive("dropout", classifier_id, epoch, b_idx)
            preds = net.forward(x, mode="train", rng=drop_rng)
            value = net.loss_and_backward(preds, _targets_for(net, y))
            if not np.isfinite(value):
                raise NumericError(
                    f"non-finite loss for {classifier_id} in epoch {epoch}",
                    report=TrainReport(classifier_id, rows),
                )
            opt.step(net)
            loss_sum += value * x.shape[0]
            correct += int((preds.argmax(axis=1) == y).sum())
            seen += x.shape[0]
        val_loss, val_acc = evaluate(net, val_ds)
        rows.append(EpochRow(epoch, loss_sum / seen, correct / seen, val_loss, val_acc))
        if val_acc > best_acc:
            best_acc = val_acc
            best_blob = ckpt_io.serialize_networks([net])
    report = TrainReport(classifier_id, rows)
    best_net = next(iter(ckpt_io.deserialize_networks(best_blob)[0].values()))
    return best_net, report
