"""The three judge architectures, their training loop, and evaluate()."""

import math

import numpy as np
import pytest

from glyphgan import layers as L
from glyphgan.classifiers import (
    TrainReport,
    EpochRow,
    build_classifier,
    evaluate,
    make_optimizer_for,
    train_classifier,
)
from glyphgan.data import LabeledDataset, from_arrays
from glyphgan.errors import DataError
from glyphgan.network import Network
from glyphgan.optim import Adam, Rmsprop
from glyphgan.rng import Rng


# ----------------------------------------------------------- topologies

def test_c1_topology():
    net = build_classifier("c1", 10)
    assert net.loss == "sparse_categorical_ce"
    assert net.output_shape == (10,)
    widths = [l.units for l in net.layers if isinstance(l, L.Dense)]
    assert widths == [128, 128, 10]
    assert not any(isinstance(l, L.Conv2D) for l in net.layers)


def test_c2_shape_trace():
    """32 -(5x5 same, pool)-> 16 -(3x3 valid, pool)-> 7 -(3x3 same, pool)-> 3."""
    net = build_classifier("c2", 10)
    assert net.loss == "categorical_ce"
    convs = [l for l in net.layers if isinstance(l, L.Conv2D)]
    pools = [l for l in net.layers if isinstance(l, L.MaxPool2D)]
    assert [c.filters for c in convs] == [64, 32, 16]
    assert convs[0].out_shape == (32, 32, 64)
    assert pools[0].out_shape == (16, 16, 64)
    assert convs[1].out_shape == (14, 14, 32)
    assert pools[1].out_shape == (7, 7, 32)
    assert convs[2].out_shape == (7, 7, 16)
    assert pools[2].out_shape == (3, 3, 16)
    widths = [l.units for l in net.layers if isinstance(l, L.Dense)]
    assert widths == [128, 32, 10]


def test_c3_topology():
    net = build_classifier("c3", 10)
    assert net.loss == "categorical_ce"
    convs = [l for l in net.layers if isinstance(l, L.Conv2D)]
    assert [c.filters for c in convs] == [32, 64, 32]
    widths = [l.units for l in net.layers if isinstance(l, L.Dense)]
    assert widths == [256, 64, 10]
    # batchnorm follows each hidden dense layer but not the output
    kinds = [l.kind for l in net.layers]
    i256 = next(i for i, l in enumerate(net.layers) if isinstance(l, L.Dense) and l.units == 256)
    i64 = next(i for i, l in enumerate(net.layers) if isinstance(l, L.Dense) and l.units == 64)
    iout = next(i for i, l in enumerate(net.layers) if isinstance(l, L.Dense) and l.units == 10)
    assert kinds[i256 + 1] == kinds[i64 + 1] == "batchnorm"
    assert kinds[iout + 1] == "activation"


def test_builder_validation():
    with pytest.raises(ValueError):
        build_classifier("c4", 10)
    with pytest.raises(ValueError):
        build_classifier("c1", 1)


def test_optimizer_assignment():
    assert isinstance(make_optimizer_for("c1"), Adam)
    assert isinstance(make_optimizer_for("c2"), Adam)
    assert isinstance(make_optimizer_for("c3"), Rmsprop)
    with pytest.raises(ValueError):
        make_optimizer_for("cx")


# ------------------------------------------------------------- evaluate

def _const_net(preds_row):
    """A fake 'network' via a real one-layer net is overkill; evaluate
    only needs forward/loss/output_shape/name, so build the tiniest
    real net and overwrite its weights to produce fixed logits."""
    k = len(preds_row)
    net = Network([L.Dense(k), L.Activation("softmax")], (4,), seed=0,
                  loss="sparse_categorical_ce", name="const")
    net.layers[0].params["w"][:] = 0.0
    net.layers[0].params["b"][:] = np.log(np.asarray(preds_row, dtype=np.float64)).astype(np.float32)
    return net


def _flat_ds(n, k, seed=0):
    rng = Rng(seed)
    images = rng.normal((n, 4)).astype(np.float32)
    labels = rng.integers(n, k)
    ds = LabeledDataset(images, labels, [f"c{i}" for i in range(k)], "unit")
    return ds


def test_evaluate_perfect_predictions():
    net = _const_net([0.9999999, 1e-7, 1e-7])
    ds = _flat_ds(6, 3)
    ds.labels[:] = 0
    loss, acc = evaluate(net, ds)
    assert acc == 1.0
    assert loss < 1e-4


def test_evaluate_uniform_predictions_score_log_k():
    net = _const_net([0.1] * 10)
    ds = _flat_ds(30, 10, seed=1)
    loss, acc = evaluate(net, ds)
    assert abs(loss - math.log(10)) < 1e-5
    # argmax of a flat row is index 0
    assert acc == float((ds.labels == 0).mean())


def test_evaluate_batch_size_invariance():
    ds = _toy_glyphs(40, seed=2)
    net, _ = train_classifier("c1", ds, ds, epochs=1, batch_size=16, seed=0)
    l1, a1 = evaluate(net, ds, batch_size=7)
    l2, a2 = evaluate(net, ds, batch_size=40)
    assert a1 == a2
    assert abs(l1 - l2) < 1e-6


def test_evaluate_width_mismatch_names_classifier():
    net = build_classifier("c1", 3, seed=0)
    ds = _flat_ds(4, 5, seed=3)
    ds.images = Rng(0).normal((4, 32, 32, 1)).astype(np.float32)
    ds.labels = np.array([0, 1, 2, 4])
    with pytest.raises(DataError, match="c1"):
        evaluate(net, ds)


# ------------------------------------------------------------- training

def _toy_glyphs(n_per_class, seed=0):
    """Two linearly separable 32x32 patterns with slight noise."""
    rng = Rng(seed)
    base0 = np.zeros((32, 32), dtype=np.float64)
    base0[:16] = 0.9
    base1 = np.zeros((32, 32), dtype=np.float64)
    base1[16:] = 0.9
    stack = []
    labels = []
    for label, base in ((0, base0), (1, base1)):
        for _ in range(n_per_class):
            img = np.clip(base + rng.normal((32, 32)) * 0.05, 0, 1)
            stack.append((img * 255).astype(np.uint8))
            labels.append(label)
    return from_arrays(np.stack(stack), labels, ["bottom", "top"], "unit")


def test_c1_solves_separable_toy_set():
    train = _toy_glyphs(20, seed=4)
    val = _toy_glyphs(8, seed=5)
    net, report = train_classifier("c1", train, val, epochs=5, batch_size=8, seed=1)
    assert report.rows[-1].accuracy == 1.0
    _, val_acc = evaluate(net, val)
    assert val_acc == 1.0


def test_train_report_is_deterministic():
    train = _toy_glyphs(10, seed=6)
    val = _toy_glyphs(4, seed=7)
    _, r1 = train_classifier("c1", train, val, epochs=3, batch_size=8, seed=2)
    _, r2 = train_classifier("c1", train, val, epochs=3, batch_size=8, seed=2)
    assert r1.rows == r2.rows
    _, r3 = train_classifier("c1", train, val, epochs=3, batch_size=8, seed=3)
    assert r1.rows != r3.rows


def test_returned_network_is_best_epoch_snapshot():
    """The returned parameters come from the epoch best_epoch() names,
    not necessarily the last one."""
    train = _toy_glyphs(12, seed=8)
    val = _toy_glyphs(6, seed=9)
    net, report = train_classifier("c1", train, val, epochs=4, batch_size=8, seed=4)
    best = report.best_row()
    got_loss, got_acc = evaluate(net, val)
    assert got_acc == best.val_accuracy
    assert abs(got_loss - best.val_loss) < 1e-6


def test_train_rejects_symmetric_norm():
    ds = _toy_glyphs(4)
    bad = LabeledDataset(ds.images * 2 - 1, ds.labels, ds.class_names, "symmetric")
    with pytest.raises(DataError, match="unit"):
        train_classifier("c1", bad, ds, epochs=1)


def test_train_rejects_unknown_id():
    ds = _toy_glyphs(4)
    with pytest.raises(ValueError):
        train_classifier("c9", ds, ds, epochs=1)


def test_tail_batch_of_one_is_skipped_not_fatal():
    # 17 samples, batch 8 -> tail of 1; c3 has batchnorm and would die on it
    train = _toy_glyphs(10, seed=10)
    sel = np.arange(17)
    train = LabeledDataset(train.images[sel], train.labels[sel], train.class_names, "unit")
    val = _toy_glyphs(3, seed=11)
    _, report = train_classifier("c3", train, val, epochs=1, batch_size=8, seed=5)
    assert len(report.rows) == 1
    assert np.isfinite(report.rows[0].loss)


# --------------------------------------------------------------- report

def test_report_best_epoch_tie_breaks_early():
    rows = [
        EpochRow(1, 1.0, 0.5, 1.0, 0.80),
        EpochRow(2, 0.9, 0.6, 0.9, 0.90),
        EpochRow(3, 0.8, 0.7, 0.8, 0.90),
    ]
    report = TrainReport("c1", rows)
    assert report.best_epoch() == 2
    assert report.best_row() is rows[1]
    assert report.final_row() is rows[2]


def test_report_csv_format(tmp_path):
    rows = [EpochRow(1, 1.23456, 0.5, 2.34567, 0.25)]
    path = tmp_path / "r.csv"
    TrainReport("c1", rows).to_csv(path)
    text = path.read_text().strip().splitlines()
    assert text[0] == "epoch,loss,accuracy,val_loss,val_accuracy"
    assert text[1] == "1,1.2346,0.5000,2.3457,0.2500"
