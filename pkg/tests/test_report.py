"""Metric reports: generated-dataset assembly, rendering, and the
same-latents property that isolates the cleaning effect."""

import csv
import io

import numpy as np
import pytest

from glyphgan.classifiers import train_classifier
from glyphgan.cleaning import CleaningConfig
from glyphgan.data import denormalize, from_arrays
from glyphgan.errors import DataError
from glyphgan.gan import GanCheckpoint, GanConfig, build_discriminator, build_generator
from glyphgan.report import (
    MetricsReport,
    ReportRow,
    build_generated_dataset,
    render_report,
    score_dataset,
    write_report,
)
from glyphgan.rng import Rng


def tiny_ckpt(name, seed):
    cfg = GanConfig(latent_dim=8)
    return GanCheckpoint(
        build_generator(cfg, seed), build_discriminator(cfg, seed + 1),
        iteration=0, seed=seed, class_name=name, latent_dim=8,
    )


# ------------------------------------------------- generated datasets

def test_generated_dataset_counts_and_balance():
    ckpts = [tiny_ckpt("digit_1", 1), tiny_ckpt("digit_0", 2)]
    ds = build_generated_dataset(ckpts, 4, Rng(5))
    assert ds.n == 8
    assert ds.class_names == ["digit_0", "digit_1"]
    assert ds.norm == "unit"
    np.testing.assert_array_equal(np.bincount(ds.labels), [4, 4])
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0


def test_same_rng_seed_same_samples():
    ckpts = {"digit_0": tiny_ckpt("digit_0", 3)}
    a = build_generated_dataset(ckpts, 5, Rng(9))
    b = build_generated_dataset(ckpts, 5, Rng(9))
    np.testing.assert_array_equal(a.images, b.images)


def test_raw_and_cleaned_share_latents():
    """Cleaning must be the only difference: un-cleaning is impossible,
    but the cleaned batch must be exactly clean_batch(raw batch)."""
    from glyphgan.cleaning import clean_batch

    ckpts = {"digit_0": tiny_ckpt("digit_0", 4), "digit_1": tiny_ckpt("digit_1", 5)}
    cfg = CleaningConfig(skip_not=True)
    raw = build_generated_dataset(ckpts, 3, Rng(11), cleaned=False)
    cleaned = build_generated_dataset(ckpts, 3, Rng(11), cleaned=True, cleaning_cfg=cfg)
    want = clean_batch(denormalize(raw.images[..., 0], "unit"), cfg)
    np.testing.assert_array_equal(denormalize(cleaned.images[..., 0], "unit"), want)


def test_cleaned_dataset_is_binary():
    ckpts = {"digit_0": tiny_ckpt("digit_0", 6)}
    ds = build_generated_dataset(ckpts, 4, Rng(12), cleaned=True)
    pixels = denormalize(ds.images, "unit")
    assert set(np.unique(pixels)) <= {0, 255}


def test_label_names_map_into_wider_space():
    ckpts = {"digit_3": tiny_ckpt("digit_3", 7)}
    wider = ["digit_0", "digit_3", "digit_9"]
    ds = build_generated_dataset(ckpts, 2, Rng(13), label_names=wider)
    assert ds.class_names == wider
    np.testing.assert_array_equal(ds.labels, [1, 1])


def test_label_names_must_cover_checkpoints():
    ckpts = {"digit_3": tiny_ckpt("digit_3", 7)}
    with pytest.raises(DataError, match="digit_3"):
        build_generated_dataset(ckpts, 2, Rng(13), label_names=["digit_0"])


def test_checkpoint_validation():
    with pytest.raises(DataError, match="class names"):
        build_generated_dataset([tiny_ckpt(None, 1)], 2, Rng(0))
    with pytest.raises(DataError, match="usable"):
        build_generated_dataset({"digit_0": "not a checkpoint"}, 2, Rng(0))
    with pytest.raises(ValueError):
        build_generated_dataset({"digit_0": tiny_ckpt("digit_0", 1)}, 0, Rng(0))


# ---------------------------------------------------------- scoring

def _toy_setup():
    rng = Rng(20)
    px = np.zeros((40, 32, 32), dtype=np.uint8)
    px[:20, 4:16] = 200  # class 0: top band
    px[20:, 16:28] = 200  # class 1: bottom band
    noise = (rng.uniform((40, 32, 32)) * 20).astype(np.uint8)
    ds = from_arrays(np.clip(px + noise, 0, 255).astype(np.uint8), [0] * 20 + [1] * 20,
                     ["digit_0", "digit_1"], "unit")
    net, _ = train_classifier("c1", ds, ds, epochs=3, batch_size=8, seed=1)
    return ds, net


def test_score_dataset_rows():
    ds, net = _toy_setup()
    report = score_dataset([net], ds, "original")
    assert report.dataset_name == "original"
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row.classifier_id == "c1"
    assert 0.0 <= row.accuracy <= 1.0
    assert row.val_loss is None


def test_score_dataset_requires_unit_norm():
    ds, net = _toy_setup()
    from glyphgan.data import convert_norm

    with pytest.raises(DataError, match="unit"):
        score_dataset([net], convert_norm(ds, "symmetric"), "x")


def test_score_dataset_deterministic():
    ds, net = _toy_setup()
    a = score_dataset([net], ds, "original")
    b = score_dataset([net], ds, "original")
    assert a == b


# --------------------------------------------------------- rendering

def _sample_report(with_val=False):
    rows = [
        ReportRow("c1", 0.12345, 0.98765, 0.2 if with_val else None, 0.9 if with_val else None),
        ReportRow("c2", 8.034, 0.159, 0.3 if with_val else None, 0.8 if with_val else None),
    ]
    return MetricsReport("generated_raw", rows)


def test_render_csv_parses_back():
    text = render_report(_sample_report(), "csv")
    got = list(csv.reader(io.StringIO(text)))
    assert got[0] == ["classifier", "loss", "accuracy"]
    assert got[1] == ["c1", "0.1235", "0.9877"]
    assert got[2] == ["c2", "8.0340", "0.1590"]


def test_render_includes_val_columns_only_when_present():
    plain = render_report(_sample_report(False), "csv")
    assert "val_loss" not in plain
    with_val = render_report(_sample_report(True), "csv")
    head = with_val.splitlines()[0]
    assert head == "classifier,loss,accuracy,val_loss,val_accuracy"


def test_render_markdown_table():
    text = render_report(_sample_report(), "markdown_table")
    lines = text.strip().splitlines()
    assert lines[0] == "| classifier | loss | accuracy |"
    assert lines[1] == "|---|---|---|"
    assert lines[2] == "| c1 | 0.1235 | 0.9877 |"


def test_render_unknown_format():
    with pytest.raises(ValueError):
        render_report(_sample_report(), "html")


def test_write_report_files(tmp_path):
    paths = write_report(_sample_report(), tmp_path)
    assert [p.split("/")[-1] for p in paths] == ["report_generated_raw.csv", "report_generated_raw.md"]
    csv_text = (tmp_path / "report_generated_raw.csv").read_text()
    assert csv_text == render_report(_sample_report(), "csv")
    md_text = (tmp_path / "report_generated_raw.md").read_text()
    assert md_text == render_report(_sample_report(), "markdown_table")
