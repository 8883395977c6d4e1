"""Metric tables: classifiers scored on original, raw-generated and
cleaned-generated datasets, rendered as CSV and markdown.

The raw and cleaned generated datasets are built from the same latents
(derivation is keyed by class name, not draw order), so their score
difference isolates the effect of the cleaning pipeline.
"""

import dataclasses
import os

import numpy as np

from . import classifiers as clf
from .cleaning import CleaningConfig, clean_batch
from .data import LabeledDataset, from_arrays, denormalize
from .errors import DataError
from .gan import GanCheckpoint, generate
from .rng import Rng


@dataclasses.dataclass
class ReportRow:
    classifier_id: str
    loss: float
    accuracy: float
    val_loss: float = None
    val_accuracy: float = None


@dataclasses.dataclass
class MetricsReport:
    dataset_name: str
    rows: list


def score_dataset(nets, ds: LabeledDataset, name: str) -> MetricsReport:
    """One evaluate() row per classifier network."""
    if ds.norm != "unit":
        raise DataError(f"scoring expects unit normalization, got {ds.norm!r}")
    rows = []
    for net in nets:
        loss, acc = clf.evaluate(net, ds)
        rows.append(ReportRow(net.name, loss, acc))
    return MetricsReport(name, rows)


def build_generated_dataset(
    checkpoints,
    per_class_count,
    rng: Rng,
    cleaned=False,
    cleaning_cfg: CleaningConfig = None,
    label_names=None,
) -> LabeledDataset:
    """Sample ``per_class_count`` images from each class GAN.

    ``checkpoints`` is a list of GanCheckpoints or a class_name->checkpoint
    dict; ``label_names`` fixes the label space (defaults to the sorted
    checkpoint class names) so generated labels line up with classifiers
    trained on a wider class list.  Images are denormalized to 8 bit,
    optionally cleaned, then unit-normalized.
    """
    if per_class_count < 1:
        raise ValueError(f"per_class_count must be >= 1, got {per_class_count}")
    if isinstance(checkpoints, dict):
        by_name = dict(checkpoints)
    else:
        by_name = {c.class_name: c for c in checkpoints}
    if any(name is None for name in by_name):
        raise DataError("generated dataset needs checkpoints with class names")
    names = sorted(by_name)
    label_names = list(label_names) if label_names is not None else names
    missing = [n for n in names if n not in label_names]
    if missing:
        raise DataError(f"checkpoint classes missing from label space: {', '.join(missing)}")
    stack = []
    labels = []
    for name in names:
        ckpt = by_name[name]
        if not isinstance(ckpt, GanCheckpoint):
            raise DataError(f"class {name!r} has no usable checkpoint")
        samples = generate(ckpt, per_class_count, rng.derive("latents", name))
        pixels = denormalize(samples[..., 0], "symmetric")
        if cleaned:
            pixels = clean_batch(pixels, cleaning_cfg)
        stack.append(pixels)
        labels.extend([label_names.index(name)] * per_class_count)
    return from_arrays(np.concatenate(stack), labels, label_names, norm="unit")


_COLUMNS = ("classifier", "loss", "accuracy", "val_loss", "val_accuracy")


def _has_val(report: MetricsReport) -> bool:
    return any(r.val_loss is not None or r.val_accuracy is not None for r in report.rows)


def _row_values(row: ReportRow, with_val: bool):
    values = [row.classifier_id, f"{row.loss:.4f}", f"{row.accuracy:.4f}"]
    if with_val:
        values += [f"{row.val_loss:.4f}", f"{row.val_accuracy:.4f}"]
    return values


def render_report(report: MetricsReport, format="csv") -> str:
    """Render with a stable column order and 4-decimal fixed numbers."""
    with_val = _has_val(report)
    header = _COLUMNS if with_val else _COLUMNS[:3]
    if format == "csv":
        lines = [",".join(header)]
        lines += [",".join(_row_values(r, with_val)) for r in report.rows]
        return "\n".join(lines) + "\n"
    if format == "markdown_table":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(_row_values(r, with_val)) + " |" for r in report.rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")


def write_report(report: MetricsReport, out_dir) -> list:
    """Write report_<name>.csv and .md under out_dir; returns the paths."""
    paths = []
    for fmt, ext in (("csv", "csv"), ("markdown_table", "md")):
        path = os.path.join(out_dir, f"report_{report.dataset_name}.{ext}")
        with open(path, "w") as fh:
            fh.write(render_report(report, fmt))
        paths.append(path)
    return paths
