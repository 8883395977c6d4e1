"""Dataset ingestion: directory trees of 32×32 grayscale PNGs, one
subdirectory per class, loaded into in-memory labeled arrays.

Two normalization conventions coexist: classifiers consume ``unit``
(pixel/255, range [0,1]) and GANs consume ``symmetric`` (pixel/127.5 - 1,
range [-1,1], the tanh range).  Both invert exactly back to 8-bit after
rounding.

Ordering is deterministic everywhere: class order is the lexicographic
order of directory names, file order the lexicographic order of file
names, so the same tree always produces the same arrays.
"""

import dataclasses
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError
from .ops import DTYPE
from .rng import Rng

NORMS = ("unit", "symmetric")
IMAGE_SIZE = 32


@dataclasses.dataclass
class LabeledDataset:
    images: np.ndarray  # (n, 32, 32, 1) float32
    labels: np.ndarray  # (n,) int64
    class_names: list
    norm: str

    @property
    def n(self):
        return self.images.shape[0]

    @property
    def num_classes(self):
        return len(self.class_names)

    def __len__(self):
        return self.n


@dataclasses.dataclass
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def normalize(pixels_uint8, norm):
    """8-bit array -> float32 images in the given convention."""
    if norm == "unit":
        return (pixels_uint8.astype(DTYPE) / DTYPE(255.0)).astype(DTYPE)
    if norm == "symmetric":
        return (pixels_uint8.astype(DTYPE) / DTYPE(127.5) - DTYPE(1.0)).astype(DTYPE)
    raise ValueError(f"unknown norm {norm!r}")


def denormalize(images, norm):
    """float32 images -> 8-bit array, rounding to nearest."""
    images = np.asarray(images)
    if norm == "unit":
        raw = np.rint(images * 255.0)
    elif norm == "symmetric":
        raw = np.rint((images + 1.0) * 127.5)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return np.clip(raw, 0, 255).astype(np.uint8)


def convert_norm(ds: LabeledDataset, norm: str) -> LabeledDataset:
    """Re-express a dataset in the other normalization, exactly (the
    conversion goes through the recovered 8-bit values)."""
    if norm == ds.norm:
        return ds
    pixels = denormalize(ds.images, ds.norm)
    return LabeledDataset(normalize(pixels, norm), ds.labels, list(ds.class_names), norm)


def from_arrays(pixels_uint8, labels, class_names, norm="unit"):
    """Build a dataset from in-memory 8-bit images (n,32,32) or (n,32,32,1)."""
    pixels_uint8 = np.asarray(pixels_uint8, dtype=np.uint8)
    if pixels_uint8.ndim == 3:
        pixels_uint8 = pixels_uint8[..., None]
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= len(class_names)):
        raise DataError(f"label outside [0, {len(class_names)})")
    return LabeledDataset(normalize(pixels_uint8, norm), labels, list(class_names), norm)


def resolve_subset(available, class_subset):
    """Expand the subset argument against available class names.

    ``None`` keeps everything, the string ``"digits"`` selects names
    starting with ``digit``, a list is validated verbatim.  Result is
    lexicographically sorted.
    """
    available = sorted(available)
    if class_subset is None:
        return available
    if class_subset == "digits":
        picked = [name for name in available if name.startswith("digit")]
        if not picked:
            raise DataError("subset 'digits' matched no class directory")
        return picked
    picked = sorted(class_subset)
    missing = [name for name in picked if name not in available]
    if missing:
        raise DataError(f"unknown class names: {', '.join(missing)}")
    return picked


def _load_one(path):
    try:
        with Image.open(path) as img:
            if img.size != (IMAGE_SIZE, IMAGE_SIZE):
                raise DataError(
                    f"{path}: expected {IMAGE_SIZE}x{IMAGE_SIZE}, got {img.size[0]}x{img.size[1]}"
                )
            return np.asarray(img.convert("L"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"{path}: cannot decode PNG ({exc})") from exc


def load_dataset(root_dir, class_subset=None, norm="unit") -> LabeledDataset:
    """Load ``root_dir/<class_name>/*.png`` into a LabeledDataset.

    Every file must already be 32×32; nothing is resampled.  Labels are
    assigned by the sorted order of the selected class names.
    """
    if not os.path.isdir(root_dir):
        raise DataError(f"dataset root {root_dir} is not a directory")
    names = [d for d in os.listdir(root_dir) if os.path.isdir(os.path.join(root_dir, d))]
    if not names:
        raise DataError(f"dataset root {root_dir} contains no class directories")
    class_names = resolve_subset(names, class_subset)
    stack = []
    labels = []
    for label, name in enumerate(class_names):
        class_dir = os.path.join(root_dir, name)
        files = sorted(f for f in os.listdir(class_dir) if f.lower().endswith(".png"))
        if not files:
            raise DataError(f"class directory {class_dir} holds no .png files")
        for fname in files:
            stack.append(_load_one(os.path.join(class_dir, fname)))
            labels.append(label)
    pixels = np.stack(stack)[..., None]
    return LabeledDataset(
        normalize(pixels, norm), np.asarray(labels, dtype=np.int64), class_names, norm
    )


def load_train_test(root_dir, class_subset=None, norm="unit"):
    """Load official ``Train/`` and ``Test/`` subtrees as (train, val).

    Returns None when the subtrees are absent, so callers can fall back
    to a stratified split of a flat tree.
    """
    train_dir = os.path.join(root_dir, "Train")
    test_dir = os.path.join(root_dir, "Test")
    if not (os.path.isdir(train_dir) and os.path.isdir(test_dir)):
        return None
    train = load_dataset(train_dir, class_subset, norm)
    val = load_dataset(test_dir, class_subset, norm)
    if train.class_names != val.class_names:
        raise DataError(
            f"Train/ and Test/ class sets differ: {train.class_names} vs {val.class_names}"
        )
    return train, val


def split(ds: LabeledDataset, spec: SplitSpec):
    """Per-class stratified shuffle split, deterministic under the seed."""
    train_idx = []
    val_idx = []
    for label in range(ds.num_classes):
        idx = np.nonzero(ds.labels == label)[0]
        n_c = idx.shape[0]
        if n_c < 2:
            raise DataError(
                f"class {ds.class_names[label]!r} has {n_c} sample(s); need >= 2 to stratify"
            )
        perm = Rng(spec.seed).derive("split", label).permutation(n_c)
        n_train = int(round(spec.train_fraction * n_c))
        n_train = min(max(n_train, 1), n_c - 1)
        train_idx.extend(idx[perm[:n_train]])
        val_idx.extend(idx[perm[n_train:]])
    train_idx = np.sort(np.asarray(train_idx))
    val_idx = np.sort(np.asarray(val_idx))

    def take(indices):
        return LabeledDataset(ds.images[indices], ds.labels[indices], list(ds.class_names), ds.norm)

    return take(train_idx), take(val_idx)


def batches(ds: LabeledDataset, batch_size, rng: Rng = None):
    """Yield (images, labels) batches; shuffled when an rng is given,
    final short batch included."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = rng.permutation(ds.n) if rng is not None else np.arange(ds.n)
    for start in range(0, ds.n, batch_size):
        sel = order[start : start + batch_size]
        yield ds.images[sel], ds.labels[sel]


def filter_class(ds: LabeledDataset, class_name: str) -> LabeledDataset:
    """Restrict to a single class (single-entry class list, labels all 0)."""
    if class_name not in ds.class_names:
        raise DataError(f"unknown class {class_name!r}")
    label = ds.class_names.index(class_name)
    sel = ds.labels == label
    return LabeledDataset(
        ds.images[sel], np.zeros(int(sel.sum()), dtype=np.int64), [class_name], ds.norm
    )


def to_onehot(labels, num_classes):
    from .losses import to_onehot as _onehot

    return _onehot(labels, num_classes)
