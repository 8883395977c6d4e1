"""Bundled synthetic glyph set: ten digit classes rendered from 5×7
bitmaps, upscaled, jittered and noised into 32×32 grayscale images.

Exists so the full pipeline (classifier training, GAN training,
cleaning, scoring) runs end to end on machines without the real
handwritten-character archive.  Same conventions as the real data:
bright glyph on dark ground, one directory per class when written to
disk, deterministic under a seed.
"""

import os

import numpy as np
from PIL import Image

from .data import LabeledDataset, from_arrays
from .rng import Rng

# 5x7 digit bitmaps, row-major, 1 = ink
_GLYPHS = {
    "0": ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    "1": ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    "2": ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    "3": ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    "4": ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    "5": ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    "6": ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    "7": ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    "8": ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    "9": ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}

CLASS_NAMES = tuple(f"digit_{d}" for d in sorted(_GLYPHS))

_SCALE = 4  # 5x7 -> 20x28 inside the 32x32 canvas
_CANVAS = 32
_MAX_JITTER = 2


def _glyph_mask(digit: str) -> np.ndarray:
    rows = _GLYPHS[digit]
    bits = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
    return np.kron(bits, np.ones((_SCALE, _SCALE), dtype=bool))


def _shift(mask, dy, dx):
    out = np.zeros_like(mask)
    h, w = mask.shape
    ys = slice(max(dy, 0), h + min(dy, 0))
    xs = slice(max(dx, 0), w + min(dx, 0))
    yd = slice(max(-dy, 0), h + min(-dy, 0))
    xd = slice(max(-dx, 0), w + min(-dx, 0))
    out[ys, xs] = mask[yd, xd]
    return out


def _vary_thickness(mask, pick):
    """0 keeps the stroke, 1 thins it by a pixel, 2 thickens it."""
    if pick == 0:
        return mask
    n4 = (_shift(mask, 1, 0), _shift(mask, -1, 0), _shift(mask, 0, 1), _shift(mask, 0, -1))
    if pick == 1:
        out = mask.copy()
        for s in n4:
            out &= s
        return out
    out = mask.copy()
    for s in n4:
        out |= s
    return out


def render_glyph(digit: str, rng: Rng) -> np.ndarray:
    """One 32×32 uint8 sample: bright near-binary glyph on a dark
    ground, with per-sample position jitter, stroke thickness and mild
    sensor-style noise."""
    mask = _glyph_mask(digit)
    gh, gw = mask.shape
    oy = (_CANVAS - gh) // 2 + int(rng.integers(1, 2 * _MAX_JITTER + 1)[0]) - _MAX_JITTER
    ox = (_CANVAS - gw) // 2 + int(rng.integers(1, 2 * _MAX_JITTER + 1)[0]) - _MAX_JITTER
    canvas_mask = np.zeros((_CANVAS, _CANVAS), dtype=bool)
    canvas_mask[oy : oy + gh, ox : ox + gw] = mask
    canvas_mask = _vary_thickness(canvas_mask, int(rng.integers(1, 3)[0]))
    ink = 245.0 + rng.uniform(()) * 10.0
    bg = rng.uniform(()) * 8.0
    img = np.full((_CANVAS, _CANVAS), bg, dtype=np.float64)
    img[canvas_mask] = ink
    img += rng.normal((_CANVAS, _CANVAS)) * 5.0
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def build_synthetic_dataset(samples_per_class=300, seed=7, class_names=None, norm="unit") -> LabeledDataset:
    """In-memory synthetic dataset; ``class_names`` restricts to a subset."""
    names = list(class_names) if class_names is not None else list(CLASS_NAMES)
    for name in names:
        if name not in CLASS_NAMES:
            raise ValueError(f"unknown synthetic class {name!r}")
    stack = []
    labels = []
    for label, name in enumerate(sorted(names)):
        digit = name.rsplit("_", 1)[1]
        for i in range(samples_per_class):
            stack.append(render_glyph(digit, Rng(seed).derive("sample", name, i)))
            labels.append(label)
    return from_arrays(np.stack(stack), labels, sorted(names), norm)


def write_synthetic_tree(root_dir, samples_per_class=300, seed=7, class_names=None):
    """Materialize the synthetic set as a ``root/<class>/<i>.png`` tree.

    Returns the sorted class names.  Skips rendering when the tree
    already exists with the expected file counts.
    """
    names = sorted(class_names) if class_names is not None else list(CLASS_NAMES)
    complete = all(
        len([f for f in os.listdir(os.path.join(root_dir, name)) if f.endswith(".png")])
        == samples_per_class
        for name in names
        if os.path.isdir(os.path.join(root_dir, name))
    ) and all(os.path.isdir(os.path.join(root_dir, name)) for name in names)
    if complete:
        return names
    for name in names:
        digit = name.rsplit("_", 1)[1]
        class_dir = os.path.join(root_dir, name)
        os.makedirs(class_dir, exist_ok=True)
        for i in range(samples_per_class):
            img = render_glyph(digit, Rng(seed).derive("sample", name, i))
            Image.fromarray(img, mode="L").save(os.path.join(class_dir, f"{i:05d}.png"))
    return names
