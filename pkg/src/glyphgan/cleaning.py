"""Classical cleanup for generated glyph images.

Fixed stage order: 3×3 Gaussian blur, Otsu threshold, morphological
opening, morphological closing, bitwise NOT.  Everything operates on
2-D uint8 arrays; after Otsu the image is strictly binary {0, 255} and
every later stage preserves that.

Borders are edge-replicated for both the blur and the morphology, so a
glyph touching the canvas edge is not eaten by an artificial black
frame.
"""

import dataclasses

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError


@dataclasses.dataclass
class CleaningConfig:
    blur_sigma: float = 0.8
    skip_not: bool = False

    def __post_init__(self):
        if self.blur_sigma <= 0:
            raise ValueError(f"blur_sigma must be > 0, got {self.blur_sigma}")


def _as_gray(img):
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise DataError(f"expected 2-d uint8 image, got shape {img.shape} dtype {img.dtype}")
    return img


def gaussian_kernel_3x3(sigma: float) -> np.ndarray:
    """Normalized 3×3 Gaussian: entries ∝ exp(-(dx²+dy²)/(2σ²)), sum 1."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    d = np.array([-1.0, 0.0, 1.0])
    g = np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def gaussian_blur_3x3(img, sigma: float = 0.8):
    """Blur with the normalized 3×3 kernel, edge-replicated border,
    rounded back to uint8."""
    img = _as_gray(img)
    kernel = gaussian_kernel_3x3(sigma)
    padded = np.pad(img, 1, mode="edge").astype(np.float64)
    windows = sliding_window_view(padded, (3, 3))
    out = np.einsum("ijkl,kl->ij", windows, kernel)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def otsu_threshold(img):
    """Otsu's global threshold over the 256-bin histogram.

    Returns (threshold t, binary image with pixels ≤ t mapped to 0 and
    pixels > t to 255).  The argmax of the between-class variance is
    found in exact integer arithmetic: for a split at t with class
    counts n0, n1 and sums s0, s1, the variance is proportional to
    (s0*n1 - s1*n0)^2 / (n0*n1), and candidates are compared by
    cross-multiplication so no float rounding can flip the choice.
    Ties take the lowest t; a single-valued image takes t = that value,
    which sends every pixel to 0.
    """
    img = _as_gray(img)
    hist = np.bincount(img.ravel(), minlength=256)
    counts = [int(c) for c in hist]
    total = sum(counts)
    total_sum = sum(v * c for v, c in enumerate(counts))
    best_t = None
    best_num = 0  # squared cross term of the best split
    best_den = 1
    n0 = 0
    s0 = 0
    for t in range(256):
        n0 += counts[t]
        s0 += t * counts[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        s1 = total_sum - s0
        num = (s0 * n1 - s1 * n0) ** 2
        den = n0 * n1
        if best_t is None or num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    if best_t is None:
        # single-valued histogram: no split has two classes
        best_t = int(img.min()) if img.size else 0
    binary = np.where(img > best_t, 255, 0).astype(np.uint8)
    return best_t, binary


def _require_binary(img):
    img = _as_gray(img)
    bad = (img != 0) & (img != 255)
    if bad.any():
        raise DataError(
            f"morphology needs a strictly binary image; found value {int(img[bad][0])}"
        )
    return img


def _neighborhoods(img):
    padded = np.pad(img, 1, mode="edge")
    return sliding_window_view(padded, (3, 3))


def erode(img):
    """255 iff all 9 neighbors (edge-replicated) are 255."""
    img = _require_binary(img)
    return _neighborhoods(img).min(axis=(2, 3))


def dilate(img):
    """255 iff any of the 9 neighbors is 255."""
    img = _require_binary(img)
    return _neighborhoods(img).max(axis=(2, 3))


def opening(img):
    return dilate(erode(img))


def closing(img):
    return erode(dilate(img))


def bitwise_not(img):
    img = _as_gray(img)
    return (255 - img.astype(np.int16)).astype(np.uint8)


def clean(img, cfg: CleaningConfig = None):
    """Full pipeline on one image: blur, otsu, opening, closing, NOT.

    Output is strictly binary.  ``cfg.skip_not`` drops the final
    inversion for data whose polarity already matches its references.
    """
    if cfg is None:
        cfg = CleaningConfig()
    img = _as_gray(img)
    blurred = gaussian_blur_3x3(img, cfg.blur_sigma)
    _, binary = otsu_threshold(blurred)
    out = closing(opening(binary))
    if not cfg.skip_not:
        out = bitwise_not(out)
    return out


def clean_batch(images, cfg: CleaningConfig = None):
    """Clean a stack (n, 32, 32) of uint8 images; returns the same shape."""
    images = np.asarray(images)
    return np.stack([clean(images[i], cfg) for i in range(images.shape[0])])
