"""Primitive numeric kernels: matmul, 2-D convolution, max pooling.

All arrays are float32, row-major, batch-first; images are laid out
NHWC.  Convolution is cross-correlation (no kernel flip).  Each kernel
with an analytic backward is checked against :func:`finite_diff_grad`
in the test suite.
"""

import numpy as np

from .errors import NumericError, ShapeError
from .rng import Rng

DTYPE = np.float32


def tensor(data, dtype=DTYPE) -> np.ndarray:
    """Coerce ``data`` to a C-contiguous float32 array."""
    return np.ascontiguousarray(np.asarray(data, dtype=dtype))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of 2-D float32 arrays, accumulated in float32.

    Raises
    ------
    ShapeError
        If either operand is not 2-D or the inner dimensions disagree.
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes incompatible: {a.shape} x {b.shape}")
    return np.matmul(a, b)


def _pad_amounts(in_size: int, k: int, stride: int, padding: str):
    if padding == "valid":
        if k > in_size:
            raise ShapeError(f"kernel size {k} exceeds input size {in_size} (valid padding)")
        out = (in_size - k) // stride + 1
        return out, 0, 0
    if padding == "same":
        out = -(-in_size // stride)  # ceil
        total = max((out - 1) * stride + k - in_size, 0)
        before = total // 2
        return out, before, total - before
    raise ValueError(f"unknown padding {padding!r}")


def conv2d_forward(x, kernels, padding="same", strides=(1, 1)):
    """Cross-correlate NHWC input ``x`` with kernels (kh, kw, cin, cout).

    ``same`` padding keeps ceil(in/stride) spatial size, splitting any
    asymmetric zero padding floor-before / ceil-after; ``valid`` keeps
    floor((in - k) / stride) + 1.

    Returns (out, cache); ``cache`` feeds :func:`conv2d_backward`.
    """
    if x.ndim != 4 or kernels.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernels, got {x.shape} and {kernels.shape}")
    b, h, w, cin = x.shape
    kh, kw, kcin, cout = kernels.shape
    if kcin != cin:
        raise ShapeError(f"conv2d channel mismatch: input {x.shape} vs kernels {kernels.shape}")
    sh, sw = strides
    if sh < 1 or sw < 1:
        raise ShapeError(f"strides must be >= 1, got {strides}")
    oh, ph0, ph1 = _pad_amounts(h, kh, sh, padding)
    ow, pw0, pw1 = _pad_amounts(w, kw, sw, padding)

    xp = np.pad(x, ((0, 0), (ph0, ph1), (pw0, pw1), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win[:, ::sh, ::sw]  # (b, oh, ow, cin, kh, kw)
    cols = np.ascontiguousarray(win).reshape(b * oh * ow, cin * kh * kw)
    kmat = kernels.transpose(2, 0, 1, 3).reshape(cin * kh * kw, cout)
    out = (cols @ kmat).reshape(b, oh, ow, cout)
    cache = (cols, kmat, x.shape, xp.shape, kernels.shape, (ph0, pw0), strides)
    return out, cache


def conv2d(x, kernels, padding="same", strides=(1, 1)):
    """Forward-only convenience wrapper around :func:`conv2d_forward`."""
    return conv2d_forward(x, kernels, padding, strides)[0]


def conv2d_backward(dout, cache):
    """Gradients of conv2d w.r.t. input and kernels."""
    cols, kmat, x_shape, xp_shape, k_shape, (ph0, pw0), (sh, sw) = cache
    b, h, w, cin = x_shape
    kh, kw, _, cout = k_shape
    _, oh, ow, _ = dout.shape

    dmat = dout.reshape(b * oh * ow, cout)
    dkmat = cols.T @ dmat
    dkernels = dkmat.reshape(cin, kh, kw, cout).transpose(1, 2, 0, 3)

    dcols = (dmat @ kmat.T).reshape(b, oh, ow, cin, kh, kw)
    dxp = np.zeros(xp_shape, dtype=dout.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + sh * oh : sh, j : j + sw * ow : sw, :] += dcols[:, :, :, :, i, j]
    dx = dxp[:, ph0 : ph0 + h, pw0 : pw0 + w, :]
    return np.ascontiguousarray(dx), dkernels


def maxpool2d(x, size=(2, 2), strides=(2, 2)):
    """Max pooling over NHWC input.

    Returns (out, argmax); ``argmax`` holds the flat in-window index of
    each window's maximum (first index in row-major order on ties) and
    routes the gradient in :func:`maxpool2d_backward`.
    """
    if x.ndim != 4:
        raise ShapeError(f"maxpool2d expects 4-D input, got {x.shape}")
    b, h, w, c = x.shape
    ph, pw = size
    sh, sw = strides
    if ph > h or pw > w:
        raise ShapeError(f"pool window {size} exceeds input spatial dims {(h, w)}")
    oh = (h - ph) // sh + 1
    ow = (w - pw) // sw + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (ph, pw), axis=(1, 2))
    win = win[:, ::sh, ::sw].reshape(b, oh, ow, c, ph * pw)
    argmax = win.argmax(axis=-1)
    out = np.take_along_axis(win, argmax[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(out), argmax


def maxpool2d_backward(dout, argmax, in_shape, size=(2, 2), strides=(2, 2)):
    """Route each window's gradient to its recorded argmax position."""
    b, h, w, c = in_shape
    ph, pw = size
    sh, sw = strides
    _, oh, ow, _ = dout.shape
    dx = np.zeros(in_shape, dtype=dout.dtype)
    bi, oi, oj, ci = np.indices((b, oh, ow, c), sparse=False)
    ii = oi * sh + argmax // pw
    jj = oj * sw + argmax % pw
    np.add.at(dx, (bi, ii, jj, ci), dout)
    return dx


def sample_gaussian(rng: Rng, shape) -> np.ndarray:
    """Standard-normal float32 tensor, deterministic under the rng seed."""
    return rng.normal(shape).astype(DTYPE)


def finite_diff_grad(f, x, eps=1e-3):
    """Central-difference gradient oracle for a scalar function of ``x``.

    Perturbs one element at a time: (f(x + e*eps) - f(x - e*eps)) / (2*eps).
    Independent of every analytic backward in the library; used only to
    check them.

    Raises
    ------
    NumericError
        If ``f`` returns a non-finite value at any probe point.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x)
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = grad.reshape(-1)
    xw = x.copy()
    xf = xw.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + eps
        fp = float(f(xw))
        xf[i] = orig - eps
        fm = float(f(xw))
        xf[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"finite_diff_grad: non-finite objective at element {i}")
        flat[i] = (fp - fm) / (2.0 * eps)
    return grad.astype(x.dtype)


def relative_error(a, b, floor=1e-6):
    """Max elementwise |a-b| / max(|a|, |b|, floor); the gradcheck metric."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
