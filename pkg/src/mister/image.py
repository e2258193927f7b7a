"""Grayscale image carrier, file I/O, sampling-grid operations, filtering, PSNR.

Images are 2-D float64 arrays indexed ``img[row, col]`` with intensities on a
nominal [0, 255] scale.  Values are kept as doubles end to end and are only
quantized when written to disk.  The measurement grid for an upscaling factor
``s`` is the set of positions whose row and column are both multiples of ``s``
(the low-resolution samples sit at the upper-left corner of each s-by-s cell).
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy import ndimage

__all__ = [
    "as_image",
    "load_image",
    "save_image",
    "quantize_u8",
    "downsample",
    "upsample_zero_fill",
    "reflect_pad",
    "crop",
    "bicubic_interpolate",
    "gaussian_kernel",
    "gaussian_lowpass",
    "psnr",
    "measured_mean",
]

_FACTORS = (2, 3)


def as_image(data) -> np.ndarray:
    """Validate `data` as a 2-D finite float64 image and return it."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must have at least one row and one column")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img


def _check_factor(factor: int) -> int:
    if factor not in _FACTORS:
        raise ValueError(f"factor must be one of {_FACTORS}, got {factor!r}")
    return int(factor)


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _format_from_path(path) -> str:
    ext = os.path.splitext(str(path))[1].lower().lstrip(".")
    if ext in ("pgm", "png"):
        return ext
    raise ValueError(f"cannot infer image format from path {path!r}; pass format='pgm'|'png'")


def load_image(path, format: str | None = None) -> np.ndarray:
    """Read an 8-bit grayscale PGM (binary P5) or PNG file as a float64 image.

    Byte values map to reals in [0, 255] with no scaling.  Color or
    high-bit-depth files are rejected.
    """
    fmt = format or _format_from_path(path)
    if fmt == "pgm":
        return _load_pgm(path)
    if fmt == "png":
        return _load_png(path)
    raise ValueError(f"unsupported format {fmt!r}: expected 'pgm' or 'png'")


def _load_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(blob):
            ch = blob[pos : pos + 1]
            if ch in (b" ", b"\t", b"\r", b"\n"):
                pos += 1
            elif ch == b"#":
                nl = blob.find(b"\n", pos)
                if nl < 0:
                    raise ValueError("malformed PGM header: unterminated comment")
                pos = nl + 1
            else:
                break
        start = pos
        while pos < len(blob) and blob[pos : pos + 1] not in (b" ", b"\t", b"\r", b"\n"):
            pos += 1
        if start == pos:
            raise ValueError("malformed PGM header: missing token")
        return blob[start:pos]

    magic = next_token()
    if magic in (b"P3", b"P6"):
        raise ValueError("unsupported: color PGM/PPM")
    if magic == b"P2":
        raise ValueError("unsupported: ASCII (P2) PGM, only binary P5 is accepted")
    if magic != b"P5":
        raise ValueError(f"malformed PGM header: expected magic P5, got {magic!r}")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise ValueError(f"malformed PGM header: {exc}") from None
    if width < 1 or height < 1:
        raise ValueError(f"malformed PGM header: non-positive dimensions {width}x{height}")
    if maxval > 255:
        raise ValueError(f"unsupported bit depth: maxval {maxval} exceeds 8-bit")
    if maxval < 1:
        raise ValueError(f"malformed PGM header: maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    need = width * height
    payload = blob[pos : pos + need]
    if len(payload) < need:
        raise ValueError(f"truncated PGM payload: expected {need} bytes, found {len(payload)}")
    data = np.frombuffer(payload, dtype=np.uint8)
    return data.reshape(height, width).astype(np.float64)


def _load_png(path) -> np.ndarray:
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        im.load()
        if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
            raise ValueError(f"unsupported bit depth: PNG mode {im.mode}, need 8-bit grayscale")
        if im.mode != "L":
            raise ValueError(f"unsupported: color PNG (mode {im.mode}), need 8-bit grayscale")
        return np.asarray(im, dtype=np.float64)


def quantize_u8(img) -> np.ndarray:
    """Round half away from zero and clamp to [0, 255], returning uint8."""
    img = as_image(img)
    rounded = np.sign(img) * np.floor(np.abs(img) + 0.5)
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)


def save_image(img, path, format: str | None = None) -> None:
    """Write `img` as 8-bit grayscale PGM (binary P5) or PNG."""
    data = quantize_u8(img)
    fmt = format or _format_from_path(path)
    if fmt == "pgm":
        height, width = data.shape
        header = f"P5\n{width} {height}\n255\n".encode("ascii")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(data.tobytes())
    elif fmt == "png":
        from PIL import Image as PILImage

        PILImage.fromarray(data, mode="L").save(path, format="PNG")
    else:
        raise ValueError(f"unsupported format {fmt!r}: expected 'pgm' or 'png'")


# ---------------------------------------------------------------------------
# Sampling-grid operations
# ---------------------------------------------------------------------------

def downsample(img, factor: int) -> np.ndarray:
    """Decimate onto the measurement grid: ``out[p, q] = img[s*p, s*q]``.

    Output dimensions are ``ceil(dim / s)``; the grid starts at the upper-left
    pixel.  No prefiltering is applied.
    """
    img = as_image(img)
    s = _check_factor(factor)
    if img.shape[0] < s or img.shape[1] < s:
        raise ValueError(f"image {img.shape} smaller than factor {s}")
    return img[::s, ::s].copy()


def upsample_zero_fill(img, factor: int, target_shape: tuple[int, int]) -> np.ndarray:
    """Place samples on the measurement grid of a (height, width) canvas, zeros elsewhere.

    `target_shape` must be consistent with the grid: ``ceil(target / s)`` has to
    equal the input dimensions on both axes.
    """
    img = as_image(img)
    s = int(factor)
    if s < 1:
        raise ValueError(f"factor must be positive, got {factor!r}")
    th, tw = int(target_shape[0]), int(target_shape[1])
    if -(-th // s) != img.shape[0] or -(-tw // s) != img.shape[1]:
        raise ValueError(
            f"target dimensions {(th, tw)} inconsistent with measurement grid of a "
            f"{img.shape} input at factor {s}"
        )
    out = np.zeros((th, tw), dtype=np.float64)
    out[::s, ::s] = img
    return out


def reflect_pad(img, margin: int) -> np.ndarray:
    """Mirror-extend by `margin` pixels per side without repeating the edge sample."""
    img = as_image(img)
    margin = int(margin)
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    if margin == 0:
        return img.copy()
    if margin >= min(img.shape):
        raise ValueError(f"margin {margin} must be smaller than both image dimensions {img.shape}")
    return np.pad(img, margin, mode="reflect")


def crop(img, left: int, top: int, width: int, height: int) -> np.ndarray:
    """Copy the rectangle with upper-left corner (top, left) and the given size."""
    img = as_image(img)
    left, top, width, height = int(left), int(top), int(width), int(height)
    if width < 1 or height < 1:
        raise ValueError("crop size must be positive")
    if left < 0 or top < 0 or top + height > img.shape[0] or left + width > img.shape[1]:
        raise ValueError(
            f"crop rectangle (left={left}, top={top}, {width}x{height}) exceeds image {img.shape}"
        )
    return img[top : top + height, left : left + width].copy()


# ---------------------------------------------------------------------------
# Cubic-convolution upscaling
# ---------------------------------------------------------------------------

def _keys_kernel(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Cubic convolution kernel; the a=-0.5 member interpolates quadratics exactly."""
    x = np.abs(x)
    near = (a + 2.0) * x**3 - (a + 3.0) * x**2 + 1.0
    far = a * x**3 - 5.0 * a * x**2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    """Map possibly out-of-range indices into [0, n) by whole-sample reflection."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def _cubic_upsample_rows(arr: np.ndarray, s: int) -> np.ndarray:
    n_in = arr.shape[0]
    out = np.empty((s * n_in,) + arr.shape[1:], dtype=np.float64)
    base = np.arange(n_in)
    for t in range(s):
        frac = t / s
        w = _keys_kernel(np.array([1.0 + frac, frac, 1.0 - frac, 2.0 - frac]))
        rows = w[0] * arr[_reflect_indices(base - 1, n_in)]
        for j in range(1, 4):
            rows = rows + w[j] * arr[_reflect_indices(base + j - 1, n_in)]
        out[t::s] = rows
    return out


def bicubic_interpolate(img, factor: int) -> np.ndarray:
    """Upscale by cubic convolution, keeping measurement-grid samples bit-exact.

    Output has shape ``(s*h, s*w)`` and satisfies ``out[s*p, s*q] == img[p, q]``.
    Boundaries use whole-sample mirror extension.
    """
    img = as_image(img)
    s = _check_factor(factor)
    out = _cubic_upsample_rows(img, s)
    out = _cubic_upsample_rows(out.T, s).T
    return out


# ---------------------------------------------------------------------------
# Filtering and metrics
# ---------------------------------------------------------------------------

def gaussian_kernel(side: int, sigma: float) -> np.ndarray:
    """Unit-gain 2-D Gaussian taps of odd size `side` and standard deviation `sigma`."""
    side = int(side)
    if side < 1 or side % 2 == 0:
        raise ValueError(f"kernel side must be odd and positive, got {side}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    half = side // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    taps = np.outer(g, g)
    return taps / taps.sum()


def gaussian_lowpass(img, side: int, sigma: float) -> np.ndarray:
    """Convolve with a unit-gain Gaussian, mirror boundary without edge repeat."""
    img = as_image(img)
    taps = gaussian_kernel(side, sigma)
    # the kernel is symmetric, so correlation equals convolution
    return ndimage.correlate(img, taps, mode="mirror")


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB against a 255 peak; +inf for identical images."""
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 20.0 * math.log10(255.0 / math.sqrt(mse))


def measured_mean(img, factor: int) -> float:
    """Arithmetic mean over measurement-grid positions only."""
    img = as_image(img)
    s = int(factor)
    if s < 1:
        raise ValueError(f"factor must be positive, got {factor!r}")
    return float(img[::s, ::s].mean())
