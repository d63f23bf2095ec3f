"""Binary glare masks: grayscale, Gaussian blur, brightness threshold, erosion, dilation.

Images are ``uint8`` numpy arrays of shape ``(H, W)`` or ``(H, W, 3)`` in RGB
order. Masks are boolean ``(H, W)`` arrays where ``True`` marks pixels to inpaint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def default_sigma(kernel: int) -> float:
    """Conventional kernel-size to sigma mapping used when no sigma is given."""
    return 0.3 * ((kernel - 1) * 0.5 - 1) + 0.8


@dataclass
class MaskParams:
    low: int = 170
    high: int = 255
    blur_kernel: int = 9
    blur_sigma: Optional[float] = None
    erode_iters: int = 2
    dilate_iters: int = 4
    morph_kernel: int = 3

    def __post_init__(self) -> None:
        if not 0 <= self.low <= self.high <= 255:
            raise ValueError(f"need 0 <= low <= high <= 255, got {self.low}, {self.high}")
        _check_odd(self.blur_kernel, "blur_kernel")
        _check_odd(self.morph_kernel, "morph_kernel")
        if self.erode_iters < 0 or self.dilate_iters < 0:
            raise ValueError("iteration counts must be non-negative")
        if self.blur_sigma is not None and self.blur_sigma <= 0:
            raise ValueError("blur_sigma must be positive")

    @property
    def sigma(self) -> float:
        return self.blur_sigma if self.blur_sigma is not None else default_sigma(self.blur_kernel)


def _check_odd(k: int, name: str) -> None:
    if k < 1 or k % 2 == 0:
        raise ValueError(f"{name} must be an odd positive integer, got {k}")


def _as_uint8(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        if img.size and (img.min() < 0 or img.max() > 255):
            raise ValueError("image samples must lie in [0, 255]")
        img = img.astype(np.uint8)
    return img


def to_grayscale(img: np.ndarray) -> np.ndarray:
    img = _as_uint8(img)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 1:
        return img[:, :, 0]
    if img.ndim == 3 and img.shape[2] == 3:
        rgb = img.astype(np.float64)
        luma = rgb @ np.asarray(LUMA_WEIGHTS)
        return np.clip(np.rint(luma), 0, 255).astype(np.uint8)
    raise ValueError(f"unsupported image shape {img.shape}; expected 1 or 3 channels")


def gaussian_kernel1d(kernel: int, sigma: float) -> np.ndarray:
    _check_odd(kernel, "kernel")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = kernel // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _correlate_axis(a: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    r = len(taps) // 2
    pad = [(0, 0)] * a.ndim
    pad[axis] = (r, r)
    padded = np.pad(a, pad, mode="edge")
    n = a.shape[axis]
    out = np.zeros_like(a, dtype=np.float64)
    for i, t in enumerate(taps):
        out += t * np.take(padded, np.arange(i, i + n), axis=axis)
    return out


def gaussian_blur_float(img: np.ndarray, kernel: int, sigma: float) -> np.ndarray:
    """Separable blur over the two spatial axes with edge-replicate padding, no rounding."""
    taps = gaussian_kernel1d(kernel, sigma)
    out = np.asarray(img, dtype=np.float64)
    if kernel == 1:
        return out.copy()
    out = _correlate_axis(out, taps, axis=0)
    return _correlate_axis(out, taps, axis=1)


def gaussian_blur(gray: np.ndarray, kernel: int, sigma: Optional[float] = None) -> np.ndarray:
    gray = _as_uint8(gray)
    _check_odd(kernel, "kernel")
    if sigma is None:
        sigma = default_sigma(kernel)
    if kernel == 1:
        return gray.copy()
    blurred = gaussian_blur_float(gray, kernel, sigma)
    return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)


def threshold(gray: np.ndarray, low: int, high: int) -> np.ndarray:
    if low > high:
        raise ValueError(f"low ({low}) must not exceed high ({high})")
    gray = np.asarray(gray)
    if gray.ndim != 2:
        raise ValueError("threshold expects a single-channel image")
    return (gray >= low) & (gray <= high)


def _morph(mask: np.ndarray, kernel: int, iters: int, op) -> np.ndarray:
    _check_odd(kernel, "kernel")
    if iters < 0:
        raise ValueError("iters must be non-negative")
    out = np.asarray(mask, dtype=bool).copy()
    r = kernel // 2
    if r == 0:
        return out
    for _ in range(iters):
        # square element is separable; out-of-bounds neighbours count as False
        for axis in (0, 1):
            pad = [(0, 0), (0, 0)]
            pad[axis] = (r, r)
            padded = np.pad(out, pad, mode="constant", constant_values=False)
            windows = sliding_window_view(padded, kernel, axis=axis)
            out = op(windows, axis=-1)
    return out


def erode(mask: np.ndarray, kernel: int = 3, iters: int = 1) -> np.ndarray:
    return _morph(mask, kernel, iters, np.all)


def dilate(mask: np.ndarray, kernel: int = 3, iters: int = 1) -> np.ndarray:
    return _morph(mask, kernel, iters, np.any)


def build_mask(img: np.ndarray, p: Optional[MaskParams] = None) -> np.ndarray:
    """Gray -> blur -> threshold -> erode -> dilate."""
    p = p or MaskParams()
    gray = to_grayscale(img)
    blurred = gaussian_blur(gray, p.blur_kernel, p.sigma)
    m = threshold(blurred, p.low, p.high)
    m = erode(m, p.morph_kernel, p.erode_iters)
    return dilate(m, p.morph_kernel, p.dilate_iters)
