"""Image quality metrics and the gauge-fixing helpers used to compare
reconstructions against references.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch


def mse(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def _ssim_window(win: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = win // 2
    g = np.exp(-0.5 * (np.arange(-half, half + 1) / sigma) ** 2)
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a: np.ndarray, b: np.ndarray, k1: float = 0.01, k2: float = 0.03,
         data_range: float = 1.0) -> float:
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), reflected borders."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    w = _ssim_window()
    conv = lambda img: ndimage.correlate(img, w, mode="reflect")
    mu_a = conv(a)
    mu_b = conv(b)
    e_aa = conv(a * a)
    e_bb = conv(b * b)
    e_ab = conv(a * b)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    s_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
    return float(s_map.mean())


def hist_equalize(image: np.ndarray, bins: int = 256) -> np.ndarray:
    """256-bin cumulative-histogram mapping onto [0, 1]; monotone
    non-decreasing. A constant image is returned unchanged."""
    lo = float(image.min())
    hi = float(image.max())
    if hi <= lo:
        return image.copy()
    idx = np.minimum(((image - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx.ravel(), minlength=bins)
    cdf = np.cumsum(counts) / image.size
    return cdf[idx]


def affine_fit(pred: np.ndarray, gt: np.ndarray) -> tuple[float, float]:
    """Least-squares (alpha, beta) minimizing ||alpha*pred + beta - gt||^2.

    A constant pred is a degenerate fit: alpha = 0, beta = mean(gt).
    """
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"{pred.shape} vs {gt.shape}")
    pm = float(pred.mean())
    gm = float(gt.mean())
    dp = pred - pm
    var = float(np.mean(dp * dp))
    if np.ptp(pred) == 0 or var == 0.0:
        return 0.0, gm
    cov = float(np.mean(dp * (gt - gm)))
    alpha = cov / var
    return alpha, gm - alpha * pm


def align_mean_scale(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """pred mapped through its least-squares affine fit onto gt."""
    alpha, beta = affine_fit(pred, gt)
    return alpha * pred + beta


def format_metrics(values: dict[str, float]) -> str:
    return "\n".join(f"{k}={v!r}" for k, v in values.items()) + "\n"
