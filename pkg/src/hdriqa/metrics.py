"""Base LDR quality metrics as per-pixel quality maps (higher is better).

Every map is single-channel: the metric is computed per RGB channel and
averaged. SSIM's map only covers the filter's valid region, so it is
``2 * border`` pixels smaller along each axis.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ArgumentError, UnsupportedMetricError
from .imageio import LdrImage

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PSNR_CAP_DB = 120.0
_MSE_FLOOR = 1e-12


def _pair(ref, test):
    a = ref.data if isinstance(ref, LdrImage) else np.asarray(ref, dtype=np.float64)
    b = test.data if isinstance(test, LdrImage) else np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise ArgumentError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return a, b


def local_map_mae(ref, test):
    """Negated per-pixel absolute error, averaged over channels."""
    a, b = _pair(ref, test)
    return -np.abs(a - b).mean(axis=2)


def local_map_sqerr(ref, test):
    """Negated per-pixel squared error, averaged over channels."""
    a, b = _pair(ref, test)
    d = a - b
    return -(d * d).mean(axis=2)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _valid_filter(x, kernel, border):
    # filter values inside the valid region never touch the padding, so the mode is irrelevant
    y = correlate1d(x, kernel, axis=0, mode="constant")
    y = correlate1d(y, kernel, axis=1, mode="constant")
    return y[border:-border, border:-border] if border else y


def ssim_channel_maps(a, b, c1, c2, window=SSIM_WINDOW, sigma=SSIM_SIGMA):
    """Per-channel SSIM maps of shape ``(H - window + 1, W - window + 1, C)``."""
    border = window // 2
    kernel = gaussian_window(window, sigma)
    mu_a = _valid_filter(a, kernel, border)
    mu_b = _valid_filter(b, kernel, border)
    var_a = _valid_filter(a * a, kernel, border) - mu_a * mu_a
    var_b = _valid_filter(b * b, kernel, border) - mu_b * mu_b
    cov = _valid_filter(a * b, kernel, border) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def local_map_ssim(ref, test, peak=1.0):
    """Single-scale SSIM map (11x11 Gaussian, sigma 1.5) over the valid region."""
    a, b = _pair(ref, test)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ArgumentError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, "
                            f"got {a.shape[1]}x{a.shape[0]}")
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    return ssim_channel_maps(a, b, c1, c2).mean(axis=2)


def _finalize_identity(pooled):
    return float(pooled)


def _finalize_psnr(pooled):
    mse = max(-float(pooled), _MSE_FLOOR)
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP_DB)


@dataclass(frozen=True)
class BaseMetric:
    """A pluggable quality model: a local map plus a pooled-score finalizer.

    ``border`` is how many pixels the map loses on each side relative to the
    input images; pooling crops weight fields by the same amount.
    """

    identifier: str
    local_map: callable = field(repr=False)
    finalize: callable = field(repr=False, default=_finalize_identity)
    border: int = 0
    min_size: int = 1

    def map_shape(self, image_shape):
        h, w = image_shape[:2]
        return h - 2 * self.border, w - 2 * self.border


METRICS = {
    "mae": BaseMetric("mae", local_map_mae),
    "psnr-mse": BaseMetric("psnr-mse", local_map_sqerr, _finalize_psnr),
    "ssim": BaseMetric("ssim", local_map_ssim, border=SSIM_WINDOW // 2, min_size=SSIM_WINDOW),
}
# need pretrained networks; names are reserved so the interface stays stable
RESERVED_METRICS = ("lpips", "dists")
_ALIASES = {"psnr": "psnr-mse", "mse": "psnr-mse"}


def get_metric(name):
    if isinstance(name, BaseMetric):
        return name
    key = _ALIASES.get(name.lower(), name.lower())
    if key in METRICS:
        return METRICS[key]
    if key in RESERVED_METRICS:
        raise UnsupportedMetricError(f"metric {name!r} requires a pretrained network "
                                     "and is not available")
    raise UnsupportedMetricError(f"unknown metric {name!r}; choose from {sorted(METRICS)}")


def finalize_score(metric, pooled):
    """Convert a pooled map score into the conventionally reported number.

    MAE and SSIM pass through; for PSNR the pooled value is a negated MSE
    and becomes ``10 log10(1 / MSE)`` dB, capped at 120 dB.
    """
    return get_metric(metric).finalize(pooled)


def direct_score(metric, ref, test):
    """Plain full-image score of the base metric, without any HDR machinery."""
    metric = get_metric(metric)
    return metric.finalize(float(np.mean(metric.local_map(ref, test))))
