import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


def make_scene(rng, size=32, stops=8.0, floor=2.0 ** -8):
    """Smooth synthetic HDR scene whose luminance spans about ``stops`` stops.

    Max-channel luminance runs from ``floor`` to ``floor * 2**stops``.
    """
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1.0)
    base = 0.5 * (xx + yy) + 0.1 * np.sin(6 * xx) * np.cos(5 * yy)
    base = (base - base.min()) / (base.max() - base.min())
    texture = 0.15 * rng.standard_normal((size, size))
    log_lum = np.clip(base + texture, 0.0, 1.0) * stops
    lum = floor * 2.0 ** log_lum
    tint = rng.uniform(0.6, 1.0, (size, size, 3))
    tint /= tint.max(axis=2, keepdims=True)
    return lum[..., None] * tint


def two_level_scene(l0, stops, size=16):
    """Half the pixels at 2**l0, half at 2**(l0 + stops): robust percentiles hit both exactly."""
    img = np.full((size, size, 3), 2.0 ** l0)
    img[size // 2:] = 2.0 ** (l0 + stops)
    return img


def add_noise(img, sigma, rng):
    return np.clip(img + sigma * rng.standard_normal(img.shape), 0.0, None)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def scene(rng):
    return make_scene(rng)
