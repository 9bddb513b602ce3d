"""Gain-offset-gamma display model and exposure-window placement.

The inverse model maps scene radiance to display-encoded values for one
exposure; sweeping the exposure across the scene's log-luminance range turns
an HDR image into a stack of LDR images.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DegenerateInputError
from .imageio import HdrImage, LdrImage

STOPS_PER_WINDOW = 8.0 / 3.0
# radiance floor used before taking log2
LUMINANCE_FLOOR = 2.0 ** -30
LOW_PERCENTILE = 0.1
HIGH_PERCENTILE = 99.9
# slack on the window count so l1 - l0 = 8/3 (up to rounding) still gives one window
_COUNT_SLACK = 1e-9


@dataclass(frozen=True)
class DisplayModel:
    gamma: float = 2.2
    black_level: float = 1.0 / 128.0
    l_min: float = 1.0
    l_max: float = 200.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ArgumentError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.black_level < 1:
            raise ArgumentError(f"black level must lie in (0, 1), got {self.black_level}")
        if not 0 < self.l_min < self.l_max:
            raise ArgumentError(f"need 0 < l_min < l_max, got {self.l_min}, {self.l_max}")

    def window_size_stops(self):
        return math.log2(self.l_max / self.l_min)

    def to_dict(self):
        return {"gamma": self.gamma, "black_level": self.black_level,
                "l_min": self.l_min, "l_max": self.l_max}


@dataclass(frozen=True)
class WindowPlan:
    """Window endpoints (log2 radiance) and the matching exposure gains."""

    l0: float
    l1: float
    endpoints: tuple
    exposures: tuple = field(default=None)
    shape: tuple = None

    def __post_init__(self):
        endpoints = tuple(float(e) for e in self.endpoints)
        if not endpoints:
            raise ArgumentError("a window plan needs at least one window")
        if any(b <= a for a, b in zip(endpoints, endpoints[1:])):
            raise ArgumentError("window endpoints must be strictly increasing")
        object.__setattr__(self, "endpoints", endpoints)
        if self.exposures is None:
            object.__setattr__(self, "exposures", tuple(2.0 ** -e for e in endpoints))
        else:
            exposures = tuple(float(v) for v in self.exposures)
            if len(exposures) != len(endpoints) or min(exposures) <= 0:
                raise ArgumentError("exposures must be positive, one per window")
            object.__setattr__(self, "exposures", exposures)

    @property
    def count(self):
        return len(self.endpoints)

    @classmethod
    def from_exposures(cls, exposures):
        """Plan for externally chosen gains (e.g. the LDR path)."""
        exposures = sorted((float(v) for v in exposures), reverse=True)
        endpoints = [-math.log2(v) for v in exposures]
        return cls(l0=endpoints[0] - STOPS_PER_WINDOW, l1=endpoints[-1],
                   endpoints=endpoints, exposures=exposures)

    def to_dict(self):
        return {"l0": self.l0, "l1": self.l1, "count": self.count,
                "endpoints": list(self.endpoints), "exposures": list(self.exposures)}


@dataclass(frozen=True, eq=False)
class ExposureStack:
    exposures: tuple
    images: tuple
    plan: WindowPlan = None

    def __len__(self):
        return len(self.images)

    def __iter__(self):
        return iter(zip(self.exposures, self.images))

    def __getitem__(self, k):
        return self.images[k]


def _as_hdr_array(h):
    return h.data if isinstance(h, HdrImage) else np.asarray(h, dtype=np.float64)


def inverse_display_array(radiance, v, model):
    """Array form of :func:`inverse_display`; no container validation."""
    b = model.black_level
    x = np.clip((radiance * v - b) / (1.0 - b), 0.0, 1.0)
    return x ** (1.0 / model.gamma)


def inverse_display(h, v, model=None):
    """Map radiance to display-encoded values at exposure gain ``v``.

    Per channel: ``clamp((H*v - b) / (1 - b), 0, 1) ** (1/gamma)``.
    """
    model = model or DisplayModel()
    if not (v > 0 and math.isfinite(v)):
        raise ArgumentError(f"exposure gain must be positive and finite, got {v}")
    return LdrImage(inverse_display_array(_as_hdr_array(h), v, model))


def forward_display(p, model=None, scale=True):
    """Display-encoded values back to luminance, ``(1 - b) P**gamma + b``.

    With ``scale`` the result is multiplied by ``l_max`` so a full-white
    pixel lands on the display peak; inverting at ``v = 1 / l_max`` then
    returns ``p`` exactly (up to rounding).
    """
    model = model or DisplayModel()
    data = p.data if isinstance(p, LdrImage) else LdrImage(p).data
    b = model.black_level
    lum = (1.0 - b) * data ** model.gamma + b
    if scale:
        lum = lum * model.l_max
    return HdrImage(lum)


def scene_luminance(h):
    """Per-pixel max over RGB."""
    return _as_hdr_array(h).max(axis=2)


def log_luminance_range(h):
    """Robust (l0, l1): log2 of the 0.1% / 99.9% percentiles of positive luminance."""
    lum = scene_luminance(h).ravel()
    lum = lum[lum > 0]
    if lum.size == 0:
        raise DegenerateInputError("image has no pixel with positive luminance")
    lum = np.maximum(lum, LUMINANCE_FLOOR)
    lo, hi = np.percentile(lum, [LOW_PERCENTILE, HIGH_PERCENTILE])
    return math.log2(lo), math.log2(hi)


def window_count(l0, l1):
    return max(1, math.ceil(3.0 * (l1 - l0) / 8.0 - _COUNT_SLACK))


def plan_windows(h, model=None):
    """Place windows every 8/3 stops from the scene's dark end.

    Endpoint of window ``k`` (1-based) is ``l0 + 8/3 * k`` and its gain is
    ``2 ** -endpoint``; enough windows are used to reach ``l1``.
    """
    l0, l1 = log_luminance_range(h)
    count = window_count(l0, l1)
    endpoints = [l0 + STOPS_PER_WINDOW * k for k in range(1, count + 1)]
    return WindowPlan(l0=l0, l1=l1, endpoints=endpoints, shape=_as_hdr_array(h).shape[:2])


def decompose(h, plan, model=None):
    """Render the HDR image at every exposure in ``plan``."""
    model = model or DisplayModel()
    data = _as_hdr_array(h)
    if plan.shape is not None and tuple(plan.shape) != data.shape[:2]:
        raise ArgumentError(f"plan made for a {plan.shape} image, got {data.shape[:2]}")
    images = tuple(inverse_display(data, v, model) for v in plan.exposures)
    return ExposureStack(exposures=plan.exposures, images=images, plan=plan)
