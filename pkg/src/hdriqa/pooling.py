"""Well-exposedness weights, per-exposure pooling and cross-exposure aggregation."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError

DEFAULT_EPSILON = 1e-5
WELL_EXPOSED_LOW = 0.1
WELL_EXPOSED_HIGH = 0.9


@dataclass(frozen=True, eq=False)
class WeightField:
    """Per-exposure weight maps, shape ``(K, H, W)``.

    ``raw`` holds the 1-or-epsilon indicator, ``weights`` the same maps
    normalized to sum to one across exposures at every pixel.
    """

    raw: np.ndarray
    weights: np.ndarray
    epsilon: float

    def __len__(self):
        return self.weights.shape[0]

    def __getitem__(self, k):
        return self.weights[k]

    def cropped(self, border):
        if border == 0:
            return self
        if 2 * border >= min(self.raw.shape[1:]):
            raise ArgumentError("crop border larger than the weight field")
        raw = self.raw[:, border:-border, border:-border]
        return WeightField(raw=raw, weights=_normalize(raw), epsilon=self.epsilon)


def _normalize(raw):
    return raw / raw.sum(axis=0, keepdims=True)


def well_exposedness(ref_stack, epsilon=DEFAULT_EPSILON):
    """Binary-with-floor exposure weights computed on the reference stack.

    A pixel gets weight 1 at exposure k when its max-channel value lies in
    [0.1, 0.9] (inclusive), epsilon otherwise.
    """
    images = [getattr(im, "data", im) for im in getattr(ref_stack, "images", ref_stack)]
    if not images:
        raise ArgumentError("empty exposure stack")
    if not epsilon > 0:
        raise ArgumentError(f"epsilon must be positive, got {epsilon}")
    lum = np.stack([np.asarray(im, dtype=np.float64).max(axis=2) for im in images])
    well = (lum >= WELL_EXPOSED_LOW) & (lum <= WELL_EXPOSED_HIGH)
    raw = np.where(well, 1.0, float(epsilon))
    return WeightField(raw=raw, weights=_normalize(raw), epsilon=float(epsilon))


def center_crop(arr, shape):
    h, w = arr.shape[:2]
    th, tw = shape[:2]
    if th > h or tw > w or (h - th) % 2 or (w - tw) % 2:
        raise ArgumentError(f"cannot center-crop {arr.shape[:2]} to {tuple(shape[:2])}")
    top, left = (h - th) // 2, (w - tw) // 2
    return arr[top:top + th, left:left + tw]


def pool_exposure(qmap, weights):
    """Weighted mean of a quality map: sum(W*Q) / sum(W).

    Weights larger than the map (valid-region metrics) are center-cropped.
    """
    qmap = np.asarray(qmap, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != qmap.shape:
        weights = center_crop(weights, qmap.shape)
    # np.sum is pairwise over a fixed layout, so results do not depend on threading
    total = float(np.sum(weights))
    if not total > 0:
        raise DegenerateInputError("pooling weights sum to zero")
    return float(np.sum(weights * qmap)) / total


@dataclass(frozen=True)
class AggregationConfig:
    """Global per-exposure weights; ``None`` means uniform 1/K."""

    global_weights: tuple = None

    def __post_init__(self):
        if self.global_weights is None:
            return
        g = tuple(float(x) for x in self.global_weights)
        if not g or any(x < 0 or not math.isfinite(x) for x in g):
            raise ArgumentError("global weights must be finite and nonnegative")
        total = math.fsum(g)
        if abs(total - 1.0) > 1e-6:
            raise ArgumentError(f"global weights must sum to 1, got {total}")
        object.__setattr__(self, "global_weights", tuple(x / total for x in g))

    def resolve(self, count):
        if self.global_weights is None:
            return (1.0 / count,) * count
        if len(self.global_weights) != count:
            raise ArgumentError(f"{len(self.global_weights)} global weights given "
                                f"for {count} exposures")
        return self.global_weights

    @classmethod
    def parse(cls, text):
        """From a comma-separated CLI string such as ``"0.5,0.3,0.2"``."""
        if text is None or not text.strip():
            return cls()
        try:
            values = [float(x) for x in text.split(",")]
        except ValueError:
            raise ArgumentError(f"cannot parse global weights {text!r}") from None
        return cls(tuple(values))


def aggregate(per_exposure, config=None):
    """Weighted sum of per-exposure scores with the global weights."""
    scores = [float(q) for q in per_exposure]
    if not scores:
        raise ArgumentError("no per-exposure scores to aggregate")
    g = (config or AggregationConfig()).resolve(len(scores))
    return math.fsum(gk * qk for gk, qk in zip(g, scores))
