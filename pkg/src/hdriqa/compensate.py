"""HDR scoring pipeline with optional luminance-shift compensation.

Both images are rendered into exposure stacks; each test exposure can be
re-tuned (in stops, independently per window) to maximize its pooled score
against the fixed reference exposure.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .display import (DisplayModel, WindowPlan, decompose, forward_display,
                      inverse_display_array, plan_windows)
from .errors import ArgumentError
from .imageio import HdrImage, LdrImage
from .metrics import get_metric
from .pooling import DEFAULT_EPSILON, AggregationConfig, aggregate, pool_exposure, well_exposedness
from .search import maximize_bracketed

log = logging.getLogger(__name__)

COMPENSATION_MODES = ("none", "optimize", "paired")
THREADS_ENV = "HDRIQA_THREADS"


@dataclass(frozen=True)
class CompensationConfig:
    """How test-side exposures are chosen.

    ``none`` and ``paired`` both reuse the reference exposures; ``paired`` is
    the name to use when the score serves as a training loss.
    """

    mode: str = "optimize"
    search_halfwidth: float = 4.0
    tolerance: float = 1e-4
    max_evals: int = 200

    def __post_init__(self):
        if self.mode not in COMPENSATION_MODES:
            raise ArgumentError(f"unknown compensation mode {self.mode!r}")
        if not self.search_halfwidth > 0:
            raise ArgumentError("search half-width must be positive")
        if not self.tolerance > 0:
            raise ArgumentError("tolerance must be positive")
        if self.max_evals < 3:
            raise ArgumentError("max_evals must be at least 3")

    def to_dict(self):
        return {"mode": self.mode, "search_halfwidth": self.search_halfwidth,
                "tolerance": self.tolerance, "max_evals": self.max_evals}


@dataclass(frozen=True)
class WindowScore:
    k: int
    v: float
    v_hat: float
    score: float
    uncompensated: float
    evaluations: int

    @property
    def gain(self):
        return self.score - self.uncompensated

    @property
    def shift_stops(self):
        return math.log2(self.v_hat / self.v)


@dataclass(frozen=True)
class CompensationResult:
    optimized_exposures: tuple
    per_window_gain: tuple
    evaluations: int


@dataclass(frozen=True)
class QualityReport:
    metric: str
    score: float
    pooled: float
    uncompensated_pooled: float
    windows: tuple
    plan: WindowPlan
    global_weights: tuple
    compensation: CompensationConfig
    model: DisplayModel
    epsilon: float
    extras: dict = field(default_factory=dict)

    @property
    def per_exposure(self):
        return [w.score for w in self.windows]

    @property
    def optimized_exposures(self):
        return [w.v_hat for w in self.windows]

    def compensation_result(self):
        return CompensationResult(
            optimized_exposures=tuple(self.optimized_exposures),
            per_window_gain=tuple(w.gain for w in self.windows),
            evaluations=sum(w.evaluations for w in self.windows),
        )

    def to_dict(self):
        metric = get_metric(self.metric)
        return {
            "metric": self.metric,
            "Q": self.score,
            "Q_pooled": self.pooled,
            "Q_uncompensated": metric.finalize(self.uncompensated_pooled),
            "per_window": [
                {"k": w.k, "v": w.v, "v_hat": w.v_hat, "shift_stops": w.shift_stops,
                 "Q_k": w.score, "Q_k_final": metric.finalize(w.score),
                 "Q_k_uncompensated": w.uncompensated, "G_k": g,
                 "evaluations": w.evaluations}
                for w, g in zip(self.windows, self.global_weights)
            ],
            "plan": self.plan.to_dict(),
            "config": {
                "display": self.model.to_dict(),
                "compensation": self.compensation.to_dict(),
                "epsilon": self.epsilon,
                "global_weights": list(self.global_weights),
                **self.extras,
            },
        }


def _thread_count(workers):
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _as_hdr(x):
    return x if isinstance(x, HdrImage) else HdrImage(x)


def _window_objective(ref_ldr, test_data, v, weights_k, metric, model):
    """Pooled score of the test rendered ``t`` stops away from ``v``."""
    ref_data = getattr(ref_ldr, "data", ref_ldr)

    def q(t):
        rendered = inverse_display_array(test_data, v * 2.0 ** t, model)
        return pool_exposure(metric.local_map(ref_data, rendered), weights_k)

    return q


def _search_window(ref_ldr, test_data, v, weights_k, metric, model, config):
    q = _window_objective(ref_ldr, test_data, v, weights_k, metric, model)
    baseline = q(0.0)
    if config.mode != "optimize":
        return v, baseline, baseline, 1
    res = maximize_bracketed(q, config.search_halfwidth, tol=config.tolerance,
                             max_evals=config.max_evals)
    if res.value < baseline:  # cannot happen: 0 is on the pre-scan grid
        return v, baseline, baseline, res.evaluations + 1
    return v * 2.0 ** res.x, res.value, baseline, res.evaluations + 1


def compensate_window(ref_ldr, test_hdr, v, weights_k, metric="ssim", model=None, config=None):
    """Best test exposure for one window; returns ``(v_hat, score)``.

    The search runs over ``log2(v) +- search_halfwidth`` stops. The starting
    exposure is always evaluated, so ``score`` is never below the
    uncompensated one.
    """
    if not v > 0:
        raise ArgumentError(f"exposure gain must be positive, got {v}")
    model = model or DisplayModel()
    config = config or CompensationConfig()
    metric = get_metric(metric)
    test_data = _as_hdr(test_hdr).data
    v_hat, score, _, _ = _search_window(ref_ldr, test_data, v, weights_k, metric, model, config)
    return v_hat, score


def score_hdr(ref, test, metric="ssim", model=None, comp=None, agg=None, *,
              plan=None, epsilon=DEFAULT_EPSILON, workers=None):
    """Score ``test`` against ``ref`` through their exposure stacks.

    Windows are planned on the reference, weights come from the reference
    stack, and each window's pooled score is (optionally) maximized over the
    test exposure before the global weighted sum.
    """
    ref, test = _as_hdr(ref), _as_hdr(test)
    if ref.shape != test.shape:
        raise ArgumentError(f"image dimensions differ: {ref.shape} vs {test.shape}")
    model = model or DisplayModel()
    comp = comp or CompensationConfig()
    agg = agg or AggregationConfig()
    metric = get_metric(metric)
    if min(ref.shape[:2]) < metric.min_size:
        raise ArgumentError(f"{metric.identifier} needs images of at least "
                            f"{metric.min_size}x{metric.min_size}")

    plan = plan or plan_windows(ref, model)
    g = agg.resolve(plan.count)
    ref_stack = decompose(ref, plan, model)
    weights = well_exposedness(ref_stack, epsilon).cropped(metric.border)

    def run(k):
        return _search_window(ref_stack[k], test.data, plan.exposures[k], weights[k],
                              metric, model, comp)

    threads = _thread_count(workers)
    if threads > 1 and plan.count > 1:
        with ThreadPoolExecutor(max_workers=min(threads, plan.count)) as pool:
            results = list(pool.map(run, range(plan.count)))
    else:
        results = [run(k) for k in range(plan.count)]

    windows = tuple(
        WindowScore(k=k + 1, v=plan.exposures[k], v_hat=v_hat, score=score,
                    uncompensated=base, evaluations=n)
        for k, (v_hat, score, base, n) in enumerate(results)
    )
    agg = AggregationConfig(g)
    pooled = aggregate([w.score for w in windows], agg)
    uncompensated = aggregate([w.uncompensated for w in windows], agg)
    report = QualityReport(
        metric=metric.identifier, score=metric.finalize(pooled), pooled=pooled,
        uncompensated_pooled=uncompensated, windows=windows, plan=plan,
        global_weights=tuple(g), compensation=comp, model=model, epsilon=float(epsilon),
    )
    log.debug("%s: Q=%.6g over %d windows", metric.identifier, report.score, plan.count)
    return report


def score_ldr(ref, test, metric="ssim", model=None, *, epsilon=DEFAULT_EPSILON):
    """Score two display-encoded images through the HDR pipeline.

    Both go through the forward display model (peak scaled to ``l_max``)
    and are rendered back at the single matched exposure ``1 / l_max``, so
    the result equals the base metric on the original pair.
    """
    model = model or DisplayModel()
    ref = ref if isinstance(ref, LdrImage) else LdrImage(ref)
    test = test if isinstance(test, LdrImage) else LdrImage(test)
    if ref.shape != test.shape:
        raise ArgumentError(f"image dimensions differ: {ref.shape} vs {test.shape}")
    ref_h = forward_display(ref, model)
    test_h = forward_display(test, model)
    plan = WindowPlan.from_exposures([1.0 / model.l_max])
    plan = WindowPlan(l0=plan.l0, l1=plan.l1, endpoints=plan.endpoints,
                      exposures=plan.exposures, shape=ref.shape[:2])
    report = score_hdr(ref_h, test_h, metric, model, CompensationConfig(mode="paired"),
                       plan=plan, epsilon=epsilon)
    report.extras["input"] = "ldr"
    return report
