"""Full-reference HDR image quality assessment through inverse-display exposure stacks."""

__version__ = "0.1.0"

from .bench import plcc_logistic, read_manifest, run_benchmark, srcc
from .compensate import CompensationConfig, QualityReport, compensate_window, score_hdr, score_ldr
from .display import (DisplayModel, ExposureStack, WindowPlan, decompose, forward_display,
                      inverse_display, plan_windows)
from .errors import (ArgumentError, FormatError, HdrIqaError, NumericalError,
                     UnsupportedMetricError)
from .imageio import HdrImage, LdrImage, read_hdr, read_image, read_ldr, write_hdr, write_ldr
from .metrics import (BaseMetric, finalize_score, get_metric, local_map_mae, local_map_sqerr,
                      local_map_ssim)
from .pooling import AggregationConfig, WeightField, aggregate, pool_exposure, well_exposedness

__all__ = [
    "AggregationConfig",
    "ArgumentError",
    "BaseMetric",
    "CompensationConfig",
    "DisplayModel",
    "ExposureStack",
    "FormatError",
    "HdrImage",
    "HdrIqaError",
    "LdrImage",
    "NumericalError",
    "QualityReport",
    "UnsupportedMetricError",
    "WeightField",
    "WindowPlan",
    "aggregate",
    "compensate_window",
    "decompose",
    "finalize_score",
    "forward_display",
    "get_metric",
    "inverse_display",
    "local_map_mae",
    "local_map_sqerr",
    "local_map_ssim",
    "plan_windows",
    "plcc_logistic",
    "pool_exposure",
    "read_hdr",
    "read_image",
    "read_ldr",
    "read_manifest",
    "run_benchmark",
    "score_hdr",
    "score_ldr",
    "srcc",
    "well_exposedness",
    "write_hdr",
    "write_ldr",
]
