"""Derivative-free 1-D maximization: coarse grid pre-scan plus golden-section refinement."""

import math
from dataclasses import dataclass

from .errors import ArgumentError, NumericalError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0
DEFAULT_PRESCAN = 33


@dataclass(frozen=True)
class SearchResult:
    x: float
    value: float
    evaluations: int


class _Counted:
    """Wraps the objective: counts calls, rejects non-finite values, tracks the best point."""

    def __init__(self, f):
        self.f = f
        self.evaluations = 0
        self.best_x = None
        self.best_value = -math.inf

    def __call__(self, x):
        value = float(self.f(x))
        self.evaluations += 1
        if not math.isfinite(value):
            raise NumericalError(f"objective is {value} at x = {x!r}")
        # ties go to the point nearer the origin so flat objectives keep x = 0
        if value > self.best_value or (value == self.best_value and abs(x) < abs(self.best_x)):
            self.best_x, self.best_value = x, value
        return value


def golden_section_max(f, a, b, tol=1e-4, max_evals=200):
    """Maximize ``f`` on ``[a, b]`` assuming it is unimodal there.

    Returns the best point evaluated once the bracket is narrower than
    ``tol`` or the evaluation budget is spent.
    """
    if not b > a:
        raise ArgumentError(f"empty search interval [{a}, {b}]")
    g = f if isinstance(f, _Counted) else _Counted(f)
    start = g.evaluations
    h = b - a
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    fc = g(c)
    fd = g(d)
    while h > tol and g.evaluations - start < max_evals:
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + INV_PHI2 * h
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = g(d)
    return SearchResult(g.best_x, g.best_value, g.evaluations - start)


def prescan_offsets(halfwidth, points=DEFAULT_PRESCAN):
    """Symmetric grid on ``[-halfwidth, halfwidth]`` that contains 0 exactly."""
    if points < 3:
        raise ArgumentError("pre-scan needs at least 3 points")
    if points % 2 == 0:
        points -= 1
    m = (points - 1) // 2
    return [halfwidth * (j - m) / m for j in range(points)]


def maximize_bracketed(f, halfwidth, tol=1e-4, max_evals=200, prescan=DEFAULT_PRESCAN,
                       levels=2):
    """Maximize ``f`` over ``[-halfwidth, halfwidth]``.

    A coarse grid (always containing 0) picks the best cell pair; each
    further level re-scans that pair with a grid of the same size, and
    golden-section search refines the final one. The objectives this is used
    for have cusps (pixels leaving the black-level clamp), so a single coarse
    level is not enough to isolate the global peak.

    The returned point is the best of every evaluation, so ``value >= f(0)``.
    """
    if not halfwidth > 0:
        raise ArgumentError(f"search half-width must be positive, got {halfwidth}")
    if max_evals < 3:
        raise ArgumentError("max_evals must be at least 3")
    g = _Counted(f)
    center, radius = 0.0, float(halfwidth)
    for level in range(max(1, levels)):
        budget = max_evals - g.evaluations
        if budget < 3 or radius <= tol:
            break
        offsets = prescan_offsets(radius, min(prescan, budget))
        if level:
            # keep refinement inside the search range
            grid = [center + x for x in offsets if abs(center + x) <= halfwidth]
        else:
            grid = offsets
        values = [g(x) for x in grid]
        j = max(range(len(grid)), key=lambda i: (values[i], -abs(grid[i])))
        center = grid[j]
        radius = offsets[1] - offsets[0]
    lo = max(center - radius, -halfwidth)
    hi = min(center + radius, halfwidth)
    remaining = max_evals - g.evaluations
    if remaining >= 2 and hi - lo > tol:
        golden_section_max(g, lo, hi, tol=tol, max_evals=remaining)
    return SearchResult(g.best_x, g.best_value, g.evaluations)
