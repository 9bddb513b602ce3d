"""Correlation benchmark: manifest ingestion, SRCC, and PLCC after a logistic fit."""

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from scipy.stats import rankdata

from .compensate import CompensationConfig, _thread_count, score_hdr, score_ldr
from .display import DisplayModel
from .errors import (ArgumentError, DegenerateInputError, FitError, FormatError, HdrIqaError,
                     UndefinedCorrelationError)
from .imageio import HdrImage, LdrImage, read_image
from .metrics import get_metric
from .pooling import DEFAULT_EPSILON, AggregationConfig

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("ref", "test", "mos")
LOGISTIC_STARTS = 8
LOGISTIC_MAXITER = 2000
MIN_PLCC_POINTS = 5


class InsufficientDataError(DegenerateInputError):
    """Fewer than two manifest entries could be scored."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


@dataclass(frozen=True)
class ManifestEntry:
    reference_path: str
    test_path: str
    mos: float
    format_hint: str = ""


@dataclass
class DatasetManifest:
    entries: list
    name: str = ""
    root: str = "."

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.join(self.root, path)


def read_manifest(path):
    """Parse a ``ref,test,mos[,format]`` CSV; paths are relative to the CSV's directory."""
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            fieldnames = [c.strip().lower() for c in (reader.fieldnames or [])]
            rows = list(reader)
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise FormatError(f"cannot read manifest ({exc})", path=path) from None
    missing = [c for c in MANIFEST_COLUMNS if c not in fieldnames]
    if missing:
        raise FormatError(f"manifest lacks column(s) {', '.join(missing)}", offset=0, path=path)

    entries = []
    for lineno, row in enumerate(rows, start=2):
        row = {k.strip().lower(): (v or "").strip() for k, v in row.items() if k is not None}
        try:
            mos = float(row["mos"])
        except ValueError:
            raise FormatError(f"line {lineno}: bad mos {row['mos']!r}", path=path) from None
        if not math.isfinite(mos):
            raise FormatError(f"line {lineno}: mos must be finite", path=path)
        entries.append(ManifestEntry(row["ref"], row["test"], mos, row.get("format", "")))
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return DatasetManifest(entries=entries, name=name, root=os.path.dirname(os.path.abspath(path)))


def write_manifest(manifest, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["ref", "test", "mos", "format"])
        for e in manifest.entries:
            w.writerow([e.reference_path, e.test_path, repr(e.mos), e.format_hint])


# ---------------------------------------------------------------------------
# correlation


def _pearson(x, y):
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def _check_pair(x, y, minimum):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ArgumentError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < minimum:
        raise ArgumentError(f"need at least {minimum} points, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ArgumentError("correlation inputs must be finite")
    return x, y


def srcc(x, y):
    """Spearman rank correlation; ties get their average rank."""
    x, y = _check_pair(x, y, 2)
    return _pearson(rankdata(x), rankdata(y))


def plcc(x, y):
    x, y = _check_pair(x, y, 2)
    return _pearson(x, y)


def logistic4(q, b1, b2, b3, b4):
    """``b1 * (1/2 - 1 / (1 + exp(b2 (q - b3)))) + b4``."""
    q = np.asarray(q, dtype=np.float64)
    return b1 * (0.5 - expit(-b2 * (q - b3))) + b4


@dataclass(frozen=True)
class LogisticFit:
    parameters: tuple
    residual: float
    monotone: bool
    starts: int = LOGISTIC_STARTS

    def __call__(self, q):
        return logistic4(q, *self.parameters)

    def to_dict(self):
        return {"beta": list(self.parameters), "residual": self.residual,
                "monotone": self.monotone}


def fit_logistic(objective, mos):
    """Least-squares four-parameter logistic fit, Nelder-Mead from 8 starts.

    Both variables are standardized before fitting, so the fit (and the
    PLCC computed from it) is unchanged by positive affine rescaling of the
    objective scores.
    """
    q, y = _check_pair(objective, mos, MIN_PLCC_POINTS)
    mq, sq = q.mean(), q.std()
    my, sy = y.mean(), y.std()
    if sq == 0 or sy == 0:
        raise UndefinedCorrelationError("cannot fit a logistic to constant data")
    z = (q - mq) / sq
    t = (y - my) / sy

    def sse(beta):
        r = logistic4(z, *beta) - t
        return float(np.dot(r, r))

    # centers at data quantiles, two slopes; amplitude and offset of each start
    # come from linear least squares so every start already fits the data's scale
    starts = []
    for p in (0.2, 0.4, 0.6, 0.8):
        b3 = float(np.quantile(z, p))
        for b2 in (1.0, 4.0):
            basis = np.column_stack([expit(b2 * (z - b3)) - 0.5, np.ones_like(z)])
            (b1, b4), *_ = np.linalg.lstsq(basis, t, rcond=None)
            starts.append((float(b1), b2, b3, float(b4)))
    opts = {"maxiter": LOGISTIC_MAXITER, "maxfev": 2 * LOGISTIC_MAXITER,
            "xatol": 1e-10, "fatol": 1e-14}
    best = None
    for x0 in starts:
        res = minimize(sse, x0, method="Nelder-Mead", options=opts)
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError("logistic fit diverged from every start")
    # restart from the best simplex vertex; Nelder-Mead often stalls early
    polished = minimize(sse, best.x, method="Nelder-Mead", options=opts)
    if np.isfinite(polished.fun) and polished.fun <= best.fun:
        best = polished

    b1, b2, b3, b4 = (float(b) for b in best.x)
    params = (sy * b1, b2 / sq, mq + sq * b3, sy * b4 + my)
    pred = logistic4(q, *params)
    residual = float(np.sum((pred - y) ** 2))
    order = np.argsort(q, kind="stable")
    steps = np.diff(pred[order])
    monotone = bool(b1 * b2 != 0 and (np.all(steps >= 0) or np.all(steps <= 0)))
    if not np.all(np.isfinite(pred)):
        raise FitError("logistic fit produced non-finite predictions", best_residual=residual)
    return LogisticFit(parameters=params, residual=residual, monotone=monotone,
                       starts=len(starts))


def plcc_logistic(objective, mos):
    """PLCC between the logistic-mapped objective scores and MOS."""
    fit = fit_logistic(objective, mos)
    pred = fit(np.asarray(objective, dtype=np.float64))
    if np.ptp(pred) == 0:
        raise FitError("logistic fit is flat", best_residual=fit.residual)
    return _pearson(pred, np.asarray(mos, dtype=np.float64)), fit


# ---------------------------------------------------------------------------
# benchmark


def _load(path, hint):
    return read_image(path, hint or None)


def score_pair(ref_path, test_path, metric, comp, model, agg, epsilon, format_hint=""):
    """Score one manifest pair, routing HDR/HDR and LDR/LDR pairs; mixed pairs are rejected."""
    hint = format_hint.strip().lower() if format_hint else ""
    if hint in ("", "auto"):
        hint = None
    ref = _load(ref_path, hint)
    test = _load(test_path, hint)
    if isinstance(ref, LdrImage) and isinstance(test, LdrImage):
        return score_ldr(ref, test, metric, model, epsilon=epsilon)
    if isinstance(ref, HdrImage) and isinstance(test, HdrImage):
        return score_hdr(ref, test, metric, model, comp, agg, epsilon=epsilon)
    raise ArgumentError("mixed HDR/LDR pair is not supported")


def run_benchmark(manifest, metric="ssim", comp=None, model=None, agg=None,
                  epsilon=DEFAULT_EPSILON, workers=None):
    """Score every manifest entry and correlate the scores with MOS.

    Entries that fail are logged, listed under ``failures`` and left out of
    the correlations. Raises :class:`InsufficientDataError` (with the partial
    report attached) when fewer than two entries succeed.
    """
    metric = get_metric(metric)
    comp = comp or CompensationConfig()
    model = model or DisplayModel()
    agg = agg or AggregationConfig()
    if not manifest.entries:
        raise ArgumentError("manifest has no entries")

    def run(i):
        e = manifest.entries[i]
        try:
            rep = score_pair(manifest.resolve(e.reference_path), manifest.resolve(e.test_path),
                             metric, comp, model, agg, epsilon, e.format_hint)
        except (HdrIqaError, OSError) as exc:
            return i, None, f"{type(exc).__name__}: {exc}"
        return i, rep, None

    threads = _thread_count(workers)
    indices = range(len(manifest.entries))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, indices))
    else:
        results = [run(i) for i in indices]

    entries, failures, scores, mos = [], [], [], []
    for i, rep, err in results:
        e = manifest.entries[i]
        row = {"index": i, "ref": e.reference_path, "test": e.test_path, "mos": e.mos}
        if err is not None:
            log.warning("entry %d (%s) skipped: %s", i, e.test_path, err)
            failures.append({**row, "error": err})
            continue
        row.update(score=rep.score, Q_uncompensated=rep.to_dict()["Q_uncompensated"],
                   windows=rep.plan.count, v_hat=list(rep.optimized_exposures))
        entries.append(row)
        scores.append(rep.score)
        mos.append(e.mos)

    report = {
        "name": manifest.name,
        "metric": metric.identifier,
        "n_entries": len(manifest.entries),
        "n_scored": len(entries),
        "entries": entries,
        "failures": failures,
        "srcc": None,
        "plcc": None,
        "logistic": None,
        "notes": [],
        "config": {"display": model.to_dict(), "compensation": comp.to_dict(),
                   "epsilon": epsilon,
                   "global_weights": None if agg.global_weights is None
                   else list(agg.global_weights)},
    }
    if len(entries) < 2:
        raise InsufficientDataError(f"only {len(entries)} of {len(manifest.entries)} "
                                    "entries could be scored", report)

    try:
        report["srcc"] = srcc(scores, mos)
    except UndefinedCorrelationError as exc:
        report["notes"].append(f"srcc undefined: {exc}")
    if len(entries) < MIN_PLCC_POINTS:
        report["notes"].append(f"plcc needs at least {MIN_PLCC_POINTS} scored entries")
    else:
        try:
            r, fit = plcc_logistic(scores, mos)
            report["plcc"] = r
            report["logistic"] = fit.to_dict()
        except (UndefinedCorrelationError, FitError) as exc:
            report["notes"].append(f"plcc undefined: {exc}")
    return report
