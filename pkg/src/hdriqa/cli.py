"""Command-line entry point: ``hdriqa score | stack | benchmark``.

Exit codes: 0 success, 2 bad arguments or unsupported input combination,
3 unreadable or malformed files, 4 numerical failure.
"""

import functools
import json
import logging
import os
import sys

import click

from . import __version__
from .bench import InsufficientDataError, read_manifest, run_benchmark
from .compensate import COMPENSATION_MODES, CompensationConfig, score_hdr, score_ldr
from .display import DisplayModel, decompose, plan_windows
from .errors import ArgumentError, FormatError, HdrIqaError, NumericalError
from .imageio import HdrImage, LdrImage, read_hdr, read_image, write_ldr
from .pooling import DEFAULT_EPSILON, AggregationConfig

log = logging.getLogger("hdriqa")

EXIT_OK = 0
EXIT_ARGUMENT = 2
EXIT_FORMAT = 3
EXIT_NUMERICAL = 4

FORMAT_CHOICES = ["radiance-rgbe", "hdr", "pfm", "png"]
METRIC_CHOICES = ["mae", "psnr", "ssim"]


def _exit_code(exc):
    if isinstance(exc, ArgumentError):
        return EXIT_ARGUMENT
    if isinstance(exc, (FormatError, OSError)):
        return EXIT_FORMAT
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return 1


def _handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (HdrIqaError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(_exit_code(exc))
    return wrapper


def display_options(func):
    opts = [
        click.option("--gamma", type=float, default=2.2, show_default=True,
                     help="Display gamma."),
        click.option("--black-level", type=float, default=1.0 / 128.0, show_default=True,
                     help="Black-level fraction b."),
        click.option("--lmax", type=float, default=200.0, show_default=True,
                     help="Display peak luminance (cd/m^2)."),
        click.option("--lmin", type=float, default=1.0, show_default=True,
                     help="Display minimum luminance (cd/m^2)."),
    ]
    for opt in reversed(opts):
        func = opt(func)
    return func


def scoring_options(func):
    opts = [
        click.option("--metric", type=click.Choice(METRIC_CHOICES), default="ssim",
                     show_default=True, help="Base LDR metric."),
        click.option("--epsilon", type=float, default=DEFAULT_EPSILON, show_default=True,
                     help="Weight of badly exposed pixels."),
        click.option("--global-weights", default=None,
                     help="Comma-separated per-window weights summing to 1 [default: uniform]."),
        click.option("--compensate", type=click.Choice(COMPENSATION_MODES), default="optimize",
                     show_default=True, help="Luminance-shift compensation mode."),
        click.option("--search-halfwidth", type=float, default=4.0, show_default=True,
                     help="Exposure search range around each window, in stops."),
        click.option("--tol", type=float, default=1e-4, show_default=True,
                     help="Exposure search tolerance, in stops."),
        click.option("--max-evals", type=int, default=200, show_default=True,
                     help="Objective evaluations per window."),
    ]
    for opt in reversed(opts):
        func = opt(func)
    return func


def _model(gamma, black_level, lmax, lmin):
    return DisplayModel(gamma=gamma, black_level=black_level, l_min=lmin, l_max=lmax)


def _emit(payload, output):
    text = json.dumps(payload, indent=2) + "\n"
    if output:
        with open(output, "w") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.version_option(__version__, prog_name="hdriqa")
@click.option("-v", "--verbose", count=True, help="Human-readable summary on stderr.")
@click.pass_context
def main(ctx, verbose):
    """Full-reference HDR image quality via inverse-display exposure stacks.

    Thread count for per-window and per-entry work is read from HDRIQA_THREADS.
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    logging.basicConfig(level=logging.DEBUG if verbose > 1 else
                        logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@main.command()
@click.argument("ref_path", type=click.Path(dir_okay=False))
@click.argument("test_path", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(FORMAT_CHOICES), default=None,
              help="Override format detection for both inputs.")
@scoring_options
@display_options
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report here instead of stdout.")
@click.option("--figure", type=click.Path(dir_okay=False), default=None,
              help="Also render a per-window score chart to this image file.")
@click.pass_context
@_handle_errors
def score(ctx, ref_path, test_path, fmt, metric, epsilon, global_weights, compensate,
          search_halfwidth, tol, max_evals, gamma, black_level, lmax, lmin, output, figure):
    """Score TEST_PATH against REF_PATH and print a JSON report."""
    model = _model(gamma, black_level, lmax, lmin)
    comp = CompensationConfig(mode=compensate, search_halfwidth=search_halfwidth,
                              tolerance=tol, max_evals=max_evals)
    agg = AggregationConfig.parse(global_weights)
    ref = read_image(ref_path, fmt)
    test = read_image(test_path, fmt)
    if isinstance(ref, LdrImage) and isinstance(test, LdrImage):
        report = score_ldr(ref, test, metric, model, epsilon=epsilon)
    elif isinstance(ref, HdrImage) and isinstance(test, HdrImage):
        report = score_hdr(ref, test, metric, model, comp, agg, epsilon=epsilon)
    else:
        raise ArgumentError("cannot score a mixed HDR/LDR pair; convert one side first")

    payload = report.to_dict()
    payload["inputs"] = {"ref": ref_path, "test": test_path}
    _emit(payload, output)
    if figure:
        from .plotting import plot_window_scores
        plot_window_scores(report, figure)
    if ctx.obj["verbose"]:
        click.echo(f"{payload['metric']}: Q = {report.score:.6g} "
                   f"(uncompensated {payload['Q_uncompensated']:.6g}, "
                   f"{report.plan.count} windows)", err=True)


@main.command()
@click.argument("hdr_path", type=click.Path(dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["radiance-rgbe", "hdr", "pfm"]),
              default=None, help="Override format detection.")
@display_options
@click.option("--figure", type=click.Path(dir_okay=False), default=None,
              help="Also render the window plan over the luminance histogram.")
@click.pass_context
@_handle_errors
def stack(ctx, hdr_path, out_dir, fmt, gamma, black_level, lmax, lmin, figure):
    """Write the exposure stack of HDR_PATH as PNGs plus a JSON sidecar."""
    model = _model(gamma, black_level, lmax, lmin)
    hdr = read_hdr(hdr_path, fmt)
    plan = plan_windows(hdr, model)
    images = decompose(hdr, plan, model)
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for k, (v, im) in enumerate(images, start=1):
        name = f"stack_k{k}_v{v:.6g}.png"
        write_ldr(im, os.path.join(out_dir, name))
        files.append(name)
    sidecar = {"input": hdr_path, "plan": plan.to_dict(), "display": model.to_dict(),
               "files": files}
    with open(os.path.join(out_dir, "stack.json"), "w") as f:
        f.write(json.dumps(sidecar, indent=2) + "\n")
    if figure:
        from .plotting import plot_window_plan
        plot_window_plan(hdr, plan, images, figure, model)
    if ctx.obj["verbose"]:
        click.echo(f"wrote {len(files)} exposures to {out_dir}", err=True)


@main.command()
@click.argument("manifest_path", type=click.Path(dir_okay=False))
@scoring_options
@display_options
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report here instead of stdout.")
@click.option("--figure", type=click.Path(dir_okay=False), default=None,
              help="Also render MOS vs score with the fitted logistic curve.")
@click.pass_context
@_handle_errors
def benchmark(ctx, manifest_path, metric, epsilon, global_weights, compensate,
              search_halfwidth, tol, max_evals, gamma, black_level, lmax, lmin, output, figure):
    """Score every pair in a CSV manifest (ref,test,mos[,format]) and report SRCC/PLCC."""
    model = _model(gamma, black_level, lmax, lmin)
    comp = CompensationConfig(mode=compensate, search_halfwidth=search_halfwidth,
                              tolerance=tol, max_evals=max_evals)
    agg = AggregationConfig.parse(global_weights)
    manifest = read_manifest(manifest_path)
    if not manifest.entries:
        raise ArgumentError("manifest has no entries")
    try:
        report = run_benchmark(manifest, metric, comp, model, agg, epsilon)
    except InsufficientDataError as exc:
        if exc.report is not None:
            _emit(exc.report, output)
        raise
    _emit(report, output)
    if figure:
        from .bench import LogisticFit
        from .plotting import plot_logistic_fit
        fit = None
        if report["logistic"]:
            fit = LogisticFit(tuple(report["logistic"]["beta"]), report["logistic"]["residual"],
                              report["logistic"]["monotone"])
        plot_logistic_fit([e["score"] for e in report["entries"]],
                          [e["mos"] for e in report["entries"]], fit, figure,
                          title=f"{report['name']} ({report['metric']})")
    if ctx.obj["verbose"]:
        click.echo(f"{report['n_scored']}/{report['n_entries']} scored; "
                   f"SRCC={report['srcc']} PLCC={report['plcc']}", err=True)


if __name__ == "__main__":
    main()
