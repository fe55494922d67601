"""Command line entry point: ``dicluster <command> ...``.

Exit codes: 0 success, 2 input/output problem (including unreadable
rasters), 3 invalid parameters or data, 4 calibration hit its step cap.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, _kernels, datasets
from .bench import run_bench
from .core import RunParams, ValidationError, m_from_eta, scale_to_unit_cube
from .io import RasterFormatError, read_image, read_points_csv, write_image, write_labels_csv
from .packing import CalibrationError, calibrate_n_max
from .pipelines import SnapshotRecorder, cluster_points, emit_diagnostics, gaussian_blur, image_to_features, \
    segment_image

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_CALIBRATION = 0, 2, 3, 4

IMAGE_SUFFIXES = {".ppm", ".pnm", ".png", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg"}


def _add_run_flags(p: argparse.ArgumentParser, delta_default: float) -> None:
    p.add_argument("--delta", type=float, default=delta_default, help=f"interaction radius (default {delta_default})")
    dens = p.add_mutually_exclusive_group()
    dens.add_argument("--m", type=int, help="density threshold")
    dens.add_argument("--eta", type=float, help="relative density; m is derived from it")
    eps = p.add_mutually_exclusive_group()
    eps.add_argument("--epsilon-ratio", type=int, choices=(2, 4), default=2, help="epsilon = delta / ratio")
    eps.add_argument("--epsilon", type=float, help="absolute extraction cell size")
    p.add_argument("--n-max", type=int, default=10, help="number of steps (default 10)")
    p.add_argument("--threads", type=int, help="kernel threads (env DI_CLUSTER_THREADS, else all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dicluster", description="Density-induced consensus clustering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster a point CSV")
    p.add_argument("input")
    _add_run_flags(p, 0.1)
    p.add_argument("--absorb-outliers", action="store_true", help="assign noise to the nearest cluster")
    p.add_argument("--emit-diagnostics", action="store_true")
    p.add_argument("--out", default="dicluster_out", help="output directory")

    p = sub.add_parser("segment", help="segment a colour image")
    p.add_argument("input")
    _add_run_flags(p, 0.15)
    p.add_argument("--sigma", type=float, default=1.0, help="blur strength in pixels (default 1)")
    p.add_argument("--color-scaling", choices=("fixed", "minmax"), default="fixed")
    p.add_argument("--absorb-outliers", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--emit-diagnostics", action="store_true")
    p.add_argument("--out", default="dicluster_out", help="output directory")

    p = sub.add_parser("calibrate", help="find the step count that separates and packs all clusters")
    p.add_argument("input", help="point CSV or image")
    _add_run_flags(p, 0.1)
    p.add_argument("--sigma", type=float, default=1.0, help="blur for image input")
    p.add_argument("--cap", type=int, default=10000, help="maximum number of steps")

    p = sub.add_parser("bench", help="runtime scaling on uniform data")
    p.add_argument("--n", type=int, default=250_000, help="smallest size; 2N and 4N follow")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--delta", type=float, help="fixed delta (default: smallest in the linear regime)")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("--no-dbscan", action="store_true")
    p.add_argument("--out", help="directory for bench.csv")

    p = sub.add_parser("generate", help="write a bundled synthetic data set")
    p.add_argument("name", choices=sorted(datasets.GENERATORS) + ["cluttered", "two_tone"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file (.csv for points, .ppm for images)")
    return parser


def _apply_threads(arg) -> int:
    if arg is None:
        env = os.environ.get("DI_CLUSTER_THREADS")
        if env:
            try:
                arg = int(env)
            except ValueError:
                raise ValidationError(f"DI_CLUSTER_THREADS must be an integer, got {env!r}") from None
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            n = _kernels.set_threads(arg)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return n


def _params(args, n: int, default_m: int | None = None, default_eta: float | None = None) -> RunParams:
    m, eta = args.m, args.eta
    if m is None and eta is None:
        m, eta = default_m, default_eta
    if m is None:
        m = m_from_eta(eta, n, args.delta)
    epsilon = args.epsilon if args.epsilon is not None else args.delta / args.epsilon_ratio
    return RunParams(delta=args.delta, m=m, epsilon=epsilon, n_max=args.n_max, eta=eta)


def _param_dict(params: RunParams, **extra) -> dict:
    d = {"delta": params.delta, "m": params.m, "eta": params.eta, "epsilon": params.epsilon, "n_max": params.n_max}
    d.update(extra)
    return d


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_cluster(args) -> int:
    threads = _apply_threads(args.threads)
    points = read_points_csv(args.input)
    params = _params(args, points.shape[0], default_m=1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    recorder = None
    if args.emit_diagnostics:
        recorder = SnapshotRecorder(scale_to_unit_cube(points)[0].positions)
    run = cluster_points(points, params, absorb_outliers=args.absorb_outliers, observer=recorder)
    res = run.result
    write_labels_csv(out / "labels.csv", run.labels)
    clusters = []
    for s in res.summaries:
        entry = s.as_dict()
        entry["centroid_input"] = [float(v) for v in run.scaling.inverse(s.centroid)]
        clusters.append(entry)
    report = {
        "command": "cluster",
        "version": __version__,
        "input": str(args.input),
        "n_agents": int(points.shape[0]),
        "dim": int(points.shape[1]),
        "parameters": _param_dict(params, absorb_outliers=args.absorb_outliers, threads=threads),
        "cluster_count": res.cluster_count,
        "outlier_count": int(res.outlier_ids.size),
        "degenerate": res.degenerate,
        "clusters": clusters,
        "stage_seconds": res.stage_seconds,
    }
    if recorder is not None:
        emit_diagnostics(recorder, out / "diagnostics")
    _write_json(out / "report.json", report)
    print(f"{res.cluster_count} clusters, {res.outlier_ids.size} outliers -> {out}")
    return EXIT_OK


def cmd_segment(args) -> int:
    threads = _apply_threads(args.threads)
    if args.sigma < 0:
        raise ValidationError("sigma must be non-negative")
    image = read_image(args.input)
    n = image.width * image.height
    params = _params(args, n, default_eta=5.0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    recorder = None
    if args.emit_diagnostics:
        recorder = SnapshotRecorder(image_to_features(gaussian_blur(image, args.sigma), args.color_scaling)[0].positions)
    rendered, res = segment_image(image, params, sigma=args.sigma, absorb_outliers=args.absorb_outliers,
                                  observer=recorder, color_scaling=args.color_scaling)
    write_image(out / "segmented.ppm", rendered)
    report = {
        "command": "segment",
        "version": __version__,
        "input": str(args.input),
        "width": image.width,
        "height": image.height,
        "n_agents": n,
        "dim": 5,
        "parameters": _param_dict(params, sigma=args.sigma, absorb_outliers=args.absorb_outliers,
                                  color_scaling=args.color_scaling, threads=threads),
        "cluster_count": res.cluster_count,
        "outlier_count": int(res.outlier_ids.size),
        "degenerate": res.degenerate,
        "clusters": [s.as_dict() for s in res.summaries],
        "stage_seconds": res.stage_seconds,
    }
    if recorder is not None:
        emit_diagnostics(recorder, out / "diagnostics")
    _write_json(out / "report.json", report)
    print(f"{res.cluster_count} clusters (m={params.m}) -> {out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    _apply_threads(args.threads)
    if Path(args.input).suffix.lower() in IMAGE_SUFFIXES:
        image = read_image(args.input)
        ensemble = image_to_features(gaussian_blur(image, args.sigma))[0]
        params = _params(args, ensemble.count, default_eta=5.0)
    else:
        ensemble = scale_to_unit_cube(read_points_csv(args.input))[0]
        params = _params(args, ensemble.count, default_m=1)
    if args.cap < 0:
        raise ValidationError("cap must be non-negative")

    def show(diag):
        print(json.dumps(diag.as_dict(), sort_keys=True), flush=True)

    n = calibrate_n_max(ensemble, params, cap=args.cap, on_step=show)
    print(json.dumps({"n_max": n}))
    return EXIT_OK


def cmd_bench(args) -> int:
    _apply_threads(args.threads)
    if args.n < 1 or args.dim < 1:
        raise ValidationError("--n and --dim must be positive")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = run_bench(args.n, args.dim, m=args.m, n_max=args.n_max, seed=args.seed, delta=args.delta,
                        with_dbscan=not args.no_dbscan)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    text = res.to_csv()
    sys.stdout.write(text)
    print(f"# di_exponent={res.di_exponent:.4f} dbscan_exponent={res.dbscan_exponent:.4f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.csv").write_text(text)
        _write_json(out / "bench.json", {"di_exponent": res.di_exponent,
                                         "dbscan_exponent": None if np.isnan(res.dbscan_exponent) else res.dbscan_exponent})
    return EXIT_OK


def cmd_generate(args) -> int:
    out = Path(args.out)
    if args.name == "cluttered":
        write_image(out, datasets.cluttered_image(seed=args.seed))
    elif args.name == "two_tone":
        write_image(out, datasets.two_tone_image())
    else:
        pts, _ = datasets.GENERATORS[args.name](seed=args.seed)
        header = ",".join(f"x{j + 1}" for j in range(pts.shape[1]))
        np.savetxt(out, pts, delimiter=",", header=header, comments="", fmt="%.17g")
    print(out)
    return EXIT_OK


COMMANDS = {
    "cluster": cmd_cluster,
    "segment": cmd_segment,
    "calibrate": cmd_calibrate,
    "bench": cmd_bench,
    "generate": cmd_generate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CalibrationError as exc:
        for diag in exc.diagnostics:
            print(json.dumps(diag.as_dict(), sort_keys=True), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except RasterFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
