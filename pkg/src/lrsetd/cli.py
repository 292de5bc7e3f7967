"""Command-line runner: complete / hosvd-demo / mask-gen / metrics.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
failure. Setting LRSETD_THREADS caps the BLAS thread pools.
"""

import os

# must happen before numpy is imported anywhere in the process
if "LRSETD_THREADS" in os.environ:
    _n = os.environ["LRSETD_THREADS"]
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(_var, _n)

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as tio
from .hosvd import hosvd, reconstruction_snr, truncate_core
from .masks import MissingSpec, nmae, psnr, random_mask, rse, structured_mask
from .solver import (
    PRESETS,
    NumericalError,
    SolverConfig,
    preset_config,
    solve,
)
from .tensor import ObservationMask

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


def _parse_triple(text, cast=float, name="value"):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 3:
        raise ValueError(f"{name} needs three comma-separated values: {text!r}")
    return tuple(cast(p) for p in parts)


def _load_input(path, fmt, tensorize_arg):
    fmt = fmt or _guess_format(path)
    if fmt == "lrt":
        data = tio.read_tensor(path)
    elif fmt in ("ppm", "pgm"):
        data = tio.read_image(path)
    elif fmt == "csv":
        matrix = tio.read_traffic_csv(path)
        if tensorize_arg is None:
            raise ValueError("csv input requires --tensorize")
        data = tio.tensorize(matrix, _parse_tensorize(tensorize_arg))
    else:
        raise ValueError(f"unknown input format {fmt!r}")
    if data.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got order {data.ndim}")
    return data


def _guess_format(path):
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix in ("lrt", "ppm", "pgm", "csv"):
        return suffix
    raise ValueError(f"cannot infer format of {path!r}; pass --format")


def _parse_tensorize(text):
    kind, _, dims = text.partition(":")
    kind = kind.strip().lower()
    if kind not in ("otd", "oot") or not dims:
        raise ValueError(
            f"--tensorize must look like 'otd:121,288,7', got {text!r}"
        )
    return (kind, *_parse_triple(dims, int, "--tensorize dims"))


def _build_mask(args, dims):
    given = [
        v
        for v in (args.mask, args.missing_spec, args.sample_ratio)
        if v is not None
    ]
    if len(given) != 1:
        raise ValueError(
            "exactly one of --mask, --missing-spec, --sample-ratio required"
        )
    if args.mask is not None:
        mask = tio.read_mask(args.mask)
        if mask.dims != tuple(dims):
            raise ValueError(
                f"mask dims {mask.dims} do not match data dims {tuple(dims)}"
            )
        return mask
    if args.missing_spec is not None:
        spec = _load_missing_spec(args.missing_spec, args.seed)
        return structured_mask(dims, spec)
    return random_mask(dims, args.sample_ratio, seed=args.seed or 0)


def _load_missing_spec(arg, seed_flag):
    text = arg
    if not arg.lstrip().startswith("{"):
        text = Path(arg).read_text(encoding="utf-8")
    spec = MissingSpec.from_json(text)
    if seed_flag is not None:
        spec = MissingSpec(
            kind=spec.kind, mode=spec.mode, params=spec.params, seed=seed_flag
        )
    return spec


def _solver_config(args):
    """Assemble the solver configuration: flags > config file > preset >
    defaults."""
    fields = {}
    if args.preset:
        if args.preset not in PRESETS:
            raise ValueError(
                f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}"
            )
        fields.update(PRESETS[args.preset])
        fields["preset"] = args.preset
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        known = set(SolverConfig.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        for key in ("ranks", "alpha", "omega", "toeplitz_modes"):
            if key in doc and doc[key] is not None:
                doc[key] = tuple(doc[key])
        fields.update(doc)
    for flag, key in (
        ("ranks", "ranks"),
        ("tol", "tol"),
        ("max_iter", "max_iter"),
        ("seed", "seed"),
        ("beta", "beta"),
        ("init", "init"),
        ("stop_denominator", "stop_denominator"),
    ):
        value = getattr(args, flag)
        if value is not None:
            fields[key] = value
    if isinstance(fields.get("ranks"), str):
        fields["ranks"] = _parse_triple(fields["ranks"], int, "--ranks")
    return SolverConfig(**fields)


def _config_echo(cfg):
    doc = {
        k: (list(v) if isinstance(v, tuple) else v)
        for k, v in cfg.__dict__.items()
    }
    doc["toeplitz_modes"] = list(cfg.resolved_toeplitz())
    return doc


def _write_report(path, doc):
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_trace_csv(path, trace):
    lines = ["iteration,rel_change,lagrangian,objective,seconds"]
    for rec in trace:
        lines.append(
            f"{rec.iteration},{rec.rel_change!r},{rec.lagrangian!r},"
            f"{rec.objective!r},{rec.seconds!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_complete(args):
    truth = _load_input(args.input, args.format, args.tensorize)
    mask = _build_mask(args, truth.shape)
    cfg = _solver_config(args)
    observed = np.where(mask.boolean(), truth, 0.0)
    z_true = truth if cfg.stop_denominator == "oracle" else None
    report = solve(observed, mask, cfg, z_true=z_true)

    metrics = {}
    if mask.n_missing and not args.skip_metrics:
        metrics["rse"] = rse(truth, report.recovered)
        try:
            metrics["nmae"] = nmae(truth, report.recovered, mask)
        except ValueError:
            metrics["nmae"] = None
        try:
            metrics["psnr"] = psnr(truth, report.recovered, mask)
        except ValueError:
            metrics["psnr"] = None

    if args.out:
        if Path(args.out).suffix.lower() in (".ppm", ".pgm"):
            tio.write_image(args.out, report.recovered)
        else:
            tio.write_tensor(args.out, report.recovered)
    if args.report:
        deterministic = args.deterministic_report
        doc = {
            "config": _config_echo(cfg),
            "dims": list(truth.shape),
            "observed": mask.n_observed,
            "metrics": metrics,
            "iterations": report.iterations,
            "termination": report.termination,
            "trace": [
                {
                    "iteration": r.iteration,
                    "rel_change": r.rel_change,
                    "lagrangian": r.lagrangian,
                    "objective": r.objective,
                    "seconds": 0.0 if deterministic else r.seconds,
                }
                for r in report.trace
            ],
            "timings": {
                "total_seconds": 0.0 if deterministic else report.total_seconds
            },
        }
        _write_report(args.report, doc)
    if args.trace_csv:
        _write_trace_csv(args.trace_csv, report.trace)
    summary = {"iterations": report.iterations, "termination": report.termination}
    summary.update(metrics)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_hosvd_demo(args):
    data = _load_input(args.input, args.format, None)
    if args.scale:
        data = data / args.scale
    ranks = (
        _parse_triple(args.ranks, int, "--ranks")
        if args.ranks
        else data.shape
    )
    model = hosvd(data, ranks)
    grid = [float(v) for v in args.tn_grid.replace(" ", "").split(",") if v]
    rows = []
    for tn in grid:
        truncated, sparsity = truncate_core(model, tn)
        approx = truncated.reconstruct()
        snr = reconstruction_snr(data, approx)
        rows.append((tn, sparsity, snr))
        if args.images_out:
            out = Path(f"{args.images_out}_tn{tn:g}.ppm")
            tio.write_image(out, approx * (args.scale or 1.0))
    lines = ["tn,sparsity,snr"]
    for tn, sparsity, snr in rows:
        lines.append(f"{tn!r},{sparsity!r},{'inf' if snr == float('inf') else repr(snr)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_mask_gen(args):
    dims = _parse_triple(args.dims, int, "--dims")
    if (args.missing_spec is None) == (args.ratio is None):
        raise ValueError("exactly one of --missing-spec, --ratio required")
    if args.missing_spec is not None:
        spec = _load_missing_spec(args.missing_spec, args.seed)
        mask = structured_mask(dims, spec)
    else:
        mask = random_mask(dims, args.ratio, seed=args.seed or 0)
    tio.write_mask(args.out, mask)
    print(
        json.dumps(
            {"dims": list(dims), "observed": mask.n_observed},
            sort_keys=True,
        )
    )
    return EXIT_OK


def cmd_metrics(args):
    truth = _load_input(args.truth, args.format, None)
    recovered = _load_input(args.recovered, args.format, None)
    mask = tio.read_mask(args.mask)
    doc = {
        "rse": rse(truth, recovered),
        "nmae": nmae(truth, recovered, mask),
        "psnr": psnr(
            truth,
            recovered,
            mask,
            max_value=args.max_value,
            full_tensor=args.psnr_full,
        ),
    }
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lrsetd",
        description="Tensor completion via low-rank and sparse enhanced "
        "Tucker decomposition.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", help="run a completion experiment")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("lrt", "ppm", "pgm", "csv"))
    p.add_argument("--tensorize", help="otd:P,T,D or oot:S,D,T for csv input")
    p.add_argument("--mask", help="LRM1 mask file")
    p.add_argument("--missing-spec", help="MissingSpec JSON (path or inline)")
    p.add_argument("--sample-ratio", type=float)
    p.add_argument("--preset", help=f"one of {sorted(PRESETS)}")
    p.add_argument("--config", help="solver config JSON file")
    p.add_argument("--ranks", help="r1,r2,r3")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--init", choices=("hosvd", "random"))
    p.add_argument(
        "--stop-denominator",
        dest="stop_denominator",
        choices=("oracle", "blind"),
    )
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="recovered tensor (.lrt/.ppm/.pgm)")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--trace-csv", dest="trace_csv")
    p.add_argument("--skip-metrics", action="store_true")
    p.add_argument(
        "--deterministic-report",
        action="store_true",
        help="zero wall-clock fields so identical runs byte-match",
    )
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("hosvd-demo", help="core truncation sweep")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("lrt", "ppm", "pgm"))
    p.add_argument("--ranks", help="r1,r2,r3 (default: full)")
    p.add_argument("--tn-grid", dest="tn_grid", default="0,0.01,0.05,0.1")
    p.add_argument(
        "--scale",
        type=float,
        default=0.0,
        help="divide input by this before HOSVD (e.g. 255)",
    )
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--images-out", dest="images_out")
    p.set_defaults(func=cmd_hosvd_demo)

    p = sub.add_parser("mask-gen", help="write an observation mask")
    p.add_argument("--dims", required=True, help="I1,I2,I3")
    p.add_argument("--missing-spec", help="MissingSpec JSON (path or inline)")
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask_gen)

    p = sub.add_parser("metrics", help="NMAE/PSNR/RSE between two tensors")
    p.add_argument("--truth", required=True)
    p.add_argument("--recovered", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--format", choices=("lrt", "ppm", "pgm"))
    p.add_argument("--max-value", dest="max_value", type=float)
    p.add_argument("--psnr-full", dest="psnr_full", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (tio.FileFormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, np.linalg.LinAlgError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
