"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import (
    classify,
    grid_search,
    holdout_split,
    select_representatives,
    self_consistency,
    train,
)
from .data import Dataset, atomic_write_text, format_float, load_dataset, write_dataset
from .embedding import EmbeddingParams, embed
from .errors import DataError, NumericalError
from .gmm import FitConfig, log_mixture_density
from .metrics import evaluate
from .persist import load_bundle, save_bundle
from .preprocess import DEFAULT_SMOOTH_DAYS, DEFAULT_WINDOW, load_raw, preprocess_lake
from .synthetic import SyntheticSpec, generate_synthetic

log = logging.getLogger("rpsgmm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
SEED_ENV = "RPSGMM_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_range(text):
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _reps(text):
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        label, sep, sid = item.partition("=")
        if not sep or not label or not sid:
            raise argparse.ArgumentTypeError(f"expected CLASS=SERIES_ID, got {item!r}")
        if label in out:
            raise argparse.ArgumentTypeError(f"class {label!r} given twice")
        out[label] = sid
    if not out:
        raise argparse.ArgumentTypeError("no representatives given")
    return out


def _channels(text):
    return tuple(c.strip() for c in text.split(",") if c.strip())


def resolve_seed(args, fallback=0):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return fallback


def _fit_config(args):
    return FitConfig(
        n_components=args.components,
        n_init=args.n_init,
        max_iter=args.max_iter,
        tol=args.tol,
        reg=args.reg,
        seed=resolve_seed(args),
    )


def _load(args):
    ds = load_dataset(args.data)
    if getattr(args, "channels", None):
        ds = ds.select_channels(args.channels)
    return ds


def _write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def cmd_preprocess(args):
    raws = load_raw(args.raw)
    series = [
        preprocess_lake(r, args.window, args.smooth_window, args.smooth_water) for r in raws
    ]
    if not series:
        raise DataError(f"{args.raw}: no observations")
    ds = Dataset(series, series[0].channels)
    write_dataset(ds, args.out)
    log.info("wrote %d series to %s", len(ds), args.out)


def cmd_train(args):
    ds = _load(args)
    reps = select_representatives(ds, args.reps)
    params = EmbeddingParams(args.tau, args.dim)
    bundle = train(reps, params, _fit_config(args), ds.channels)
    bad = self_consistency(bundle, reps)
    if bad:
        log.warning("representatives not classified to their own class: %s", bad)
    save_bundle(bundle, args.out)
    log.info("wrote bundle (%d classes, tau=%d, d=%d) to %s",
             len(bundle.class_order), params.tau, params.d, args.out)


def cmd_classify(args):
    bundle = load_bundle(args.bundle)
    ds = load_dataset(args.data)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series_id", "label", "predicted"] + [f"loglik_{c}" for c in bundle.class_order])
    for s in ds:
        label, scores = classify(s, bundle)
        w.writerow([s.id, s.label or "", label] + [format_float(scores[c]) for c in bundle.class_order])
    atomic_write_text(args.out, buf.getvalue())


def cmd_evaluate(args):
    bundle = load_bundle(args.bundle)
    report = evaluate(bundle, load_dataset(args.data))
    _write_json(args.out, report.to_dict())
    log.info("accuracy %.4f", report.accuracy)


def cmd_grid_search(args):
    ds = _load(args)
    reps = select_representatives(ds, args.reps)
    config = _fit_config(args)
    search_set, report_set = ds, None
    if args.holdout:
        search_set, report_set = holdout_split(ds, args.holdout, config.seed,
                                               keep=[s.id for s in reps.values()])
    lo, hi = args.range

    def progress(cell):
        log.debug("tau=%d d=%d accuracy=%s", cell.tau, cell.d, cell.accuracy)

    result = grid_search(reps, search_set, lo, hi, config, args.workers, ds.channels, progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = result.summary()
    summary.update({
        "seed": config.seed,
        "channels": list(ds.channels),
        "representatives": {lab: s.id for lab, s in reps.items()},
        "n_eval_series": len(search_set),
        "fit_config": {
            "n_components": config.n_components, "n_init": config.n_init,
            "max_iter": config.max_iter, "tol": config.tol, "reg": config.reg,
        },
    })
    if report_set is not None and result.best is not None:
        bundle = train(reps, result.best, config, ds.channels)
        summary["holdout"] = {"fraction": args.holdout, **evaluate(bundle, report_set).to_dict()}
    atomic_write_text(out / "grid.csv", result.to_csv())
    _write_json(out / "summary.json", summary)
    if result.best is None:
        raise NumericalError("no grid cell could be evaluated")
    log.info("best tau=%d d=%d accuracy=%.4f", result.best.tau, result.best.d, result.best_accuracy)


def cmd_synth(args):
    spec = SyntheticSpec.from_json(args.spec) if args.spec else SyntheticSpec()
    if args.seed is not None or os.environ.get(SEED_ENV):
        spec = SyntheticSpec.from_dict({**spec.to_dict(), "seed": resolve_seed(args)})
    write_dataset(generate_synthetic(spec), args.out)


def cmd_plot_data(args):
    bundle = load_bundle(args.bundle)
    ds = load_dataset(args.data)
    if args.series not in ds:
        raise DataError(f"unknown series id {args.series!r}")
    s = ds[args.series]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series_id", "day", "variable", "value"])
    for i, day in enumerate(s.timestamps):
        for j, ch in enumerate(s.channels):
            w.writerow([s.id, int(day), ch, format_float(s.values[i, j])])
    sel = s.select(bundle.channels)
    ps = embed(sel, bundle.params)
    days = s.timestamps[bundle.params.span:]
    for label in bundle.class_order:
        running = np.cumsum(log_mixture_density(ps.points, bundle.models[label]))
        for day, v in zip(days, running):
            w.writerow([s.id, int(day), f"loglik_cum:{label}", format_float(v)])
    atomic_write_text(args.out, buf.getvalue())


def _add_fit_options(p):
    g = p.add_argument_group("mixture fitting")
    g.add_argument("--components", type=int, default=10, help="mixture components per class")
    g.add_argument("--n-init", type=int, default=10, help="k-means restarts")
    g.add_argument("--max-iter", type=int, default=200)
    g.add_argument("--tol", type=float, default=1e-6, help="relative log-likelihood tolerance")
    g.add_argument("--reg", type=float, default=None,
                   help="covariance ridge (default: 1e-6 * mean variance)")


def build_parser():
    parser = _Parser(prog="rpsgmm", description="Phase-space Gaussian mixture classification of time series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"global random seed (fallback: ${SEED_ENV}, then 0)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("preprocess", help="raw observations -> daily feature dataset")
    p.add_argument("--raw", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--smooth-window", type=int, default=DEFAULT_SMOOTH_DAYS)
    p.add_argument("--smooth-water", action="store_true", help="also smooth p_water")
    p.add_argument("--window", type=_int_range, default=DEFAULT_WINDOW)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="fit one mixture per class")
    p.add_argument("--data", required=True)
    p.add_argument("--reps", type=_reps, default=None,
                   help="CLASS=SERIES_ID,... (default: first series of each class)")
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--channels", type=_channels, default=None)
    p.add_argument("--out", required=True)
    _add_fit_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="predict labels with a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("grid-search", help="search (tau, d) by accuracy")
    p.add_argument("--data", required=True)
    p.add_argument("--reps", type=_reps, default=None)
    p.add_argument("--range", type=_int_range, default=(2, 30))
    p.add_argument("--holdout", type=float, default=None,
                   help="fraction of each class held out from the search for final reporting")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--channels", type=_channels, default=None)
    p.add_argument("--out", required=True, help="output directory")
    _add_fit_options(p)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("evaluate", help="confusion matrix and weighted metrics")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic labelled dataset")
    p.add_argument("--spec", default=None, help="JSON file with SyntheticSpec fields")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot-data", help="tidy CSV of a series and running log-likelihoods")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
