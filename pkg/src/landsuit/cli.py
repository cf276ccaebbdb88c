"""``landsuit`` command line.

Exit status: 0 on success, 1 on usage errors, 2 on data errors. Results go
to files or stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys

import numpy as np

from . import io as lio
from .aggregate import ahp_weights, random_ahp, weighted_sum
from .bench import SUITES, BenchAssertionError, run_bench
from .measure import (
    DEFAULT_POWERS,
    IdwConfig,
    density_of_line,
    density_of_point,
    distance_to_line,
    distance_to_point,
    idw_cv,
    idw_estimate,
)
from .pipeline import ModelError, PipelineError, parse_model, run_model
from .rescale import LinearScale, ReclassifyTable, linear, natural_breaks, reclassify

log = logging.getLogger("landsuit")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# argument types; argparse turns their ValueError into a usage error
def positive(text):
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise ValueError(text)
    return v


def finite(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(text)
    return v


def neighbors(text):
    if text == "all":
        return text
    v = int(text)
    if v < 1:
        raise ValueError(text)
    return v


def json_arg(text):
    """Inline JSON, or ``@path`` to read it from a file."""
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            text = fh.read()
    return json.loads(text)


positive.__name__ = "positive number"
finite.__name__ = "number"
neighbors.__name__ = "positive integer or 'all'"
json_arg.__name__ = "JSON"


def _output(p, default_column):
    p.add_argument("--column", default=default_column, help="name of the new attribute column")
    p.add_argument("--output", help="GeoJSON output path (default: stdout)")
    p.add_argument("--overwrite", action="store_true", help="replace an existing column")


def _xy(p):
    p.add_argument("--xy-columns", nargs=2, metavar=("X", "Y"),
                   help="take source locations from these attribute columns")


def _global_flags(p, default):
    p.add_argument("--threads", type=int, default=default,
                   help="worker threads for model runs (1 forces sequential)")
    p.add_argument("-v", "--verbose", action="count",
                   default=0 if default is None else default)
    p.add_argument("--seed", type=int, default=default, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="landsuit", description="Land-use suitability analysis toolkit.")
    _global_flags(parser, None)
    # the same flags are accepted after the subcommand as well
    common = _Parser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    dist = sub.add_parser("distance", parents=[common], help="distance to nearest feature")
    dsub = dist.add_subparsers(dest="kind", metavar="KIND", parser_class=_Parser)
    dsub.required = True
    p = dsub.add_parser("to-point", parents=[common], help="distance to the nearest target point")
    p.add_argument("--input", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--metric", choices=("euclidean", "manhattan"), default="euclidean")
    _xy(p)
    _output(p, "distance")
    p = dsub.add_parser("to-line", parents=[common], help="distance to rasterized lines")
    p.add_argument("--input", required=True)
    p.add_argument("--lines", required=True)
    p.add_argument("--cell-size", type=positive, required=True)
    p.add_argument("--metric", choices=("euclidean", "manhattan"), default="euclidean")
    _xy(p)
    _output(p, "distance")

    dens = sub.add_parser("density", parents=[common], help="density per zone area")
    nsub = dens.add_subparsers(dest="kind", metavar="KIND", parser_class=_Parser)
    nsub.required = True
    p = nsub.add_parser("of-point", parents=[common], help="(weighted) point count per unit area")
    p.add_argument("--input", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--value-column")
    _output(p, "density")
    p = nsub.add_parser("of-line", parents=[common], help="line cells per unit area")
    p.add_argument("--input", required=True)
    p.add_argument("--lines", required=True)
    p.add_argument("--cell-size", type=positive, required=True)
    p.add_argument("--mode", choices=("cell-count", "length-approx"), default="cell-count")
    _output(p, "density")

    p = sub.add_parser("idw", parents=[common], help="inverse-distance weighted estimate")
    p.add_argument("--input", required=True)
    p.add_argument("--known", required=True)
    p.add_argument("--value-column", required=True)
    p.add_argument("--power", type=positive, default=2.0)
    p.add_argument("--n-neighbors", type=neighbors, default=12)
    p.add_argument("--search-radius", type=positive)
    _xy(p)
    _output(p, "idw")

    p = sub.add_parser("idw-cv", parents=[common], help="choose the IDW power by leave-one-out RMSE")
    p.add_argument("--known", required=True)
    p.add_argument("--value-column", required=True)
    p.add_argument("--candidate-powers", type=positive, nargs="+", default=list(DEFAULT_POWERS))
    p.add_argument("--n-neighbors", type=neighbors, default=12)
    p.add_argument("--search-radius", type=positive)
    p.add_argument("--report", help="write the RMSE table as JSON here")

    p = sub.add_parser("reclassify", parents=[common], help="lookup-table rescale")
    p.add_argument("--input", required=True)
    p.add_argument("--source-column", required=True)
    p.add_argument("--table", type=json_arg, required=True,
                   help='JSON like {"kind": "categorical", "table": {...}} or @file')
    _output(p, "score")

    p = sub.add_parser("jenks", parents=[common], help="natural-breaks classification")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--values", type=finite, nargs="+")
    p.add_argument("--source-column")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--scores", type=finite, nargs="+", help="score per class, lowest first")
    _output(p, "score")

    p = sub.add_parser("rescale-linear", parents=[common], help="min-max rescale onto [a, b]")
    p.add_argument("--input", required=True)
    p.add_argument("--source-column", required=True)
    p.add_argument("--a", type=finite, default=1.0)
    p.add_argument("--b", type=finite, default=9.0)
    p.add_argument("--order", choices=("regular", "inverse"), default="regular")
    _output(p, "score")

    p = sub.add_parser("ahp", parents=[common], help="AHP weights from a comparison matrix")
    p.add_argument("--matrix", type=json_arg, required=True)
    p.add_argument("--json", action="store_true", help="print a JSON document")

    p = sub.add_parser("random-ahp", parents=[common], help="weights from a random consistent matrix")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("weighted-sum", parents=[common], help="weighted sum of attribute columns")
    p.add_argument("--input", required=True)
    p.add_argument("--columns", nargs="+", required=True)
    p.add_argument("--weights", type=finite, nargs="+", required=True)
    p.add_argument("--normalize", action="store_true")
    _output(p, "suitability")

    p = sub.add_parser("run", parents=[common], help="execute a suitability model document")
    p.add_argument("--model", required=True)
    p.add_argument("--report", help="RunReport path (default: next to the output)")
    p.add_argument("--output", help="override the model's output path")

    p = sub.add_parser("bench", parents=[common], help="indexed vs brute-force timings")
    p.add_argument("--suite", choices=SUITES, default="nn")
    p.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--min-speedup", type=positive, default=1.0)
    p.add_argument("--json", help="write the timing table as JSON here")
    return parser


def _emit(layer, args):
    if args.output:
        lio.write_geojson(layer, args.output)
        log.info("wrote %d features to %s", len(layer), args.output)
    else:
        lio.write_geojson(layer, sys.stdout)


def _column(layer, name):
    if name not in layer.attributes:
        raise ValueError(f"input has no column {name!r}")
    return layer[name]


def cmd_distance(args):
    src = lio.read_geojson(args.input, explode=True)
    if args.kind == "to-point":
        res = distance_to_point(src, lio.read_geojson(args.targets, explode=True), args.metric,
                                column=args.column, xy_columns=args.xy_columns)
    else:
        res = distance_to_line(src, lio.read_geojson(args.lines, explode=True), args.cell_size,
                               args.metric, column=args.column, xy_columns=args.xy_columns)
    _emit(res.attach(src, overwrite=args.overwrite), args)


def cmd_density(args):
    zones = lio.read_geojson(args.input, explode=True)
    if args.kind == "of-point":
        res = density_of_point(zones, lio.read_geojson(args.targets, explode=True),
                               args.value_column, column=args.column)
    else:
        res = density_of_line(zones, lio.read_geojson(args.lines, explode=True), args.cell_size,
                              args.mode, column=args.column)
    for w in res.warnings:
        log.warning(w)
    _emit(res.attach(zones, overwrite=args.overwrite), args)


def cmd_idw(args):
    config = IdwConfig(args.power, args.n_neighbors, args.search_radius)
    zones = lio.read_geojson(args.input, explode=True)
    res = idw_estimate(zones, lio.read_geojson(args.known, explode=True), args.value_column,
                       config, column=args.column, xy_columns=args.xy_columns)
    for w in res.warnings:
        log.warning(w)
    _emit(res.attach(zones, overwrite=args.overwrite), args)


def cmd_idw_cv(args):
    known = lio.read_geojson(args.known, explode=True)
    res = idw_cv(known, args.value_column, args.candidate_powers,
                 n_neighbors=args.n_neighbors, search_radius=args.search_radius)
    print(f"best_power {res.best_power:g}")
    for u, e in res.rmse.items():
        print(f"rmse {u:g} {e:.6f}")
    if res.n_skipped:
        log.warning("%d coincident known points left out of scoring", res.n_skipped)
    if args.report:
        doc = {"best_power": res.best_power, "n_skipped": res.n_skipped,
               "rmse": [{"power": u, "rmse": e} for u, e in res.rmse.items()]}
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)


def cmd_reclassify(args):
    table = ReclassifyTable.from_dict(args.table)
    layer = lio.read_geojson(args.input, explode=True)
    scores = reclassify(_column(layer, args.source_column), table)
    _emit(layer.with_column(args.column, scores, overwrite=args.overwrite), args)


def cmd_jenks(args):
    if args.scores is not None and len(args.scores) != args.k:
        raise UsageError("--scores needs one value per class")
    if args.input and not args.source_column:
        raise UsageError("--input needs --source-column")
    if args.values is not None:
        values = np.asarray(args.values)
        layer = None
    else:
        layer = lio.read_geojson(args.input, explode=True)
        values = np.asarray(_column(layer, args.source_column), dtype=float)
    cb = natural_breaks(values[~np.isnan(values)], args.k)
    out = sys.stderr if layer is not None and not args.output else sys.stdout
    print("breaks " + " ".join(f"{b:.6g}" for b in cb.breaks), file=out)
    print(f"gvf {cb.gvf:.6f}", file=out)
    print("class_sizes " + " ".join(str(s) for s in cb.class_sizes), file=out)
    if layer is None:
        return
    labels = cb.classify(values)
    col = np.full(len(values), np.nan)
    ok = ~np.isnan(labels)
    lut = np.asarray(args.scores if args.scores is not None else range(1, args.k + 1), float)
    col[ok] = lut[labels[ok].astype(int)]
    _emit(layer.with_column(args.column, col, overwrite=args.overwrite), args)


def cmd_rescale_linear(args):
    scale = LinearScale(args.a, args.b, args.order)
    layer = lio.read_geojson(args.input, explode=True)
    scores = linear(np.asarray(_column(layer, args.source_column), dtype=float), scale)
    _emit(layer.with_column(args.column, scores, overwrite=args.overwrite), args)


def _print_priority(pv, as_json):
    if as_json:
        print(json.dumps(pv.to_dict(), indent=2))
        return
    print("weights " + " ".join(f"{w:.6f}" for w in pv.weights))
    print(f"lambda_max {pv.lambda_max:.6f}")
    print(f"CR {pv.cr:.6f}")
    if not pv.consistent:
        log.warning("CR %.4f is not below 0.1; judgments are inconsistent", pv.cr)


def cmd_ahp(args):
    _print_priority(ahp_weights(args.matrix), args.json)


def cmd_random_ahp(args):
    seed = args.seed
    pv = random_ahp(args.n, seed)
    if not args.json:
        for row in pv.matrix:
            print("matrix " + " ".join(f"{v:.6g}" for v in row))
    _print_priority(pv, args.json)


def cmd_weighted_sum(args):
    if len(args.columns) != len(args.weights):
        raise UsageError(f"{len(args.columns)} columns but {len(args.weights)} weights")
    layer = lio.read_geojson(args.input, explode=True)
    cols = [np.asarray(_column(layer, c), dtype=float) for c in args.columns]
    out = weighted_sum(cols, args.weights, normalize=args.normalize)
    _emit(layer.with_column(args.column, out, overwrite=args.overwrite), args)


def cmd_run(args):
    with open(args.model, encoding="utf-8") as fh:
        text = fh.read()
    model = parse_model(text, os.path.dirname(os.path.abspath(args.model)))
    overrides = {}
    if args.output:
        overrides["output_path"] = os.path.abspath(args.output)
    if args.report:
        overrides["report_path"] = os.path.abspath(args.report)
    if overrides:
        model = dataclasses.replace(model, **overrides)
    layer, report = run_model(model, threads=args.threads, write=True)
    if model.output_path is None:
        lio.write_geojson(layer, sys.stdout)
        if model.report_path is None:
            # nowhere else to put it
            sys.stderr.write(report.to_json() + "\n")
    for w in report.warnings:
        log.warning(w)
    log.info("run finished in %.3fs", report.total_seconds)


def cmd_bench(args):
    seed = args.seed if args.seed is not None else 0
    if args.sizes != sorted(args.sizes) or min(args.sizes) < 1:
        raise UsageError("--sizes must be positive and ascending")
    if args.repeat < 1:
        raise UsageError("--repeat must be at least 1")
    try:
        res = run_bench(args.suite, args.sizes, seed, repeat=args.repeat,
                        min_speedup=args.min_speedup)
    except BenchAssertionError as exc:
        raise ValueError(str(exc)) from None
    print(res.to_table())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(res.to_json() + "\n")


COMMANDS = {
    "distance": cmd_distance,
    "density": cmd_density,
    "idw": cmd_idw,
    "idw-cv": cmd_idw_cv,
    "reclassify": cmd_reclassify,
    "jenks": cmd_jenks,
    "rescale-linear": cmd_rescale_linear,
    "ahp": cmd_ahp,
    "random-ahp": cmd_random_ahp,
    "weighted-sum": cmd_weighted_sum,
    "run": cmd_run,
    "bench": cmd_bench,
}

DATA_ERRORS = (ValueError, TypeError, KeyError, OSError, ModelError, PipelineError, ArithmeticError)


def _configure_logging(verbosity: int) -> None:
    # a fresh handler per call so it binds to the current stderr
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.WARNING - 10 * min(verbosity, 2))
    log.propagate = False


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.verbose)
    if args.threads is not None and args.threads < 1:
        print("landsuit: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"landsuit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"landsuit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
