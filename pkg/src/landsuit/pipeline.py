"""Declarative suitability models executed wholly in memory.

A model document (JSON) names a land-unit layer, a list of criteria and an
aggregation rule::

    {
      "version": 1,
      "units": {"path": "units.geojson"},
      "criteria": [
        {"name": "schools",
         "measure": {"op": "distance_to_point", "targets": "schools.geojson"},
         "transform": {"op": "linear", "a": 1, "b": 9, "order": "inverse"}}
      ],
      "aggregation": {"method": "weights", "weights": {"schools": 1.0}},
      "output": {"column": "suitability", "path": "out.geojson"}
    }

Dataset paths are resolved against the document's directory. Every input
dataset is read exactly once per run; intermediates never touch disk.
"""
from __future__ import annotations

import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from . import io as lio
from .aggregate import ComparisonMatrix, ahp_weights, random_ahp, weighted_sum
from .geometry import FeatureLayer
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
from .rescale import (
    ConstantInputWarning,
    LinearScale,
    ReclassifyTable,
    linear,
    natural_breaks,
    reclassify,
)
from .spatial_index import Metric

MODEL_VERSION = 1


class ModelError(ValueError):
    """A model document failed validation; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class PipelineError(RuntimeError):
    def __init__(self, criterion: str, stage: str, cause: Exception):
        self.criterion = criterion
        self.stage = stage
        super().__init__(f"criterion {criterion!r} failed at {stage}: {cause}")


# parameter checkers: each returns the normalised value or raises ValueError
def _positive(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not (math.isfinite(v) and v > 0):
        raise ValueError(f"must be a positive number, got {v!r}")
    return float(v)


def _number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValueError(f"must be a finite number, got {v!r}")
    return float(v)


def _string(v):
    if not isinstance(v, str) or not v:
        raise ValueError(f"must be a non-empty string, got {v!r}")
    return v


def _metric(v):
    return Metric.parse(v).value


def _neighbors(v):
    if v == "all":
        return v
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ValueError(f"must be a positive integer or 'all', got {v!r}")
    return v


def _power(v):
    return v if v == "cv" else _positive(v)


def _powers(v):
    if not isinstance(v, list) or not v:
        raise ValueError("must be a non-empty list of positive numbers")
    return [_positive(u) for u in v]


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"must be one of {list(options)}, got {v!r}")
        return v
    return check


def _class_count(v):
    if isinstance(v, bool) or not isinstance(v, int) or v < 2:
        raise ValueError(f"must be an integer >= 2, got {v!r}")
    return v


def _scores(v):
    if not isinstance(v, list) or not v:
        raise ValueError("must be a non-empty list of numbers")
    return [_number(s) for s in v]


def _xy_columns(v):
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(c, str) for c in v)):
        raise ValueError("must be a list of two column names")
    return v


DATASET = object()

# op name -> {param: (checker, required)}; DATASET marks dataset references
MEASURES: dict[str, dict[str, tuple[Any, bool]]] = {
    "distance_to_point": {"targets": (DATASET, True), "metric": (_metric, False)},
    "distance_to_line": {"lines": (DATASET, True), "cell_size": (_positive, True),
                         "metric": (_metric, False)},
    "density_of_point": {"targets": (DATASET, True), "value_column": (_string, False)},
    "density_of_line": {"lines": (DATASET, True), "cell_size": (_positive, True),
                        "mode": (_choice("cell-count", "length-approx"), False)},
    "idw": {"known": (DATASET, True), "value_column": (_string, True),
            "power": (_power, False), "n_neighbors": (_neighbors, False),
            "search_radius": (_positive, False), "candidate_powers": (_powers, False)},
    "attribute": {"column": (_string, True)},
}

TRANSFORMS: dict[str, dict[str, tuple[Any, bool]]] = {
    "linear": {"a": (_number, False), "b": (_number, False),
               "order": (_choice("regular", "inverse"), False)},
    "reclassify": {"kind": (_choice("categorical", "range"), True), "table": (None, False),
                   "ranges": (None, False), "default": (_number, False)},
    "natural_breaks": {"k": (_class_count, True), "scores": (_scores, False)},
    "identity": {},
}


@dataclass(frozen=True)
class CriterionSpec:
    name: str
    measure: Mapping[str, Any]
    transform: Mapping[str, Any]


@dataclass(frozen=True)
class SuitabilityModel:
    units: str
    criteria: tuple
    aggregation: Mapping[str, Any]
    output_column: str = "suitability"
    output_path: str | None = None
    report_path: str | None = None
    xy_columns: tuple | None = None
    join: Mapping[str, Any] | None = None
    datasets: tuple = ()
    base_dir: str = "."

    @property
    def criterion_names(self) -> list[str]:
        return [c.name for c in self.criteria]


@dataclass
class RunReport:
    n_units: int = 0
    n_nodata: int = 0
    stages: list = field(default_factory=list)
    weights: dict = field(default_factory=dict)
    aggregation: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    reads: dict = field(default_factory=dict)
    writes: dict = field(default_factory=dict)
    total_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "n_units": self.n_units,
            "n_nodata": self.n_nodata,
            "weights": self.weights,
            "aggregation": self.aggregation,
            "stages": self.stages,
            "warnings": self.warnings,
            "io": {"reads": self.reads, "writes": self.writes},
            "total_seconds": self.total_seconds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check_params(where: str, op_table, doc, errors, base_dir, datasets) -> dict | None:
    if not isinstance(doc, Mapping):
        errors.append(f"{where}: must be an object")
        return None
    op = doc.get("op")
    if op not in op_table:
        errors.append(f"{where}: unknown operation {op!r}")
        return None
    params = {"op": op}
    schema = op_table[op]
    for key in doc:
        if key != "op" and key not in schema:
            errors.append(f"{where}: unknown parameter {key!r} for {op}")
    for key, (check, required) in schema.items():
        if key not in doc:
            if required:
                errors.append(f"{where}: missing parameter {key!r} for {op}")
            continue
        value = doc[key]
        if check is DATASET:
            if not isinstance(value, str) or not value:
                errors.append(f"{where}: {key} must be a dataset path")
                continue
            path = _resolve(base_dir, value)
            if not os.path.exists(path):
                errors.append(f"{where}: missing dataset {value!r}")
            datasets.append(path)
            params[key] = path
        elif check is None:
            params[key] = value
        else:
            try:
                params[key] = check(value)
            except ValueError as exc:
                errors.append(f"{where}: {key} {exc}")
    return params


def _check_transform_semantics(where, params, errors):
    op = params.get("op")
    try:
        if op == "linear":
            LinearScale(params.get("a", 1.0), params.get("b", 9.0), params.get("order", "regular"))
        elif op == "reclassify":
            ReclassifyTable.from_dict(params)
        elif op == "natural_breaks" and "scores" in params and "k" in params:
            if len(params["scores"]) != params["k"]:
                raise ValueError("scores must have k entries")
    except (ValueError, TypeError) as exc:
        errors.append(f"{where}: {exc}")


def _resolve(base_dir: str, path: str) -> str:
    return os.path.normpath(path if os.path.isabs(path) else os.path.join(base_dir, path))


def parse_model(document, base_dir: str | None = None) -> SuitabilityModel:
    """Validate a model document (JSON text or mapping) into a model.

    All problems are collected and raised together as :class:`ModelError`.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError([f"malformed model document: {exc}"]) from None
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise ModelError(["model document must be a JSON object"])
    base_dir = os.path.abspath(base_dir or ".")
    errors: list[str] = []
    datasets: list[str] = []

    version = doc.get("version", MODEL_VERSION)
    if version != MODEL_VERSION:
        errors.append(f"unsupported model version {version!r}")
    for key in doc:
        if key not in ("version", "units", "criteria", "aggregation", "output"):
            errors.append(f"unknown top-level key {key!r}")

    units = doc.get("units")
    units_path = None
    xy_columns = None
    join = None
    if isinstance(units, str):
        units = {"path": units}
    if not isinstance(units, Mapping) or not isinstance(units.get("path"), str):
        errors.append("units: must give a dataset path")
    else:
        units_path = _resolve(base_dir, units["path"])
        if not os.path.exists(units_path):
            errors.append(f"units: missing dataset {units['path']!r}")
        datasets.append(units_path)
        if "xy_columns" in units:
            try:
                xy_columns = tuple(_xy_columns(units["xy_columns"]))
            except ValueError as exc:
                errors.append(f"units: xy_columns {exc}")
        if "join" in units:
            j = units["join"]
            if not (isinstance(j, Mapping) and all(isinstance(j.get(k), str)
                                                   for k in ("path", "layer_key", "csv_key"))):
                errors.append("units: join needs path, layer_key and csv_key")
            else:
                jpath = _resolve(base_dir, j["path"])
                if not os.path.exists(jpath):
                    errors.append(f"units: missing dataset {j['path']!r}")
                datasets.append(jpath)
                join = {"path": jpath, "layer_key": j["layer_key"], "csv_key": j["csv_key"]}

    criteria = []
    raw = doc.get("criteria")
    if not isinstance(raw, list) or not raw:
        errors.append("criteria: need at least one criterion")
        raw = []
    seen = set()
    for i, c in enumerate(raw):
        where = f"criteria[{i}]"
        if not isinstance(c, Mapping):
            errors.append(f"{where}: must be an object")
            continue
        name = c.get("name")
        if not isinstance(name, str) or not name:
            errors.append(f"{where}: missing name")
            name = f"#{i}"
        elif name in seen:
            errors.append(f"{where}: duplicate criterion name {name!r}")
        seen.add(name)
        where = f"criterion {name!r}"
        measure = _check_params(f"{where} measure", MEASURES, c.get("measure"), errors,
                                base_dir, datasets)
        transform = _check_params(f"{where} transform", TRANSFORMS,
                                  c.get("transform", {"op": "identity"}), errors,
                                  base_dir, datasets)
        if transform is not None:
            _check_transform_semantics(f"{where} transform", transform, errors)
        if measure is not None and transform is not None:
            criteria.append(CriterionSpec(name, measure, transform))

    aggregation = _parse_aggregation(doc.get("aggregation"), [c.get("name") for c in raw
                                                              if isinstance(c, Mapping)], errors)

    out = doc.get("output") or {}
    if not isinstance(out, Mapping):
        errors.append("output: must be an object")
        out = {}
    column = out.get("column", "suitability")
    if not isinstance(column, str) or not column:
        errors.append("output: column must be a non-empty string")
    out_path = _resolve(base_dir, out["path"]) if isinstance(out.get("path"), str) else None
    report_path = _resolve(base_dir, out["report"]) if isinstance(out.get("report"), str) else None

    if errors:
        raise ModelError(errors)
    unique = tuple(dict.fromkeys(datasets))
    return SuitabilityModel(
        units=units_path,
        criteria=tuple(criteria),
        aggregation=aggregation,
        output_column=column,
        output_path=out_path,
        report_path=report_path,
        xy_columns=xy_columns,
        join=join,
        datasets=unique,
        base_dir=base_dir,
    )


def _parse_aggregation(agg, names, errors) -> dict:
    if not isinstance(agg, Mapping):
        errors.append("aggregation: must be an object")
        return {}
    method = agg.get("method", "weights")
    normalize = bool(agg.get("normalize", False))
    n = len(names)
    if method == "weights":
        w = agg.get("weights")
        if isinstance(w, list):
            if len(w) != n:
                errors.append(f"aggregation: weight-count mismatch, {len(w)} weights for {n} criteria")
                return {}
            w = dict(zip(names, w))
        if not isinstance(w, Mapping):
            errors.append("aggregation: weights must be a list or an object keyed by criterion")
            return {}
        missing = [nm for nm in names if nm not in w]
        extra = [k for k in w if k not in names]
        if missing or extra:
            errors.append(f"aggregation: weight-count mismatch (missing {missing}, unknown {extra})")
            return {}
        try:
            weights = {k: _number(v) for k, v in w.items()}
        except ValueError as exc:
            errors.append(f"aggregation: weight {exc}")
            return {}
        if any(v < 0 for v in weights.values()):
            errors.append("aggregation: weights must be non-negative")
        elif not normalize and abs(sum(weights.values()) - 1.0) > 1e-9:
            errors.append("aggregation: weights must sum to 1 (or set normalize)")
        return {"method": "weights", "weights": weights, "normalize": normalize}
    if method == "ahp":
        try:
            m = ComparisonMatrix(agg.get("matrix"))
        except (ValueError, TypeError) as exc:
            errors.append(f"aggregation: {exc}")
            return {}
        if m.n != n:
            errors.append(f"aggregation: {m.n}x{m.n} matrix for {n} criteria")
        return {"method": "ahp", "matrix": m.entries.tolist()}
    if method == "random_ahp":
        seed = agg.get("seed")
        if isinstance(seed, bool) or not isinstance(seed, int):
            errors.append("aggregation: random_ahp needs an integer seed")
        if not 2 <= n <= 15:
            errors.append(f"aggregation: random_ahp needs 2..15 criteria, got {n}")
        return {"method": "random_ahp", "seed": seed}
    errors.append(f"aggregation: unknown method {method!r}")
    return {}


class DatasetStore:
    """Loads each dataset path once and counts reads and writes."""

    def __init__(self, preloaded: Mapping[str, FeatureLayer] | None = None):
        self._cache: dict[str, FeatureLayer] = dict(preloaded or {})
        self.reads: dict[str, int] = {}
        self.writes: dict[str, int] = {}

    def layer(self, path: str) -> FeatureLayer:
        if path not in self._cache:
            self.reads[path] = self.reads.get(path, 0) + 1
            self._cache[path] = lio.read_geojson(path, explode=True)
        return self._cache[path]

    def join(self, layer: FeatureLayer, spec) -> FeatureLayer:
        self.reads[spec["path"]] = self.reads.get(spec["path"], 0) + 1
        return lio.read_csv_join(layer, spec["path"], spec["layer_key"], spec["csv_key"])

    def write(self, layer: FeatureLayer, path: str) -> None:
        self.writes[path] = self.writes.get(path, 0) + 1
        lio.write_geojson(layer, path)


def measure_values(units: FeatureLayer, params: Mapping, layer_of: Callable[[str], FeatureLayer],
                   xy_columns=None) -> tuple[np.ndarray, list[str]]:
    """Run one measurement step; returns raw values and any warnings."""
    op = params["op"]
    if op == "attribute":
        col = params["column"]
        if col not in units.attributes:
            raise ValueError(f"units have no column {col!r}")
        values = units[col]
        if values.dtype == object:
            return values, []
        return np.asarray(values, dtype=float), []
    if op == "distance_to_point":
        res = distance_to_point(units, layer_of(params["targets"]),
                                params.get("metric", "euclidean"), xy_columns=xy_columns)
    elif op == "distance_to_line":
        res = distance_to_line(units, layer_of(params["lines"]), params["cell_size"],
                               params.get("metric", "euclidean"), xy_columns=xy_columns)
    elif op == "density_of_point":
        res = density_of_point(units, layer_of(params["targets"]), params.get("value_column"))
    elif op == "density_of_line":
        res = density_of_line(units, layer_of(params["lines"]), params["cell_size"],
                              params.get("mode", "cell-count"))
    elif op == "idw":
        known = layer_of(params["known"])
        n_neighbors = params.get("n_neighbors", 12)
        radius = params.get("search_radius")
        power = params.get("power", 2.0)
        warnings = []
        if power == "cv":
            cv = idw_cv(known, params["value_column"],
                        params.get("candidate_powers", DEFAULT_POWERS),
                        n_neighbors=n_neighbors, search_radius=radius)
            power = cv.best_power
            warnings.append(f"idw power chosen by cross-validation: {power}")
        res = idw_estimate(units, known, params["value_column"],
                           IdwConfig(power, n_neighbors, radius), xy_columns=xy_columns)
        return res.values, warnings + list(res.warnings)
    else:
        raise ValueError(f"unknown operation {op!r}")
    return res.values, list(res.warnings)


def transform_values(values, params: Mapping) -> tuple[np.ndarray, list[str]]:
    """Run one transformation step; returns suitability scores and warnings."""
    op = params["op"]
    if op == "identity":
        return np.asarray(values, dtype=float), []
    if op == "reclassify":
        return reclassify(values, ReclassifyTable.from_dict(params)), []
    x = np.asarray(values, dtype=float)
    finite = x[~np.isnan(x)]
    if op == "linear":
        scale = LinearScale(params.get("a", 1.0), params.get("b", 9.0),
                            params.get("order", "regular"))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConstantInputWarning)
            out = linear(x, scale)
        return out, [str(w.message) for w in caught]
    if op == "natural_breaks":
        k = params["k"]
        cb = natural_breaks(finite, k)
        labels = cb.classify(x)
        scores = np.asarray(params.get("scores") or list(range(1, k + 1)), dtype=float)
        out = np.full(x.shape, np.nan)
        ok = ~np.isnan(labels)
        out[ok] = scores[labels[ok].astype(int)]
        return out, []
    raise ValueError(f"unknown operation {op!r}")


def resolve_weights(model: SuitabilityModel) -> tuple[dict, dict]:
    """Per-criterion weights and a description of how they were obtained."""
    agg = model.aggregation
    names = model.criterion_names
    method = agg["method"]
    if method == "weights":
        w = dict(agg["weights"])
        if agg.get("normalize"):
            total = sum(w.values())
            w = {k: v / total for k, v in w.items()}
        return w, {"method": "weights"}
    if method == "ahp":
        pv = ahp_weights(agg["matrix"])
    else:
        pv = random_ahp(len(names), agg["seed"])
    info = {"method": method, **pv.to_dict()}
    if method == "random_ahp":
        info["seed"] = agg["seed"]
    return dict(zip(names, (float(v) for v in pv.weights))), info


def aggregate_scores(scores: Mapping[str, np.ndarray], weights: Mapping[str, float]) -> np.ndarray:
    """Weighted sum taken in criterion-name order, independent of model order."""
    names = sorted(scores)
    return weighted_sum([scores[n] for n in names], [weights[n] for n in names], normalize=False)


def run_model(
    model: SuitabilityModel,
    *,
    datasets: Mapping[str, FeatureLayer] | None = None,
    threads: int | None = None,
    write: bool = True,
) -> tuple[FeatureLayer, RunReport]:
    """Execute a parsed model.

    Each dataset is loaded once up front; criteria then run against the
    in-memory layers (in worker threads when ``threads > 1``) and are
    combined after all of them finish. The output layer is written once
    when the model names an output path and ``write`` is true.
    """
    t_start = time.perf_counter()
    store = DatasetStore(datasets)
    report = RunReport()

    t0 = time.perf_counter()
    units = store.layer(model.units)
    if model.join:
        units = store.join(units, model.join)
    for path in model.datasets:
        if path != model.units and (not model.join or path != model.join["path"]):
            store.layer(path)
    report.stages.append({"criterion": None, "stage": "load", "seconds": time.perf_counter() - t0,
                          "rows": len(units)})
    report.n_units = len(units)

    def run_one(spec: CriterionSpec):
        stages, warns = [], []
        stage = "measure"
        try:
            t = time.perf_counter()
            raw, w = measure_values(units, spec.measure, store.layer, model.xy_columns)
            stages.append({"criterion": spec.name, "stage": "measure", "op": spec.measure["op"],
                           "seconds": time.perf_counter() - t, "rows": len(raw)})
            warns += w
            stage = "transform"
            t = time.perf_counter()
            scores, w = transform_values(raw, spec.transform)
            stages.append({"criterion": spec.name, "stage": "transform",
                           "op": spec.transform["op"], "seconds": time.perf_counter() - t,
                           "rows": len(scores)})
            warns += w
        except Exception as exc:
            raise PipelineError(spec.name, stage, exc) from exc
        return scores, stages, [f"{spec.name}: {m}" for m in warns]

    if threads and threads > 1 and len(model.criteria) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, model.criteria))
    else:
        results = [run_one(spec) for spec in model.criteria]

    scores = {}
    for spec, (s, stages, warns) in zip(model.criteria, results):
        scores[spec.name] = s
        report.stages.extend(stages)
        report.warnings.extend(warns)

    t0 = time.perf_counter()
    try:
        weights, info = resolve_weights(model)
        suitability = aggregate_scores(scores, weights)
    except Exception as exc:
        raise PipelineError("<aggregation>", "aggregate", exc) from exc
    report.stages.append({"criterion": None, "stage": "aggregate",
                          "seconds": time.perf_counter() - t0, "rows": len(suitability)})
    report.weights = weights
    report.aggregation = info
    report.n_nodata = int(np.isnan(suitability).sum())
    if report.n_nodata:
        report.warnings.append(f"{report.n_nodata} units have nodata suitability")

    out = units.with_column(model.output_column, suitability, overwrite=True)
    if write and model.output_path:
        store.write(out, model.output_path)
    report.reads = dict(store.reads)
    report.writes = dict(store.writes)
    report.total_seconds = time.perf_counter() - t_start
    if write:
        target = model.report_path or (model.output_path and report_sibling(model.output_path))
        if target:
            write_report(report, target)
    return out, report


def report_sibling(output_path: str) -> str:
    """``out.geojson`` -> ``out.report.json``."""
    stem, _ = os.path.splitext(output_path)
    return stem + ".report.json"


def write_report(report: RunReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
