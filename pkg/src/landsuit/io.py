"""GeoJSON, CSV-join and ESRI ASCII grid reading and writing."""
from __future__ import annotations

import csv
import json
import math
import os
from contextlib import contextmanager
from typing import IO, Union

import numpy as np

from .geometry import FeatureLayer, LineString, Point2, Polygon
from .raster import AffineTransform, Grid

PathOrStream = Union[str, os.PathLike, IO]
COORD_DECIMALS = 9

_SINGLE = {"Point", "LineString", "Polygon"}
_MULTI = {"MultiPoint": "Point", "MultiLineString": "LineString", "MultiPolygon": "Polygon"}


@contextmanager
def _open(ref: PathOrStream, mode: str, newline: str | None = None):
    if hasattr(ref, "read") or hasattr(ref, "write"):
        yield ref
    else:
        with open(ref, mode, encoding="utf-8", newline=newline) as fh:
            yield fh


def _geometry(gtype: str, coords):
    try:
        if gtype == "Point":
            return Point2(*_xy(coords))
        if gtype == "LineString":
            return LineString([_xy(c) for c in coords])
        if gtype == "Polygon":
            rings = [[_xy(c) for c in ring] for ring in coords]
            return Polygon(rings[0], tuple(rings[1:]))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid {gtype} coordinates: {exc}") from None
    raise ValueError(f"unsupported geometry type {gtype!r}")


def _xy(c):
    if not isinstance(c, (list, tuple)) or len(c) < 2:
        raise ValueError(f"bad position {c!r}")
    x, y = c[0], c[1]
    for v in (x, y):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"non-numeric coordinate {v!r}")
    return float(x), float(y)


def read_geojson(ref: PathOrStream, *, explode: bool = False) -> FeatureLayer:
    """Read a FeatureCollection into a :class:`FeatureLayer`.

    Multi-part geometries are split into one feature per part (properties
    copied) when ``explode`` is set and rejected otherwise. Property keys
    become attribute columns; a feature lacking a key gets nodata there.
    """
    with _open(ref, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed GeoJSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ValueError("expected a GeoJSON FeatureCollection")
    geoms, props = [], []
    for feat in doc.get("features") or []:
        geom = feat.get("geometry")
        if geom is None:
            raise ValueError("feature without geometry")
        gtype = geom.get("type")
        p = feat.get("properties") or {}
        if gtype in _SINGLE:
            geoms.append(_geometry(gtype, geom.get("coordinates")))
            props.append(p)
        elif gtype in _MULTI:
            if not explode:
                raise ValueError(f"{gtype} found; pass explode=True to split parts")
            for part in geom.get("coordinates") or []:
                geoms.append(_geometry(_MULTI[gtype], part))
                props.append(dict(p))
        else:
            raise ValueError(f"unsupported geometry type {gtype!r}")
    kinds = {type(g) for g in geoms}
    if len(kinds) > 1:
        raise ValueError("mixed geometry types in FeatureCollection")
    names = []
    for p in props:
        for key in p:
            if key not in names:
                names.append(key)
    attrs = {name: [p.get(name) for p in props] for name in names}
    crs = doc.get("crs")
    crs_tag = ""
    if isinstance(crs, dict):
        crs_tag = str((crs.get("properties") or {}).get("name", ""))
    return FeatureLayer(tuple(geoms), attrs, crs_tag)


def _round(v: float) -> float:
    r = round(float(v), COORD_DECIMALS)
    return 0.0 if r == 0 else r


def _geometry_doc(g) -> dict:
    if isinstance(g, Point2):
        return {"type": "Point", "coordinates": [_round(g.x), _round(g.y)]}
    if isinstance(g, LineString):
        return {"type": "LineString",
                "coordinates": [[_round(x), _round(y)] for x, y in g.vertices]}
    return {"type": "Polygon",
            "coordinates": [[[_round(x), _round(y)] for x, y in ring] for ring in g.rings]}


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def layer_to_geojson(layer: FeatureLayer) -> dict:
    features = []
    cols = list(layer.attributes.items())
    for i, g in enumerate(layer.geometries):
        features.append({
            "type": "Feature",
            "geometry": _geometry_doc(g),
            "properties": {name: _json_value(arr[i]) for name, arr in cols},
        })
    doc = {"type": "FeatureCollection", "features": features}
    if layer.crs_tag:
        doc["crs"] = {"type": "name", "properties": {"name": layer.crs_tag}}
    return doc


def write_geojson(layer: FeatureLayer, ref: PathOrStream) -> None:
    """Write ``layer`` as a FeatureCollection; NaN/None attributes become null."""
    text = json.dumps(layer_to_geojson(layer), separators=(",", ":"), allow_nan=False)
    with _open(ref, "w") as fh:
        fh.write(text)
        fh.write("\n")


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv_join(
    layer: FeatureLayer,
    ref: PathOrStream,
    layer_key: str,
    csv_key: str,
    *,
    overwrite: bool = False,
) -> FeatureLayer:
    """Left-join CSV columns onto ``layer`` by key.

    Keys are compared by their text form, so an integer column joins a CSV
    key written as digits. Layer rows keep their order; rows without a
    match get nodata in every joined column.
    """
    if layer_key not in layer.attributes:
        raise ValueError(f"missing key column {layer_key!r} in layer")
    with _open(ref, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError("CSV has no header row")
        if csv_key not in reader.fieldnames:
            raise ValueError(f"missing key column {csv_key!r} in CSV")
        rows = list(reader)
    fields = [f for f in reader.fieldnames if f != csv_key]
    table = {}
    for row in rows:
        key = row[csv_key]
        if key in table:
            raise ValueError(f"duplicate CSV key {key!r}")
        table[key] = row
    clash = [f for f in fields if f in layer.attributes]
    if clash and not overwrite:
        raise ValueError(f"join would overwrite columns {clash} (pass overwrite=True)")
    keys = [_key_text(v) for v in layer[layer_key]]
    out = layer
    for f in fields:
        values = [_parse_cell(table[k][f]) if k in table else None for k in keys]
        out = out.with_column(f, values, overwrite=overwrite)
    return out


def _key_text(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    return str(v)


def _fmt(v) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def write_ascii_grid(grid: Grid, ref: PathOrStream) -> None:
    """ESRI ASCII grid: six header lines then rows, top row first."""
    tf = grid.transform
    lines = [
        f"ncols {grid.n_cols}",
        f"nrows {grid.n_rows}",
        f"xllcorner {_fmt(tf.l)}",
        f"yllcorner {_fmt(tf.t - grid.n_rows * tf.c)}",
        f"cellsize {_fmt(tf.c)}",
        f"NODATA_value {_fmt(grid.nodata)}",
    ]
    for row in grid.cells:
        lines.append(" ".join(_fmt(v) for v in row))
    with _open(ref, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_ascii_grid(ref: PathOrStream) -> Grid:
    with _open(ref, "r") as fh:
        text = fh.read()
    header = {}
    body = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if len(header) < 6 and parts[0].lower() in (
            "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"
        ):
            header[parts[0].lower()] = float(parts[1])
        else:
            body.append([float(p) for p in parts])
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        c = header["cellsize"]
        l = header["xllcorner"]
        t = header["yllcorner"] + nrows * c
    except KeyError as exc:
        raise ValueError(f"ASCII grid header missing {exc.args[0]}") from None
    cells = np.array(body, dtype=float)
    if cells.shape != (nrows, ncols):
        raise ValueError(f"ASCII grid body is {cells.shape}, header says {(nrows, ncols)}")
    return Grid(AffineTransform(c, l, t), cells, header.get("nodata_value", -9999.0))
