"""Vector land-use suitability analysis: measure, rescale, aggregate."""
from .aggregate import (
    ComparisonMatrix,
    ConvergenceError,
    PriorityVector,
    WeightedOverlay,
    ahp_weights,
    consistency_ratio,
    random_ahp,
    weighted_sum,
)
from .geometry import (
    FeatureLayer,
    LineString,
    Point2,
    Polygon,
    bbox,
    centroid,
    contains,
    contains_points,
)
from .io import read_ascii_grid, read_csv_join, read_geojson, write_ascii_grid, write_geojson
from .measure import (
    IdwConfig,
    IDWRegressor,
    MeasurementResult,
    NearestDistance,
    density_of_line,
    density_of_point,
    distance_to_line,
    distance_to_point,
    idw_cv,
    idw_estimate,
)
from .pipeline import ModelError, PipelineError, RunReport, parse_model, run_model
from .raster import NODATA, AffineTransform, Grid, cell_to_world, rasterize_lines, world_to_cell
from .rescale import (
    ClassBreaks,
    LinearRescaler,
    LinearScale,
    NaturalBreaksDiscretizer,
    Reclassifier,
    ReclassifyTable,
    linear,
    natural_breaks,
    reclassify,
)
from .spatial_index import KdTree, Metric

__version__ = "0.1.0"

__all__ = [
    "AffineTransform", "ClassBreaks", "ComparisonMatrix", "ConvergenceError", "FeatureLayer",
    "Grid", "IDWRegressor", "IdwConfig", "KdTree", "LineString", "LinearRescaler",
    "LinearScale", "MeasurementResult", "Metric", "ModelError", "NODATA",
    "NaturalBreaksDiscretizer", "NearestDistance", "PipelineError", "Point2", "Polygon",
    "PriorityVector", "Reclassifier", "ReclassifyTable", "RunReport", "WeightedOverlay",
    "ahp_weights", "bbox", "cell_to_world", "centroid", "consistency_ratio", "contains",
    "contains_points", "density_of_line", "density_of_point", "distance_to_line",
    "distance_to_point", "idw_cv", "idw_estimate", "linear", "natural_breaks", "parse_model",
    "random_ahp", "rasterize_lines", "read_ascii_grid", "read_csv_join", "read_geojson",
    "reclassify", "run_model", "weighted_sum", "world_to_cell", "write_ascii_grid",
    "write_geojson",
]
