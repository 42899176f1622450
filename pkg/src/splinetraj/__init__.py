"""Longitudinal analysis of manifold-valued data with intrinsic Bezier splines.

The pipeline: per-subject spline regression on a Riemannian manifold,
discrete geodesics and mean trajectories in the space of splines, and
PGA-based trajectory score descriptors.
"""

from .errors import ConvergenceError, DomainError
from .manifolds import (
    SPD,
    Euclidean,
    Manifold,
    ManifoldPoint,
    Product,
    Sphere,
    TangentVector,
    dist,
    exp,
    frechet_mean,
    geodesic,
    inner,
    log,
    norm,
)
from .bezier import (
    BezierSpline,
    SplineViolation,
    de_casteljau,
    distinct_control_points,
    eval_spline,
    segments_from_distinct,
    validate,
)
from .regression import FitOptions, RegressionProblem, RegressionResult, fit, gradient, objective
from .hierarchy import (
    DiscretePath,
    MeanResult,
    SplineSpace,
    discrete_geodesic,
    discrete_path_energy,
    l2_curve_dist2,
    mean_trajectory,
    spline_distance,
)
from .stats import (
    GramAnalysis,
    SyntheticSpec,
    gram_matrix,
    pga_pipeline,
    pga_scores,
    synthesize,
    trajectory_fields,
)
from .data import Dataset, SubjectSeries

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "Manifold",
    "Euclidean",
    "Sphere",
    "SPD",
    "Product",
    "ManifoldPoint",
    "TangentVector",
    "exp",
    "log",
    "dist",
    "geodesic",
    "inner",
    "norm",
    "frechet_mean",
    "BezierSpline",
    "SplineViolation",
    "de_casteljau",
    "eval_spline",
    "distinct_control_points",
    "segments_from_distinct",
    "validate",
    "RegressionProblem",
    "RegressionResult",
    "FitOptions",
    "objective",
    "gradient",
    "fit",
    "SplineSpace",
    "DiscretePath",
    "MeanResult",
    "l2_curve_dist2",
    "discrete_path_energy",
    "discrete_geodesic",
    "spline_distance",
    "mean_trajectory",
    "GramAnalysis",
    "SyntheticSpec",
    "trajectory_fields",
    "gram_matrix",
    "pga_scores",
    "pga_pipeline",
    "synthesize",
    "Dataset",
    "SubjectSeries",
    "__version__",
]
