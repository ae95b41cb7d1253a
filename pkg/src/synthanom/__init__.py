"""Seamless synthetic anomalies for N-dimensional images.

Generates blended, deformed and intensity-shifted anomalies with
continuous per-voxel labels, plans task/fold cross-validation splits,
and evaluates anomaly-score maps.
"""

from .crossval import (
    Manifest,
    SampleAssignment,
    SplitIteration,
    SplitPlan,
    TaskFoldAssignment,
    assign_folds,
    associate_tasks,
    emit_manifest,
    enumerate_splits,
    parse_manifest,
)
from .labels import gaussian_label, label_map, logistic_label
from .masks import (
    AnomalyMask,
    MaskSpec,
    PlacementError,
    foreground_of,
    overlap_fraction,
    rasterize_mask,
    repeat_count,
    sample_anomaly_placement,
)
from .metrics import ScoredSet, UndefinedMetricError, auroc, average_precision, reduce_to_slices
from .poisson import (
    GuidedPatchProblem,
    divergence,
    dst1_forward,
    dst1_inverse,
    gradient,
    poisson_blend,
    solve_poisson_dirichlet,
)
from .rng import RngStream, derive_stream
from .tasks import (
    AnomalyRecord,
    DeformParams,
    DonorPool,
    GeneratorConfig,
    IntensityParams,
    TaskError,
    TaskKind,
    apply_anomaly,
    apply_random_anomalies,
    inter_blend,
    intra_blend,
    sink_deform,
    smooth_intensity,
    source_deform,
)

__version__ = "0.1.0"

__all__ = [
    "AnomalyMask",
    "AnomalyRecord",
    "DeformParams",
    "DonorPool",
    "GeneratorConfig",
    "GuidedPatchProblem",
    "IntensityParams",
    "Manifest",
    "MaskSpec",
    "PlacementError",
    "RngStream",
    "SampleAssignment",
    "ScoredSet",
    "SplitIteration",
    "SplitPlan",
    "TaskError",
    "TaskFoldAssignment",
    "TaskKind",
    "UndefinedMetricError",
    "apply_anomaly",
    "apply_random_anomalies",
    "assign_folds",
    "associate_tasks",
    "auroc",
    "average_precision",
    "derive_stream",
    "divergence",
    "dst1_forward",
    "dst1_inverse",
    "emit_manifest",
    "enumerate_splits",
    "foreground_of",
    "gaussian_label",
    "gradient",
    "inter_blend",
    "intra_blend",
    "label_map",
    "logistic_label",
    "overlap_fraction",
    "parse_manifest",
    "poisson_blend",
    "rasterize_mask",
    "reduce_to_slices",
    "repeat_count",
    "sample_anomaly_placement",
    "sink_deform",
    "smooth_intensity",
    "solve_poisson_dirichlet",
    "source_deform",
]
