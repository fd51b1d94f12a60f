"""Cluster-robust inference with expansion-corrected critical values.

Workflow: load or build a `ClusteredDataset`, state a `Hypothesis`, call
`fit`, then take critical values from `critical_value` (the corrected
analytic method) or from the reference methods in `methods`.  The
`mc` module reproduces the simulation tables.
"""

from ._kernels import active_backend
from .data import (
    ClusterBlock,
    ClusteredDataset,
    Hypothesis,
    PanelSchema,
    add_dummies,
    load_panel,
    within_transform,
    write_panel,
)
from .edgeworth import (
    CorrectedCritical,
    EdgeworthMoments,
    ExpansionCdf,
    critical_value,
    edgeworth_cdf,
    estimate_moments,
    hermite,
    moments_from_fit,
    q1,
    q2,
)
from .errors import (
    ClusterCritError,
    ConfigError,
    DegenerateVarianceError,
    DesignError,
    ParseError,
    RankError,
    SchemaError,
    ValidationError,
)
from .methods import (
    METHODS,
    BootstrapCV,
    MethodResult,
    evaluate_methods,
    normal_cv,
    pairs_bootstrap_cv,
    student_cv,
    wild_cluster_bootstrap_cv,
)
from .mc import GridResult, McResult, run_grid
from .ols import ClusterFit, ScoreComponents, fit, score_components, variance_identity_residual

__version__ = "0.1.0"

__all__ = [
    "ClusterBlock",
    "ClusteredDataset",
    "Hypothesis",
    "PanelSchema",
    "add_dummies",
    "load_panel",
    "within_transform",
    "write_panel",
    "ClusterFit",
    "ScoreComponents",
    "fit",
    "score_components",
    "variance_identity_residual",
    "EdgeworthMoments",
    "CorrectedCritical",
    "ExpansionCdf",
    "hermite",
    "estimate_moments",
    "moments_from_fit",
    "q1",
    "q2",
    "critical_value",
    "edgeworth_cdf",
    "METHODS",
    "BootstrapCV",
    "MethodResult",
    "normal_cv",
    "student_cv",
    "pairs_bootstrap_cv",
    "wild_cluster_bootstrap_cv",
    "evaluate_methods",
    "McResult",
    "GridResult",
    "run_grid",
    "active_backend",
    "ClusterCritError",
    "SchemaError",
    "ParseError",
    "ValidationError",
    "ConfigError",
    "RankError",
    "DegenerateVarianceError",
    "DesignError",
    "__version__",
]
