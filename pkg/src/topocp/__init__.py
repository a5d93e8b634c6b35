"""Topology-aware segmentation toolkit.

Persistent-homology machinery for 2D/3D likelihood grids, a
topology-preserving loss with exact gradients, topology-sensitive
evaluation metrics, and the patch/volume plumbing around them.
"""
from .errors import (
    ComputationError,
    ParameterError,
    TopocpError,
    UsageError,
    VolumeIOError,
)
from .grid import (
    CONNECTIVITY,
    BinaryMask,
    Connectivity,
    LikelihoodGrid,
    background_structure,
    foreground_structure,
    pad_twice,
    standardize,
    threshold,
)
from .io import VolumeHeader, read_volume, write_report, write_volume
from .loss import (
    LossConfig,
    LossResult,
    LossWeights,
    Matching,
    bce_loss,
    binary_target_diagram,
    combined_loss,
    dice_loss,
    match_diagrams,
    topo_loss,
)
from .metrics import (
    ConfusionCounts,
    MetricsReport,
    assd,
    bne,
    confusion,
    dsc,
    evaluate_pair,
    hole_ratio,
    largest_cc,
    write_report_csv,
    write_report_json,
)
from .optimize import OptimRun, optimize_likelihood, write_trajectory_csv
from .patches import (
    PatchRecord,
    PatchSpec,
    aggregate,
    extract_patches,
    read_patch_dir,
    write_patch_dir,
)
from .persistence import (
    BettiVector,
    PersistenceDiagram,
    PersistencePair,
    betti_numbers,
    compute_persistence,
    write_diagram_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BettiVector",
    "BinaryMask",
    "CONNECTIVITY",
    "ComputationError",
    "ConfusionCounts",
    "Connectivity",
    "LikelihoodGrid",
    "LossConfig",
    "LossResult",
    "LossWeights",
    "Matching",
    "MetricsReport",
    "OptimRun",
    "ParameterError",
    "PatchRecord",
    "PatchSpec",
    "PersistenceDiagram",
    "PersistencePair",
    "TopocpError",
    "UsageError",
    "VolumeHeader",
    "VolumeIOError",
    "aggregate",
    "assd",
    "background_structure",
    "bce_loss",
    "betti_numbers",
    "binary_target_diagram",
    "bne",
    "combined_loss",
    "compute_persistence",
    "confusion",
    "dice_loss",
    "dsc",
    "evaluate_pair",
    "extract_patches",
    "foreground_structure",
    "hole_ratio",
    "largest_cc",
    "match_diagrams",
    "optimize_likelihood",
    "pad_twice",
    "read_patch_dir",
    "read_volume",
    "standardize",
    "threshold",
    "topo_loss",
    "write_diagram_csv",
    "write_patch_dir",
    "write_report",
    "write_report_csv",
    "write_report_json",
    "write_trajectory_csv",
    "write_volume",
    "__version__",
]
