"""Persistence-pruned discrete Morse structures on 2D/3D scalar fields:
ridge skeletons, basin walls, a topology-aware training loss, and
topology-sensitive segmentation metrics."""

__version__ = "0.1.0"

from .basin_boundary import BasinLabeling, basin_labels, boundary_mask
from .cubical import Cell, CubicalComplex, rho
from .field_io import (
    BinaryMask,
    FormatError,
    ScalarField,
    binarize,
    read_field,
    write_field,
    write_mask,
)
from .morse_skeleton import (
    GradientField,
    MorseStructure,
    cancel_below,
    init_trivial_field,
    rasterize,
    skeleton_mask,
    trace_skeleton,
)
from .persistence import (
    Filtration,
    PersistencePair,
    build_filtration,
    reduce,
    zero_dim_pairs,
)
from .seg_metrics import (
    BettiProfile,
    RegionLabeling,
    ari,
    betti_error,
    betti_numbers,
    dice_and_accuracy,
    region_labeling,
    voi,
)
from .topo_loss import (
    LossConfig,
    LossReport,
    bce,
    dmt_loss,
    loss_gradient,
    morse_mask,
    total_loss,
)

__all__ = [
    "__version__",
    "BasinLabeling",
    "basin_labels",
    "boundary_mask",
    "Cell",
    "CubicalComplex",
    "rho",
    "BinaryMask",
    "FormatError",
    "ScalarField",
    "binarize",
    "read_field",
    "write_field",
    "write_mask",
    "GradientField",
    "MorseStructure",
    "cancel_below",
    "init_trivial_field",
    "rasterize",
    "skeleton_mask",
    "trace_skeleton",
    "Filtration",
    "PersistencePair",
    "build_filtration",
    "reduce",
    "zero_dim_pairs",
    "BettiProfile",
    "RegionLabeling",
    "ari",
    "betti_error",
    "betti_numbers",
    "dice_and_accuracy",
    "region_labeling",
    "voi",
    "LossConfig",
    "LossReport",
    "bce",
    "dmt_loss",
    "loss_gradient",
    "morse_mask",
    "total_loss",
]
