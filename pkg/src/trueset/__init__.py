"""Curation and evaluation toolkit for binary segmentation datasets.

Pick a small, distribution-representative training subset from a larger
dataset via PCA-coordinate binning, generate knowledge-based ground-truth
augmentations, and score prediction probability maps against ground truth.
"""

from .core_data import (
    BinaryMask,
    DatasetManifest,
    FeatureTable,
    ManifestEntry,
    ProbabilityMap,
    load_manifest,
    read_feature_table,
    read_mask,
    read_probability_map,
    write_feature_table,
    write_manifest,
    write_mask,
)
from .embed import FeatureProvider, builtin_descriptor, features_for
from .select import (
    BinStructure,
    CoordinateMap,
    SelectionQuotas,
    TrueSplit,
    allset_split,
    build_bins,
    distances_from_mean,
    emit_coordinates,
    pca_project,
    select_true_images,
    selection_quotas,
)
from .augment import AugmentSpec, build_augmented_manifest, mix, random_masking, scale_space, stochastic_width
from .eval import (
    ConfusionCounts,
    LossParams,
    MetricReport,
    binarize,
    confusion,
    curve_points,
    evaluate_set,
    focal_dice_loss,
    grid_search_threshold,
    metrics,
)
from .imageops import Kernel, connected_components, convex_hull, dilate, point_in_polygon, resize

__version__ = "0.1.0"
