"""Transductive semi-supervised TSK fuzzy classification of incomplete multi-view data.

The package trains a Takagi-Sugeno-Kang fuzzy classifier jointly over
several feature views in which whole view-rows may be missing.  Missing
rows are treated as free error variables, unlabeled instances carry
soft pseudo-labels constrained to the probability simplex, and the
views are combined through entropy-regularized adaptive weights.  All
blocks are optimized by alternating closed-form updates under
similarity-graph regularization.
"""

from .data import (
    MaskSpec,
    MultiViewDataset,
    SplitSpec,
    from_arrays,
    generate_mask,
    generate_split,
    load_dataset,
)
from .fuzzy import (
    FuzzyDesign,
    FuzzyRuleBase,
    estimate_antecedents,
    export_rules,
    firing_strengths,
    gaussian_membership,
    map_to_fuzzy_space,
)
from .graphs import SimilarityGraphs, build_graphs, build_instance_similarity, build_label_similarity
from .impute import knn_impute
from .solver import (
    FittedModel,
    Hyperparams,
    ModelState,
    ObjectiveTerms,
    Trainer,
    fit,
    load_checkpoint,
    predict_inductive,
    predict_transductive,
    save_checkpoint,
)
from .stats import FriedmanReport, friedman_holm, holm_test, load_trial_matrix

__version__ = "0.1.0"

__all__ = [
    "MaskSpec",
    "MultiViewDataset",
    "SplitSpec",
    "from_arrays",
    "generate_mask",
    "generate_split",
    "load_dataset",
    "FuzzyDesign",
    "FuzzyRuleBase",
    "estimate_antecedents",
    "export_rules",
    "firing_strengths",
    "gaussian_membership",
    "map_to_fuzzy_space",
    "SimilarityGraphs",
    "build_graphs",
    "build_instance_similarity",
    "build_label_similarity",
    "knn_impute",
    "FittedModel",
    "Hyperparams",
    "ModelState",
    "ObjectiveTerms",
    "Trainer",
    "fit",
    "load_checkpoint",
    "predict_inductive",
    "predict_transductive",
    "save_checkpoint",
    "FriedmanReport",
    "friedman_holm",
    "holm_test",
    "load_trial_matrix",
    "__version__",
]
