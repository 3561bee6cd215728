"""Class-contrast node embeddings: spatial class counts over k-hop
neighborhoods, landmark-based contextual vectors, class-aware homophily
analysis and a small MLP harness for node classification and link
prediction."""

from .contextual import build_contextual_block, compute_landmarks, contextual_vector, pca_reduce
from .datasets import (LinkSplit, export_embeddings_csv, export_generic_csv, load_content_cites,
                       load_dataset, load_generic_csv, make_link_split)
from .errors import (ClassContrastError, ClassContrastWarning, ConfigError, DataError,
                     PipelineError, TrainingError)
from .graph import (Direction, Graph, NodeTable, Role, SplitAssignment, k_hop_neighborhood,
                    stratified_split)
from .homophily import (HomophilyMatrix, alpha_homophily_ratio, contextual_homophily,
                        edge_homophily, higher_homophily, homophily_matrix, node_homophily,
                        verify_theorem1, verify_theorem_b2)
from .mlp import (EvalReport, MlpModel, TrainConfig, auc, gradient_check, predict_classes,
                  train_link_predictor, train_node_classifier)
from .pipeline import (PipelineConfig, assemble_embedding, run_ablation, run_homophily_report,
                       run_link_prediction, run_transductive)
from .recipes import BUNDLED, DatasetRecipe, LandmarkSpec, SpatialRow, get_recipe
from .spatial import build_spatial_block, spatial_counts, spatial_counts_weighted

__version__ = "0.1.0"

__all__ = [
    "BUNDLED",
    "ClassContrastError",
    "ClassContrastWarning",
    "ConfigError",
    "DataError",
    "DatasetRecipe",
    "Direction",
    "EvalReport",
    "Graph",
    "HomophilyMatrix",
    "LandmarkSpec",
    "LinkSplit",
    "MlpModel",
    "NodeTable",
    "PipelineConfig",
    "PipelineError",
    "Role",
    "SpatialRow",
    "SplitAssignment",
    "TrainConfig",
    "TrainingError",
    "alpha_homophily_ratio",
    "assemble_embedding",
    "auc",
    "build_contextual_block",
    "build_spatial_block",
    "compute_landmarks",
    "contextual_homophily",
    "contextual_vector",
    "edge_homophily",
    "export_embeddings_csv",
    "export_generic_csv",
    "get_recipe",
    "gradient_check",
    "higher_homophily",
    "homophily_matrix",
    "k_hop_neighborhood",
    "load_content_cites",
    "load_dataset",
    "load_generic_csv",
    "make_link_split",
    "node_homophily",
    "pca_reduce",
    "predict_classes",
    "run_ablation",
    "run_homophily_report",
    "run_link_prediction",
    "run_transductive",
    "spatial_counts",
    "spatial_counts_weighted",
    "stratified_split",
    "train_link_predictor",
    "train_node_classifier",
    "verify_theorem1",
    "verify_theorem_b2",
]
