"""Structural-mapping graph augmentation with label-reliability filtering and model evolution."""

from .augment import AugmentConfig, AugmentationInfeasible, Mapping, augment_dataset, augment_graph
from .datasets import LabeledDataset, Provenance, dataset_stats, load_pool, load_tu_dataset, save_pool
from .evolve import EvolveConfig, m_evolve, rimp, run_experiment, stratified_split
from .filtration import confusion_matrix, filter_pool, label_reliability, optimize_threshold
from .graph import Graph, Path, find_paths, has_length_l_path, is_connected, ra_score
from .models import GraphModel, KNNClassifier, LogisticRegression, ModelConfig, spectral_embed

__version__ = "0.1.0"
