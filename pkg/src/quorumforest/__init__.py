"""Conclusive rule explanations for multi-label random forests."""

from .data import Dataset, FeatureSpace, generate_ai4i_like, load_csv, minmax_scale, onehot_encode, prepare
from .evalx import coverage, evaluate, precision, rule_length
from .forest import Forest, Tree, predict, train_forest, tree_predict
from .fpm import fpgrowth, frequent_label_subsets
from .paths import extract_all_paths, extract_path, voting_paths
from .reduce import ReductionConfig, quorum, reduce_pipeline
from .rules import Rule, check_conclusiveness
from .strategies import StrategyConfig, explain, explain_all, explain_per_label, explain_subsets

__all__ = [
    "Dataset", "FeatureSpace", "Forest", "ReductionConfig", "Rule", "StrategyConfig", "Tree",
    "check_conclusiveness", "coverage", "evaluate", "explain", "explain_all", "explain_per_label",
    "explain_subsets", "extract_all_paths", "extract_path", "fpgrowth", "frequent_label_subsets",
    "generate_ai4i_like", "load_csv", "minmax_scale", "onehot_encode", "precision", "predict",
    "prepare", "quorum", "reduce_pipeline", "rule_length", "train_forest", "tree_predict",
    "voting_paths",
]
