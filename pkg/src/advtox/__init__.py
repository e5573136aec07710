"""Adversarial robustness toolkit for toxicity text classifiers.

Generates benign-targeted adversarial examples against binary, multiclass,
and multilabel toxicity models, measures attack success, and hardens the
built-in surrogate through single-attack and ensemble adversarial training.
"""

__version__ = "0.1.0"

from .text import AttackedText, WordEdit, levenshtein, perturbed_ratio, tokenize
from .victims import (
    CallableOracle,
    QueryLedger,
    RemoteClient,
    RemoteOracle,
    SurrogateModel,
    TaskKind,
    TaskType,
    TrainConfig,
    VictimOutput,
    load_surrogate,
    save_surrogate,
    train_surrogate,
)
from .resources import ResourceBundle
from .goals import GoalStatus, init_goal
from .recipes import BUILTIN_NAMES, AttackRecipe, builtin_recipe, load_recipe
from .runner import SeedResult, run_attacks
from .metrics import RunMetrics, bpsn_auc, compute_metrics, roc_auc, subgroup_auc
from .advtrain import AdvTrainConfig, adversarial_train, augment, evaluate_robustness
from .datasets import Dataset, DatasetRecord, infer_task, load_dataset, save_results

__all__ = [
    "AttackedText",
    "WordEdit",
    "tokenize",
    "levenshtein",
    "perturbed_ratio",
    "CallableOracle",
    "QueryLedger",
    "RemoteClient",
    "RemoteOracle",
    "SurrogateModel",
    "TaskKind",
    "TaskType",
    "TrainConfig",
    "VictimOutput",
    "train_surrogate",
    "save_surrogate",
    "load_surrogate",
    "ResourceBundle",
    "GoalStatus",
    "init_goal",
    "BUILTIN_NAMES",
    "AttackRecipe",
    "builtin_recipe",
    "load_recipe",
    "SeedResult",
    "run_attacks",
    "RunMetrics",
    "roc_auc",
    "subgroup_auc",
    "bpsn_auc",
    "compute_metrics",
    "AdvTrainConfig",
    "adversarial_train",
    "augment",
    "evaluate_robustness",
    "Dataset",
    "DatasetRecord",
    "infer_task",
    "load_dataset",
    "save_results",
]
