"""Mixed-type missing-value imputation, genetic wrapper feature selection and
alternating decision trees, with a stratified cross-validation / ROC harness."""

from .adtree import ADTConfig, ADTree, train
from .featsel import GaConfig, select_features
from .imputation import impute, impute_knn, impute_mean_mode
from .tabular import ColumnKind, Dataset, Schema, inject_missing, load_dataset, stratified_kfold

__all__ = [
    "ADTConfig",
    "ADTree",
    "ColumnKind",
    "Dataset",
    "GaConfig",
    "Schema",
    "impute",
    "impute_knn",
    "impute_mean_mode",
    "inject_missing",
    "load_dataset",
    "select_features",
    "stratified_kfold",
    "train",
]

__version__ = "0.1.0"
