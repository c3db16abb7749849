"""Component lasso: elastic nets fit per covariance component, recombined by
non-negative least squares."""

from .cluster import Partition, build_dendrogram, cut_dendrogram, threshold_components
from .data import Dataset, RawDataset, load_csv, standardize
from .pipeline import (
    Holdout,
    KFold,
    SelectionGrid,
    component_lasso_fit,
    fit_estimator,
    predict,
    select_model,
)
from .solve import EnetConfig, enet_path, lambda_grid, nnls

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EnetConfig",
    "Holdout",
    "KFold",
    "Partition",
    "RawDataset",
    "SelectionGrid",
    "build_dendrogram",
    "component_lasso_fit",
    "cut_dendrogram",
    "enet_path",
    "fit_estimator",
    "lambda_grid",
    "load_csv",
    "nnls",
    "predict",
    "select_model",
    "standardize",
    "threshold_components",
]
