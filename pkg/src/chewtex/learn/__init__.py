"""Learning primitives: standardization, RBF SVM via SMO, stratified CV,
GP-based hyperparameter search, and k-means bag-of-words encoding."""

from .bayesopt import HpoConfig, bayes_opt, candidate_grid, latin_hypercube
from .cluster import Codebook, bow_encode, kmeans_fit
from .standardize import Standardizer, apply_standardizer, fit_standardizer
from .svm import (
    SvmModel,
    balanced_class_weights,
    dual_objective,
    rbf_kernel_matrix,
    smo_solve,
    svm_predict,
    svm_train,
)
from .validate import CvSvmScorer, kfold_cv, stratified_folds

__all__ = [
    "Codebook",
    "CvSvmScorer",
    "HpoConfig",
    "Standardizer",
    "SvmModel",
    "apply_standardizer",
    "balanced_class_weights",
    "bayes_opt",
    "bow_encode",
    "candidate_grid",
    "dual_objective",
    "fit_standardizer",
    "kfold_cv",
    "kmeans_fit",
    "latin_hypercube",
    "rbf_kernel_matrix",
    "smo_solve",
    "stratified_folds",
    "svm_predict",
    "svm_train",
]
