"""Stratified k-fold cross-validation scored by weighted accuracy."""

import warnings

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import DegenerateLabelsError
from ..metrics import ConfusionCounts, weighted_accuracy
from .svm import DEFAULT_MAX_ITER, DEFAULT_TOL, balanced_class_weights, smo_solve


def stratified_folds(y, folds: int, seed: int = 0) -> list:
    """Index splits with each class spread round-robin across folds.

    When a class has fewer members than `folds`, the fold count drops to the
    minority count (leave-one-out on that class) with a warning.
    """
    y = np.asarray(y)
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    pos = np.flatnonzero(y > 0)
    neg = np.flatnonzero(y <= 0)
    min_class = min(len(pos), len(neg))
    if min_class < 2:
        raise DegenerateLabelsError(
            "stratified folds need at least 2 examples of each class"
        )
    effective = min(folds, min_class)
    if effective < folds:
        warnings.warn(
            f"a class has only {min_class} examples; falling back to "
            f"{effective}-fold (leave-one-out on that class)",
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    pos = rng.permutation(pos)
    neg = rng.permutation(neg)
    splits = []
    for k in range(effective):
        test = np.sort(np.concatenate([pos[k::effective], neg[k::effective]]))
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test] = False
        splits.append((np.flatnonzero(train_mask), test))
    return splits


def _confusion(y_true, y_pred) -> ConfusionCounts:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return ConfusionCounts(
        tp=int(np.sum((y_true > 0) & (y_pred > 0))),
        fp=int(np.sum((y_true <= 0) & (y_pred > 0))),
        tn=int(np.sum((y_true <= 0) & (y_pred <= 0))),
        fn=int(np.sum((y_true > 0) & (y_pred <= 0))),
    )


class CvSvmScorer:
    """Reusable CV evaluator for repeated (C, gamma) scoring.

    Fold splits and pairwise squared distances are computed once, so each
    score() call only exponentiates kernels and runs the SMO solver.  Scores
    are deterministic per (C, gamma) for a fixed seed.
    """

    def __init__(self, X, y, folds: int = 5, seed: int = 0,
                 tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        self.tol = tol
        self.max_iter = max_iter
        self._folds = []
        for train, test in stratified_folds(y, folds, seed):
            y_tr = y[train]
            weights = balanced_class_weights(y_tr)
            box_unit = np.where(y_tr > 0, weights[1], weights[-1])
            self._folds.append(
                {
                    "d2_train": cdist(X[train], X[train], "sqeuclidean"),
                    "d2_test": cdist(X[test], X[train], "sqeuclidean"),
                    "y_train": y_tr,
                    "y_test": y[test],
                    "box_unit": box_unit,
                }
            )

    def score(self, C: float, gamma: float) -> float:
        accs = []
        for fold in self._folds:
            K = np.exp(-gamma * fold["d2_train"])
            alpha, bias, _, _ = smo_solve(
                K, fold["y_train"], C * fold["box_unit"], tol=self.tol,
                max_iter=self.max_iter,
            )
            decision = np.exp(-gamma * fold["d2_test"]) @ (alpha * fold["y_train"]) + bias
            pred = np.where(decision >= 0.0, 1, -1)
            accs.append(weighted_accuracy(_confusion(fold["y_test"], pred)))
        return float(np.mean(accs))


def kfold_cv(X, y, folds: int, C: float, gamma: float, seed: int = 0,
             tol: float = DEFAULT_TOL) -> float:
    """Mean weighted accuracy of an RBF SVM over stratified folds."""
    return CvSvmScorer(X, y, folds=folds, seed=seed, tol=tol).score(C, gamma)
