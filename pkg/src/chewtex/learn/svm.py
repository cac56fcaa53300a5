"""Binary soft-margin SVM with RBF kernel, trained by an SMO dual solver.

The solver repeatedly picks the maximal violating pair of dual variables and
solves the two-variable subproblem analytically, stopping when the largest
KKT violation drops below tolerance.  Class imbalance is handled through
per-class box constraints C_y = C * n / (2 * n_y).
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ConfigError, DegenerateLabelsError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 100_000
SV_ALPHA_THRESHOLD = 1e-12


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray  # alpha_i * y_i for the support vectors
    bias: float
    gamma: float
    C: float
    class_weights: dict
    kkt_violation: float
    n_iter: int

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ShapeError(
                f"input has {X.shape[1]} features, model expects "
                f"{self.support_vectors.shape[1]}"
            )
        kernel = np.exp(-self.gamma * cdist(X, self.support_vectors, "sqeuclidean"))
        return kernel @ self.dual_coeffs + self.bias


def balanced_class_weights(y) -> dict:
    """Weights n / (2 * n_y): the rarer class gets the larger box."""
    y = np.asarray(y)
    n = len(y)
    n_pos = int(np.sum(y > 0))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("both classes are required to compute class weights")
    return {1: n / (2.0 * n_pos), -1: n / (2.0 * n_neg)}


def rbf_kernel_matrix(X, Y=None, gamma: float = 1.0) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=np.float64))
    return np.exp(-gamma * cdist(X, Y, "sqeuclidean"))


def smo_solve(K, y, box, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Solve the SVM dual on a precomputed kernel matrix.

    Maximizes sum(a) - 0.5 * (a*y)' K (a*y) subject to 0 <= a_i <= box_i and
    sum(a_i y_i) = 0.  Returns (alpha, bias, kkt_violation, n_iter).
    """
    y = np.asarray(y, dtype=np.float64)
    box = np.asarray(box, dtype=np.float64)
    n = len(y)
    alpha = np.zeros(n)
    # score_k = -y_k * grad_k of the dual objective; all points start at y_k.
    score = y.copy()
    slack = 1e-9 * box
    neg_inf = -np.inf
    iters = 0
    violation = np.inf
    while iters < max_iter:
        at_upper = alpha >= box - slack
        at_lower = alpha <= slack
        up = np.where((y > 0) & ~at_upper | (y < 0) & ~at_lower, score, neg_inf)
        low = np.where((y < 0) & ~at_upper | (y > 0) & ~at_lower, score, np.inf)
        i = int(np.argmax(up))
        j = int(np.argmin(low))
        if up[i] == neg_inf or low[j] == np.inf:
            violation = 0.0
            break
        violation = score[i] - score[j]
        if violation < tol:
            break
        quad = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        step = violation / quad
        step = min(step, box[i] - alpha[i] if y[i] > 0 else alpha[i])
        step = min(step, alpha[j] if y[j] > 0 else box[j] - alpha[j])
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        score -= step * (K[:, i] - K[:, j])
        iters += 1
    else:
        logger.warning(
            "SMO hit the %d-iteration cap with KKT violation %.3g", max_iter, violation
        )
    free = (alpha > slack) & (alpha < box - slack)
    if np.any(free):
        bias = float(np.mean(score[free]))
    else:
        up = np.where((y > 0) & (alpha < box - slack) | (y < 0) & (alpha > slack), score, neg_inf)
        low = np.where((y < 0) & (alpha < box - slack) | (y > 0) & (alpha > slack), score, np.inf)
        hi, lo = np.max(up), np.min(low)
        if not np.isfinite(hi):
            hi = lo
        if not np.isfinite(lo):
            lo = hi
        bias = float((hi + lo) / 2.0)
    return alpha, bias, float(max(violation, 0.0)), iters


def dual_objective(K, y, alpha) -> float:
    """Value of the maximized dual at the given multipliers."""
    coef = np.asarray(alpha) * np.asarray(y, dtype=np.float64)
    return float(np.sum(alpha) - 0.5 * coef @ K @ coef)


def svm_train(
    X,
    y,
    C: float,
    gamma: float,
    class_weights: dict | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SvmModel:
    """Train a binary RBF SVM; labels must be -1/+1 with both classes present."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise ShapeError(f"{X.shape[0]} rows but {len(y)} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ConfigError("labels must be -1 or +1")
    if C <= 0 or gamma <= 0:
        raise ConfigError(f"C and gamma must be positive, got C={C}, gamma={gamma}")
    if len(np.unique(y)) < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    if class_weights is None:
        class_weights = balanced_class_weights(y)
    box = C * np.where(y > 0, class_weights[1], class_weights[-1])
    K = rbf_kernel_matrix(X, gamma=gamma)
    alpha, bias, violation, iters = smo_solve(K, y, box, tol=tol, max_iter=max_iter)
    sv = alpha > SV_ALPHA_THRESHOLD
    return SvmModel(
        support_vectors=X[sv].copy(),
        dual_coeffs=(alpha * y)[sv],
        bias=bias,
        gamma=float(gamma),
        C=float(C),
        class_weights={1: float(class_weights[1]), -1: float(class_weights[-1])},
        kkt_violation=violation,
        n_iter=iters,
    )


def svm_predict(model: SvmModel, X):
    """Labels (+1/-1) and raw decision values; sign(0) maps to +1."""
    decisions = model.decision_function(X)
    labels = np.where(decisions >= 0.0, 1, -1)
    return labels, decisions
