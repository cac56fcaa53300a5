"""k-means codebook fitting and bag-of-words histogram encoding."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ConfigError, ShapeError

KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 300


@dataclass(frozen=True)
class Codebook:
    centroids: np.ndarray
    inertia: float

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _plusplus_init(X, k, rng) -> np.ndarray:
    """k-means++ seeding: progressively sample proportional to squared distance."""
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = cdist(X, centroids[:1], "sqeuclidean")[:, 0]
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[i:] = X[rng.integers(n, size=k - i)]
            break
        probs = d2 / total
        centroids[i] = X[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, cdist(X, centroids[i : i + 1], "sqeuclidean")[:, 0])
    return centroids


def _lloyd(X, centroids, max_iter=KMEANS_MAX_ITER, tol=KMEANS_TOL):
    """Lloyd iterations; empty clusters are re-seeded to the farthest point.

    Returns (centroids, assignments, inertia, inertia_history) where the
    history holds the inertia after each assignment step (non-increasing).
    """
    k = centroids.shape[0]
    history = []
    for _ in range(max_iter):
        d2 = cdist(X, centroids, "sqeuclidean")
        assign = np.argmin(d2, axis=1)
        min_d2 = d2[np.arange(len(X)), assign]
        history.append(float(min_d2.sum()))
        counts = np.bincount(assign, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if len(empties):
            # hand each empty cluster the currently worst-explained point
            order = np.argsort(min_d2)[::-1]
            for empty, point in zip(empties, order):
                centroids = centroids.copy()
                centroids[empty] = X[point]
            continue
        sums = np.zeros_like(centroids)
        np.add.at(sums, assign, X)
        new_centroids = sums / counts[:, None]
        shift = np.max(np.linalg.norm(new_centroids - centroids, axis=1))
        centroids = new_centroids
        if shift < tol:
            break
    d2 = cdist(X, centroids, "sqeuclidean")
    assign = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(X)), assign].sum())
    history.append(inertia)
    return centroids, assign, inertia, history


def kmeans_fit(X, k: int, seed: int = 0) -> Codebook:
    """k-means++ initialization followed by Lloyd iterations."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if X.shape[0] < k:
        raise ConfigError(f"cannot fit {k} clusters to {X.shape[0]} points")
    rng = np.random.default_rng(seed)
    init = _plusplus_init(X, k, rng)
    centroids, _, inertia, _ = _lloyd(X, init)
    return Codebook(centroids=centroids, inertia=inertia)


def bow_encode(codebook: Codebook, vectors) -> np.ndarray:
    """Normalized hard-assignment histogram of vectors over the codebook.

    Ties go to the lowest centroid index; the histogram sums to exactly 1.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if vectors.shape[0] == 0:
        raise ValueError("cannot encode an empty vector list")
    if vectors.shape[1] != codebook.centroids.shape[1]:
        raise ShapeError(
            f"vectors have {vectors.shape[1]} features, codebook expects "
            f"{codebook.centroids.shape[1]}"
        )
    assign = np.argmin(cdist(vectors, codebook.centroids, "sqeuclidean"), axis=1)
    hist = np.bincount(assign, minlength=codebook.k).astype(np.float64)
    return hist / hist.sum()
