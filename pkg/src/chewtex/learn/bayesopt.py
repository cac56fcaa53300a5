"""Gaussian-process Bayesian optimization of (C, gamma) on a log2 grid.

A Matern-5/2 GP surrogate is fitted to the scores observed so far; the next
point maximizes expected improvement over a fixed 0.25-log2-step candidate
grid.  When the GP's posterior standard deviation collapses everywhere below
a threshold, the next point is instead the one of maximum posterior standard
deviation, which keeps the search from stalling in a local basin.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist
from scipy.stats import norm

from ..errors import ConfigError

CANDIDATE_STEP_LOG2 = 0.25
LENGTH_SCALE_GRID = np.geomspace(0.05, 2.0, 16)
GP_NOISE = 1e-6
GP_JITTER = 1e-10


@dataclass(frozen=True)
class HpoConfig:
    log2_c_range: tuple = (-5.0, 15.0)
    log2_gamma_range: tuple = (-15.0, 3.0)
    budget: int = 40
    n_init: int = 10
    posterior_std_threshold: float = 1e-3
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        for name, (lo, hi) in (
            ("log2_c_range", self.log2_c_range),
            ("log2_gamma_range", self.log2_gamma_range),
        ):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ConfigError(f"{name} must be a finite interval, got ({lo}, {hi})")
        if self.n_init < 2:
            raise ConfigError("initial design needs at least 2 points")
        if self.budget < self.n_init:
            raise ConfigError(
                f"budget ({self.budget}) is smaller than the initial design ({self.n_init})"
            )
        if self.folds < 2:
            raise ConfigError("cross-validation needs at least 2 folds")


def _matern52(dists: np.ndarray) -> np.ndarray:
    a = np.sqrt(5.0) * dists
    return (1.0 + a + a * a / 3.0) * np.exp(-a)


class _Gp:
    """Zero-mean Matern-5/2 GP on [0, 1]^2 with marginal-likelihood scale fit."""

    def __init__(self, X, y):
        self.X = X
        n = len(y)
        d_train = cdist(X, X)
        best = None
        for ell in LENGTH_SCALE_GRID:
            K = _matern52(d_train / ell)
            K[np.diag_indices_from(K)] += GP_NOISE + GP_JITTER
            try:
                chol = linalg.cholesky(K, lower=True)
            except linalg.LinAlgError:
                continue
            alpha = linalg.cho_solve((chol, True), y)
            amp2 = max(float(y @ alpha) / n, 1e-12)
            log_ml = -0.5 * n * np.log(amp2) - np.log(np.diag(chol)).sum()
            if best is None or log_ml > best[0]:
                best = (log_ml, ell, chol, alpha, amp2)
        if best is None:
            raise ConfigError("GP fit failed for every length scale")
        _, self.ell, self._chol, self._alpha, self.amp2 = best

    def predict(self, X_new):
        k_star = _matern52(cdist(X_new, self.X) / self.ell)
        mean = k_star @ self._alpha
        v = linalg.solve_triangular(self._chol, k_star.T, lower=True)
        var = self.amp2 * np.maximum(1.0 + GP_NOISE - np.sum(v * v, axis=0), 0.0)
        return mean, np.sqrt(var)


def latin_hypercube(rng, n: int, dims: int = 2) -> np.ndarray:
    """n stratified samples of the unit cube, one per stratum per dimension."""
    u = np.empty((n, dims))
    for d in range(dims):
        u[:, d] = (rng.permutation(n) + rng.uniform(size=n)) / n
    return u


def _expected_improvement(mean, std, best) -> np.ndarray:
    improve = mean - best
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std > 0, improve / std, 0.0)
        ei = np.where(std > 0, improve * norm.cdf(z) + std * norm.pdf(z), 0.0)
    return ei


def candidate_grid(cfg: HpoConfig) -> np.ndarray:
    """The 0.25-log2-step grid, ordered ascending by (log2 C, log2 gamma)."""
    c_lo, c_hi = cfg.log2_c_range
    g_lo, g_hi = cfg.log2_gamma_range
    cs = np.arange(c_lo, c_hi + 1e-9, CANDIDATE_STEP_LOG2)
    gs = np.arange(g_lo, g_hi + 1e-9, CANDIDATE_STEP_LOG2)
    grid = np.array([(c, g) for c in cs for g in gs])
    return grid


def bayes_opt(objective, cfg: HpoConfig, full_output: bool = False):
    """Maximize objective(C, gamma); returns the best observed (C, gamma).

    The search runs in (log2 C, log2 gamma).  Evaluations are prefix-stable
    in the budget: with a fixed seed, a larger budget extends the smaller
    budget's evaluation sequence.  Ties on the best observed score resolve
    toward smaller C, then smaller gamma.
    """
    if cfg.budget < cfg.n_init:
        raise ConfigError(
            f"budget ({cfg.budget}) is smaller than the initial design ({cfg.n_init})"
        )
    rng = np.random.default_rng(cfg.seed)
    lows = np.array([cfg.log2_c_range[0], cfg.log2_gamma_range[0]])
    highs = np.array([cfg.log2_c_range[1], cfg.log2_gamma_range[1]])
    span = highs - lows

    points = lows + latin_hypercube(rng, cfg.n_init) * span
    scores = [float(objective(2.0 ** p[0], 2.0 ** p[1])) for p in points]
    points = list(points)

    grid = candidate_grid(cfg)
    grid_unit = (grid - lows) / span

    while len(points) < cfg.budget:
        X_obs = (np.asarray(points) - lows) / span
        y_obs = np.asarray(scores)
        y_std = y_obs.std()
        y_norm = (y_obs - y_obs.mean()) / y_std if y_std > 1e-12 else np.zeros_like(y_obs)
        gp = _Gp(X_obs, y_norm)

        taken = cdist(grid_unit, X_obs).min(axis=1) < 1e-9
        available = ~taken
        if not np.any(available):
            break
        mean, std = gp.predict(grid_unit)
        std_open = np.where(available, std, -np.inf)
        if np.max(std) < cfg.posterior_std_threshold:
            pick = int(np.argmax(std_open))
        else:
            ei = _expected_improvement(mean, std, float(y_norm.max()))
            ei_open = np.where(available, ei, -np.inf)
            pick = int(np.argmax(ei_open))
        nxt = grid[pick]
        points.append(nxt)
        scores.append(float(objective(2.0 ** nxt[0], 2.0 ** nxt[1])))

    order = sorted(
        range(len(points)),
        key=lambda idx: (-scores[idx], points[idx][0], points[idx][1]),
    )
    best = points[order[0]]
    result = (2.0 ** best[0], 2.0 ** best[1])
    if full_output:
        trace = [
            (2.0 ** p[0], 2.0 ** p[1], s) for p, s in zip(points, scores)
        ]
        return result + (trace,)
    return result
