"""Per-feature standardization fitted on training data only."""

from dataclasses import dataclass

import numpy as np

DEGENERATE_STD = 1e-12


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X) -> np.ndarray:
        return apply_standardizer(self, X)


def fit_standardizer(X) -> Standardizer:
    """Column means and population standard deviations.

    Columns with (numerically) zero spread get std 1 so they pass through
    as zeros instead of dividing by zero.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.size == 0:
        raise ValueError("cannot fit a standardizer on an empty matrix")
    means = X.mean(axis=0)
    stds = X.std(axis=0)  # population convention (1/n)
    stds = np.where(stds < DEGENERATE_STD, 1.0, stds)
    return Standardizer(means=means, stds=stds)


def apply_standardizer(standardizer: Standardizer, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != len(standardizer.means):
        raise ValueError(
            f"matrix has {X.shape[1]} columns, standardizer expects {len(standardizer.means)}"
        )
    return (X - standardizer.means) / standardizer.stds
