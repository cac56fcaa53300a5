"""Confusion counts and the class-imbalance-weighted accuracy metric."""

from dataclasses import dataclass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn + other.fn,
        )

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def prior_weight(c: ConfusionCounts) -> float:
    """Ratio of negative to positive prior, the weight applied to TP/FN."""
    if c.tp + c.fn == 0:
        raise ValueError("weight undefined: no positive examples")
    return (c.tn + c.fp) / (c.tp + c.fn)


def positive_prior(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise ValueError("prior undefined: no evaluated units")
    return (c.tp + c.fn) / c.total


def weighted_accuracy(c: ConfusionCounts) -> float:
    """Accuracy with true positives re-weighted by the ratio of priors.

    Equals (sensitivity + specificity) / 2.  Undefined (raises) when either
    class is absent from the evaluated units; callers report such cases as
    an explicit marker rather than a number.
    """
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        raise ValueError("weighted accuracy undefined: one class is absent")
    w = prior_weight(c)
    return (w * c.tp + c.tn) / (w * (c.tp + c.fn) + c.tn + c.fp)
