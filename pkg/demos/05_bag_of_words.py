"""Bag-of-words encoding of variable-length chewing bouts.

Bouts of wildly different durations become fixed-length histograms: window
features are clustered into a codebook, and each bout is the normalized
histogram of its windows' nearest centroids.
"""

import numpy as np

from chewtex import default_band_plan, extract_matrix, window_bout
from chewtex.corpus import AttributeLabels
from chewtex.learn import apply_standardizer, bow_encode, fit_standardizer, kmeans_fit
from chewtex.synth import render_chew

FS = 8000
plan = default_band_plan(FS)
rng = np.random.default_rng(0)


def render_bout(labels, n_chews):
    chunks = []
    for _ in range(n_chews):
        chunks.append(render_chew(rng, FS, 0.56, labels, 1.0, 1.0, 1.0, 1.0))
        chunks.append(0.002 * rng.standard_normal(int(0.15 * FS)))  # gap noise
    return np.concatenate(chunks)


crispy = AttributeLabels(True, False, False)
wet = AttributeLabels(False, True, False)
bouts = [render_bout(crispy, n) for n in (4, 9, 17)]
bouts += [render_bout(wet, n) for n in (5, 12)]

window_features = [extract_matrix(window_bout(b, FS), FS, plan) for b in bouts]
print("bout durations:", [f"{len(b)/FS:.1f}s" for b in bouts])
print("windows per bout:", [len(W) for W in window_features])

standardizer = fit_standardizer(np.vstack(window_features))
codebook = kmeans_fit(
    apply_standardizer(standardizer, np.vstack(window_features)), k=8, seed=0
)
print(f"\ncodebook: k={codebook.k}, inertia={codebook.inertia:.1f}")

histograms = [
    bow_encode(codebook, apply_standardizer(standardizer, W)) for W in window_features
]
kinds = ["crispy"] * 3 + ["wet"] * 2
print("\nper-bout histograms (all length 8, summing to 1):")
for kind, hist in zip(kinds, histograms):
    cells = " ".join(f"{v:.2f}" for v in hist)
    print(f"  {kind:7s} [{cells}]  sum={hist.sum():.3f}")
print("\nBouts of one texture land on the same centroids regardless of length,")
print("so the downstream SVM sees fixed-dimension, comparable inputs.")
