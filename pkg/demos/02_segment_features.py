"""Feature extraction on the three synthetic chew archetypes.

Renders one chew of a crispy, a wet, and a chewy food, then prints the
per-segment descriptor so the attribute signatures (band energies, fractal
dimension, condition number, moments) are visible side by side.
"""

import numpy as np

from chewtex import default_band_plan, extract_segment_features, feature_names
from chewtex.corpus import AttributeLabels
from chewtex.synth import render_chew

FS = 8000
plan = default_band_plan(FS)
names = feature_names(plan)

archetypes = {
    "crispy (chips-like)": AttributeLabels(True, False, False),
    "wet (fruit-like)": AttributeLabels(False, True, False),
    "chewy (toffee-like)": AttributeLabels(False, False, True),
    "neutral (bread-like)": AttributeLabels(False, False, False),
}

rows = {}
for name, labels in archetypes.items():
    rng = np.random.default_rng(1)
    chew = render_chew(
        rng, FS, 0.56, labels,
        food_tune=1.0, subject_tune=1.0, subject_gain=1.0, rate_factor=1.0,
    )
    rows[name] = extract_segment_features(chew, FS, plan).as_array()

width = max(len(n) for n in names)
header = "".join(f"{k.split()[0]:>12s}" for k in archetypes)
print(f"{'feature':<{width}s}{header}")
for i, feature in enumerate(names):
    values = "".join(f"{rows[k][i]:12.3f}" for k in archetypes)
    print(f"{feature:<{width}s}{values}")

print("\nCrispy chews light up the 1-4 kHz bands, wet chews the 125-500 Hz")
print("bands, chewy chews the 31-125 Hz bands; the scalar features separate")
print("click trains (high kurtosis) from drones (kurtosis near 1.5).")
