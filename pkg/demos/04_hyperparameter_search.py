"""GP-based hyperparameter search versus exhaustive grid search.

A smooth test objective over (log2 C, log2 gamma) stands in for a
cross-validation score.  The Bayesian search with 40 evaluations lands
within a fraction of a log2 unit of the 5,913-point dense grid optimum.
"""

import numpy as np

from chewtex.learn import HpoConfig, bayes_opt, candidate_grid


def objective(C, gamma):
    lc, lg = np.log2(C), np.log2(gamma)
    return float(np.exp(-((lc - 3.0) ** 2) / 18.0 - ((lg + 2.0) ** 2) / 18.0))


cfg = HpoConfig(budget=40, seed=0)
grid = candidate_grid(cfg)
grid_scores = [objective(2.0 ** c, 2.0 ** g) for c, g in grid]
best_grid = grid[int(np.argmax(grid_scores))]
print(f"dense grid: {len(grid)} evaluations, optimum at "
      f"log2C={best_grid[0]:+.2f}, log2gamma={best_grid[1]:+.2f}")

best_c, best_gamma, trace = bayes_opt(objective, cfg, full_output=True)
print(f"GP search:  {len(trace)} evaluations, returned "
      f"log2C={np.log2(best_c):+.2f}, log2gamma={np.log2(best_gamma):+.2f}")

print("\nsearch trajectory (best score so far):")
best_so_far = -np.inf
for step, (c, g, score) in enumerate(trace, 1):
    best_so_far = max(best_so_far, score)
    marker = " <- initial design" if step == cfg.n_init else ""
    if step % 5 == 0 or step == 1:
        print(f"  eval {step:2d}: best {best_so_far:.4f}{marker}")
print(f"\ngrid optimum value {max(grid_scores):.4f}, "
      f"GP-search best {best_so_far:.4f}, "
      f"148x fewer objective evaluations than the grid")
