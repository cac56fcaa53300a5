"""The SMO-trained RBF SVM on two classic toy problems.

XOR demonstrates that the RBF kernel handles non-linearly-separable
layouts; the blob problem shows margins, support vectors, and the KKT
convergence diagnostics that the solver reports.
"""

import numpy as np

from chewtex.learn import svm_predict, svm_train

print("XOR pattern, gamma=1, C=10")
X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
y = np.array([1, 1, -1, -1])
model = svm_train(X, y, C=10.0, gamma=1.0)
labels, decisions = svm_predict(model, X)
for point, truth, label, decision in zip(X, y, labels, decisions):
    print(f"  {point} truth {truth:+d} -> predicted {label:+d} (decision {decision:+.3f})")
print(f"  support vectors: {len(model.dual_coeffs)}, "
      f"iterations: {model.n_iter}, final KKT violation: {model.kkt_violation:.2e}")

print("\nTwo noisy blobs, 200 points")
rng = np.random.default_rng(0)
X = np.vstack([
    rng.standard_normal((100, 2)) + [2.0, 0.0],
    rng.standard_normal((100, 2)) - [2.0, 0.0],
])
y = np.array([1] * 100 + [-1] * 100)
model = svm_train(X, y, C=1.0, gamma=0.5)
labels, decisions = svm_predict(model, X)
accuracy = np.mean(labels == y)
print(f"  training accuracy {accuracy:.3f}, {len(model.dual_coeffs)} support vectors")
print(f"  sum(alpha_i * y_i) = {model.dual_coeffs.sum():+.2e} (equality constraint)")
margin_svs = np.sum(np.abs(np.abs(decisions) - 1.0) < 0.05)
print(f"  {margin_svs} points sit within 5% of the +-1 margin")
