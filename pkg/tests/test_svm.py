import numpy as np
import pytest

from chewtex.errors import ConfigError, DegenerateLabelsError, ShapeError
from chewtex.learn import (
    balanced_class_weights,
    dual_objective,
    rbf_kernel_matrix,
    svm_predict,
    svm_train,
)


def qp_oracle(X, y, C, gamma, class_weights):
    """Reference dual solution via cvxopt's interior-point QP solver."""
    import cvxopt

    cvxopt.solvers.options["show_progress"] = False
    n = len(y)
    K = rbf_kernel_matrix(X, gamma=gamma)
    Q = np.outer(y, y) * K + 1e-10 * np.eye(n)
    box = C * np.where(np.asarray(y) > 0, class_weights[1], class_weights[-1])
    sol = cvxopt.solvers.qp(
        cvxopt.matrix(Q),
        cvxopt.matrix(-np.ones(n)),
        cvxopt.matrix(np.vstack([-np.eye(n), np.eye(n)])),
        cvxopt.matrix(np.concatenate([np.zeros(n), box])),
        cvxopt.matrix(np.asarray(y, dtype=np.float64).reshape(1, -1)),
        cvxopt.matrix(np.zeros(1)),
    )
    alpha = np.asarray(sol["x"]).ravel()
    return dual_objective(K, y, alpha)


def max_kkt_violation(model, X, y, C, class_weights, slack=1e-6):
    """Largest per-point KKT residual, computed from the decision function."""
    decisions = model.decision_function(X)
    margins = np.asarray(y) * decisions
    # recover each point's multiplier from the stored support vectors
    alpha = np.zeros(len(y))
    for sv, coef in zip(model.support_vectors, model.dual_coeffs):
        idx = int(np.argmin(np.sum((X - sv) ** 2, axis=1)))
        alpha[idx] = abs(coef)
    box = C * np.where(np.asarray(y) > 0, class_weights[1], class_weights[-1])
    worst = 0.0
    for a, m, b in zip(alpha, margins, box):
        if a <= slack:
            worst = max(worst, 1.0 - m)  # should satisfy margin >= 1
        elif a >= b - slack * max(1.0, b):
            worst = max(worst, m - 1.0)  # should satisfy margin <= 1
        else:
            worst = max(worst, abs(m - 1.0))
    return worst


class TestSeparable:
    X = np.array([[0.0, 0.0], [0.0, 1.0], [3.0, 0.0], [3.0, 1.0]])
    y = np.array([-1, -1, 1, 1])

    def test_zero_training_errors_and_unit_margins(self):
        model = svm_train(self.X, self.y, C=1000.0, gamma=0.5)
        labels, decisions = svm_predict(model, self.X)
        assert np.array_equal(labels, self.y)
        margin = np.abs(decisions)
        sv_margin = margin[margin < 1.5]  # margin SVs sit at |decision| = 1
        assert np.all(np.abs(sv_margin - 1.0) < 1e-2)

    def test_decision_far_away_tends_to_bias(self):
        model = svm_train(self.X, self.y, C=10.0, gamma=1.0)
        far = np.array([[1000.0, 1000.0]])
        assert model.decision_function(far)[0] == pytest.approx(model.bias, abs=1e-9)


def test_xor_pattern_solved_by_rbf():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([1, 1, -1, -1])
    model = svm_train(X, y, C=10.0, gamma=1.0)
    labels, _ = svm_predict(model, X)
    assert np.array_equal(labels, y)


def test_duplicated_points_leave_decision_function_unchanged():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 3))
    y = np.where(X[:, 0] + 0.3 * rng.standard_normal(20) > 0, 1, -1)
    if len(np.unique(y)) < 2:
        y[0] = -y[0]
    weights = {1: 1.0, -1: 1.0}
    m1 = svm_train(X, y, C=5.0, gamma=0.7, class_weights=weights, tol=1e-5)
    m2 = svm_train(
        np.vstack([X, X]), np.concatenate([y, y]), C=2.5, gamma=0.7,
        class_weights=weights, tol=1e-5,
    )
    probes = rng.standard_normal((100, 3))
    assert np.allclose(m1.decision_function(probes), m2.decision_function(probes), atol=1e-3)


def test_training_errors():
    X = np.ones((4, 2))
    with pytest.raises(DegenerateLabelsError):
        svm_train(X, np.ones(4), C=1.0, gamma=1.0)
    with pytest.raises(ConfigError):
        svm_train(X, np.array([1, 1, -1, -1]), C=-1.0, gamma=1.0)
    with pytest.raises(ConfigError):
        svm_train(X, np.array([1, 1, 0, -1]), C=1.0, gamma=1.0)
    model = svm_train(
        np.array([[0.0], [1.0]]), np.array([1, -1]), C=1.0, gamma=1.0
    )
    with pytest.raises(ShapeError):
        model.decision_function(np.ones((3, 2)))


def test_balanced_weights_formula():
    y = np.array([1, 1, 1, -1, -1, -1, -1, -1, -1])
    w = balanced_class_weights(y)
    assert w[1] == pytest.approx(9 / 6)
    assert w[-1] == pytest.approx(9 / 12)


def _random_instance(rng):
    n = int(rng.integers(4, 9))
    X = rng.standard_normal((n, int(rng.integers(1, 4))))
    y = np.ones(n)
    y[: int(rng.integers(1, n - 1))] = -1
    rng.shuffle(y)
    if len(np.unique(y)) < 2:  # force both classes
        y[0] = -y[0]
    C = float(2.0 ** rng.uniform(-2, 5))
    gamma = float(2.0 ** rng.uniform(-4, 2))
    return X, y, C, gamma


class TestDualOptimality:
    def test_objective_matches_qp_oracle_on_random_small_instances(self):
        rng = np.random.default_rng(123)
        for _ in range(25):
            X, y, C, gamma = _random_instance(rng)
            weights = balanced_class_weights(y)
            model = svm_train(X, y, C=C, gamma=gamma, tol=1e-6)
            K = rbf_kernel_matrix(X, gamma=gamma)
            alpha = np.zeros(len(y))
            for sv, coef in zip(model.support_vectors, model.dual_coeffs):
                idx = int(np.argmin(np.sum((X - sv) ** 2, axis=1)))
                alpha[idx] = abs(coef)
            mine = dual_objective(K, y, alpha)
            reference = qp_oracle(X, y, C, gamma, weights)
            assert mine == pytest.approx(reference, abs=1e-3)

    def test_dual_feasibility_and_kkt(self):
        rng = np.random.default_rng(321)
        for _ in range(25):
            X, y, C, gamma = _random_instance(rng)
            weights = balanced_class_weights(y)
            model = svm_train(X, y, C=C, gamma=gamma, tol=1e-6)
            # sum(alpha_i y_i) = 0
            assert abs(model.dual_coeffs.sum()) < 1e-8
            assert max_kkt_violation(model, X, y, C, weights) < 1e-3

    def test_box_constraints_respected(self):
        rng = np.random.default_rng(7)
        X, y, C, gamma = _random_instance(rng)
        weights = balanced_class_weights(y)
        model = svm_train(X, y, C=C, gamma=gamma)
        box = {1: C * weights[1], -1: C * weights[-1]}
        for coef in model.dual_coeffs:
            label = 1 if coef > 0 else -1
            assert 0.0 < abs(coef) <= box[label] + 1e-9


def test_sign_zero_maps_to_positive():
    model = svm_train(
        np.array([[0.0], [2.0]]), np.array([-1, 1]), C=10.0, gamma=1.0
    )
    labels, decisions = svm_predict(model, np.array([[1.0]]))
    assert labels[0] in (-1, 1)
    assert (decisions[0] >= 0) == (labels[0] == 1)
