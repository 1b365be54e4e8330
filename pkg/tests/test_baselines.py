import numpy as np
import pytest

from rackml.baselines import (
    fit_bayesian_ridge,
    fit_elastic_net,
    fit_knn,
    fit_lasso,
    fit_ols,
    fit_pls,
    fit_ridge,
    predict_knn,
)
from rackml.exceptions import ComponentOverflow


def lasso_objective(X, y, beta, intercept, alpha):
    n = len(y)
    r = y - intercept - X @ beta
    return (r @ r) / (2 * n) + alpha * np.abs(beta).sum()


def enet_objective(X, y, beta, intercept, alpha, l1_ratio):
    n = len(y)
    r = y - intercept - X @ beta
    return ((r @ r) / (2 * n) + alpha * l1_ratio * np.abs(beta).sum()
            + 0.5 * alpha * (1 - l1_ratio) * (beta @ beta))


class TestOls:
    def test_exact_line(self):
        m = fit_ols(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]))
        assert m.coefficients[0] == pytest.approx(1.0, abs=1e-12)
        assert m.intercept == pytest.approx(0.0, abs=1e-12)

    def test_duplicate_column_dropped(self, rng):
        X = rng.normal(size=(30, 2))
        X = np.column_stack([X, X[:, 0]])
        y = X[:, 0] * 2 + X[:, 1] - 1
        m = fit_ols(X, y)
        assert m.diagnostics["rank"] == 2
        assert (m.coefficients == 0).sum() >= 1
        assert np.allclose(m.predict(X), y, atol=1e-9)

    def test_constant_target(self, rng):
        X = rng.normal(size=(10, 3))
        m = fit_ols(X, np.full(10, 3.0))
        assert np.allclose(m.coefficients, 0.0, atol=1e-12)
        assert m.intercept == pytest.approx(3.0)

    def test_normal_equations_residual(self, rng):
        X = rng.normal(size=(80, 5))
        y = rng.normal(size=80)
        m = fit_ols(X, y)
        Xc = X - X.mean(0)
        yc = y - y.mean()
        grad = Xc.T @ (Xc @ m.coefficients - yc)
        assert np.abs(grad).max() < 1e-8


class TestRidge:
    def test_alpha_zero_equals_ols(self, rng):
        X = rng.normal(size=(40, 4))
        y = rng.normal(size=40)
        assert np.allclose(fit_ridge(X, y, 0.0).coefficients,
                           fit_ols(X, y).coefficients, atol=1e-10)

    def test_closed_form_single_feature(self):
        m = fit_ridge(np.array([[1.0], [2.0], [3.0]]), np.array([1.0, 2.0, 3.0]), alpha=1.0)
        assert m.coefficients[0] == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert m.intercept == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_huge_alpha_shrinks_to_mean(self, rng):
        X = rng.normal(size=(30, 3))
        y = rng.normal(size=30) + 5
        m = fit_ridge(X, y, alpha=1e12)
        assert np.abs(m.coefficients).max() < 1e-6
        assert m.intercept == pytest.approx(y.mean(), abs=1e-4)

    def test_gradient_condition(self, rng):
        X = rng.normal(size=(60, 6))
        y = rng.normal(size=60)
        for alpha in (0.1, 1.0, 50.0):
            m = fit_ridge(X, y, alpha)
            Xc = X - X.mean(0)
            yc = y - y.mean()
            grad = Xc.T @ Xc @ m.coefficients + alpha * m.coefficients - Xc.T @ yc
            assert np.abs(grad).max() < 1e-8


class TestLasso:
    X1 = np.array([[-1.0], [0.0], [1.0]])
    y1 = np.array([-2.0, 0.0, 2.0])

    def test_soft_threshold_boundary(self):
        m = fit_lasso(self.X1, self.y1, alpha=4.0 / 3.0)
        assert m.coefficients[0] == 0.0

    def test_hand_value(self):
        m = fit_lasso(self.X1, self.y1, alpha=1.0)
        assert m.coefficients[0] == pytest.approx(0.5, abs=1e-12)

    def test_full_shrinkage_alpha(self, rng):
        X = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        Xc = X - X.mean(0)
        boundary = np.abs(Xc.T @ (y - y.mean())).max() / 40
        m = fit_lasso(X, y, alpha=boundary * 1.0000001, tol=1e-12, max_iter=20000)
        assert np.allclose(m.coefficients, 0.0)
        assert m.intercept == pytest.approx(y.mean())
        m2 = fit_lasso(X, y, alpha=boundary * 0.99, tol=1e-12, max_iter=20000)
        assert np.abs(m2.coefficients).max() > 0

    def test_kkt_conditions(self, rng):
        X = rng.normal(size=(50, 6))
        y = X @ np.array([1.0, -2.0, 0.0, 0.0, 0.5, 0.0]) + 0.1 * rng.normal(size=50)
        alpha = 0.05
        m = fit_lasso(X, y, alpha=alpha, tol=1e-12, max_iter=20000)
        r = y - m.intercept - X @ m.coefficients
        for j in range(6):
            g = float(X[:, j] @ r) / 50
            if m.coefficients[j] == 0.0:
                assert abs(g) <= alpha + 1e-6
            else:
                assert g == pytest.approx(alpha * np.sign(m.coefficients[j]), abs=1e-6)

    def test_random_selection_deterministic(self, rng):
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        a = fit_lasso(X, y, alpha=0.01, selection="random", seed=3)
        b = fit_lasso(X, y, alpha=0.01, selection="random", seed=3)
        assert np.array_equal(a.coefficients, b.coefficients)


class TestElasticNet:
    def test_l1_ratio_one_equals_lasso(self, rng):
        X = rng.normal(size=(40, 5))
        y = rng.normal(size=40)
        enet = fit_elastic_net(X, y, alpha=0.1, l1_ratio=1.0, tol=1e-12, max_iter=20000)
        lasso = fit_lasso(X, y, alpha=0.1, tol=1e-12, max_iter=20000)
        assert np.abs(enet.coefficients - lasso.coefficients).max() < 1e-10

    def test_l1_ratio_zero_equals_ridge(self, rng):
        n = 40
        X = rng.normal(size=(n, 5))
        y = rng.normal(size=n)
        alpha = 0.2
        enet = fit_elastic_net(X, y, alpha=alpha, l1_ratio=0.0, tol=1e-12, max_iter=50000)
        ridge = fit_ridge(X, y, alpha=n * alpha)
        assert np.abs(enet.coefficients - ridge.coefficients).max() < 1e-8

    def test_alpha_zero_equals_ols(self, rng):
        X = rng.normal(size=(30, 3))
        y = rng.normal(size=30)
        enet = fit_elastic_net(X, y, alpha=0.0, l1_ratio=0.5, tol=1e-12, max_iter=50000)
        assert np.abs(enet.coefficients - fit_ols(X, y).coefficients).max() < 1e-8

    def test_local_optimality_probe(self, rng):
        X = rng.normal(size=(50, 4))
        y = rng.normal(size=50)
        alpha, l1r = 0.1, 0.4
        m = fit_elastic_net(X, y, alpha=alpha, l1_ratio=l1r, tol=1e-12, max_iter=20000)
        obj = enet_objective(X, y, m.coefficients, m.intercept, alpha, l1r)
        for _ in range(100):
            delta = rng.normal(size=4)
            delta *= 1e-4 / np.linalg.norm(delta)
            assert obj <= enet_objective(X, y, m.coefficients + delta, m.intercept,
                                         alpha, l1r) + 1e-12


class TestBayesianRidge:
    def test_single_iteration_closed_form(self):
        X = np.array([[-1.0], [0.0], [1.0]])
        y = np.array([-2.0, 0.0, 2.0])
        m = fit_bayesian_ridge(X, y, max_iter=1)
        # Sigma = 1/(alpha*Sxx + lambda) = 1/3 with both precisions at 1
        assert m.coefficients[0] == pytest.approx(4.0 / 3.0, abs=1e-12)

    def test_strong_weight_prior_shrinks(self, rng):
        X = rng.normal(size=(40, 3))
        y = X @ np.array([2.0, -1.0, 0.5]) + 0.1 * rng.normal(size=40)
        default = fit_bayesian_ridge(X, y)
        shrunk = fit_bayesian_ridge(X, y, lambda_1=1e6)
        assert np.abs(shrunk.coefficients).sum() < np.abs(default.coefficients).sum()

    def test_noiseless_linear_matches_ols(self, rng):
        X = rng.normal(size=(50, 4))
        y = X @ np.array([1.0, 2.0, -3.0, 0.5]) + 4.0
        bayes = fit_bayesian_ridge(X, y, max_iter=500)
        ols = fit_ols(X, y)
        assert np.abs(bayes.predict(X) - ols.predict(X)).max() < 1e-3

    def test_posterior_covariance_spd(self, rng):
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        m = fit_bayesian_ridge(X, y)
        np.linalg.cholesky(m.posterior_covariance)  # raises if not SPD
        assert m.alpha_ > 0 and m.lambda_ > 0


class TestPls:
    def test_single_predictor_matches_line(self, rng):
        X = rng.normal(size=(25, 1))
        y = 3.0 * X[:, 0] + 1.0 + 0.01 * rng.normal(size=25)
        pls = fit_pls(X, y, n_components=1)
        ols = fit_ols(X, y)
        assert np.abs(pls.predict(X) - ols.predict(X)).max() < 1e-10

    def test_full_components_equal_ols(self, rng):
        X = rng.normal(size=(40, 5))
        y = rng.normal(size=40)
        pls = fit_pls(X, y, n_components=5)
        ols = fit_ols(X, y)
        assert np.abs(pls.predict(X) - ols.predict(X)).max() < 1e-8

    def test_orthogonal_scores(self, rng):
        X = rng.normal(size=(50, 6))
        y = rng.normal(size=50)
        m = fit_pls(X, y, n_components=4)
        G = m.scores.T @ m.scores
        off = G - np.diag(np.diag(G))
        assert np.abs(off).max() < 1e-8

    def test_orthogonal_target_degenerates(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]])
        y = np.array([1.0, -1.0, -1.0, 1.0])
        # make X'y = 0 exactly: y orthogonal to both centered columns
        Xc = X - X.mean(0)
        assert np.allclose(Xc.T @ (y - y.mean()), 0.0)
        m = fit_pls(X, y, n_components=2)
        assert m.degenerate and m.n_components == 0
        assert np.allclose(m.predict(X), y.mean())

    def test_component_overflow(self, rng):
        X = rng.normal(size=(10, 3))
        with pytest.raises(ComponentOverflow):
            fit_pls(X, rng.normal(size=10), n_components=4)


class TestKnn:
    train_X = np.array([[0.0], [10.0]])
    train_y = np.array([0.0, 10.0])

    def test_nearest_one(self):
        m = fit_knn(self.train_X, self.train_y, n_neighbors=1)
        assert m.predict(np.array([[1.0]]))[0] == 0.0

    def test_uniform_mean(self):
        m = fit_knn(self.train_X, self.train_y, n_neighbors=2)
        assert m.predict(np.array([[1.0]]))[0] == 5.0

    def test_inverse_distance(self):
        m = fit_knn(self.train_X, self.train_y, n_neighbors=2, weights="distance")
        assert m.predict(np.array([[1.0]]))[0] == pytest.approx(1.0, abs=1e-12)

    def test_exact_match_short_circuit(self):
        X = np.array([[0.0], [0.0], [5.0]])
        y = np.array([2.0, 4.0, 100.0])
        m = fit_knn(X, y, n_neighbors=3, weights="distance")
        assert m.predict(np.array([[0.0]]))[0] == 3.0  # mean of exact matches only

    def test_k_equals_n_gives_global_mean(self, rng):
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        m = fit_knn(X, y, n_neighbors=20)
        pred = m.predict(rng.normal(size=(5, 3)))
        assert np.allclose(pred, y.mean(), atol=1e-12)

    def test_tie_breaks_on_lower_index(self):
        X = np.array([[1.0], [1.0], [3.0]])
        y = np.array([10.0, 20.0, 30.0])
        m = fit_knn(X, y, n_neighbors=1)
        assert m.predict(np.array([[1.0]]))[0] == 10.0

    def test_algorithm_flag_warns(self):
        with pytest.warns(UserWarning):
            fit_knn(self.train_X, self.train_y, n_neighbors=1, algorithm="kd_tree")
