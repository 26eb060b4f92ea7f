"""The sklearn-style regressor wrapper."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import GridSearchCV

from slopekit import SlopeRegressor
from slopekit.harness import DesignSpec, make_design
from slopekit.lambda_seq import lambda_bh
from slopekit.solver import fista_solve


def make_problem(seed=0, n=60, p=40, k=5, amp=6.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) / np.sqrt(n)
    beta = np.zeros(p)
    beta[rng.choice(p, size=k, replace=False)] = amp
    y = X @ beta + rng.normal(size=n)
    return X, y, beta


def test_fit_matches_direct_solver_call():
    X, y, _ = make_problem()
    est = SlopeRegressor(q=0.1).fit(X, y)
    direct = fista_solve(X, y, lambda_bh(X.shape[1], 0.1))
    np.testing.assert_array_equal(est.coef_, direct.solution)
    assert est.converged_
    assert est.n_iter_ == direct.iterations
    assert est.dual_gap_ == direct.gap
    assert est.intercept_ == 0.0


def test_explicit_sequence_and_validation():
    X, y, _ = make_problem(n=30, p=20)
    lam = lambda_bh(20, 0.2)
    est = SlopeRegressor(lam=lam).fit(X, y)
    np.testing.assert_array_equal(est.lambda_, lam)
    with pytest.raises(ValueError):
        SlopeRegressor(lam=lam[:5]).fit(X, y)
    with pytest.raises(ValueError):
        SlopeRegressor(lam="bonferroni").fit(X, y)


def test_corrected_sequence_option():
    X, y, _ = make_problem(n=50, p=50)
    est = SlopeRegressor(lam="bhc_gaussian", q=0.1).fit(X, y)
    assert est.lambda_[0] == lambda_bh(50, 0.1)[0]
    assert est.lambda_.shape == (50,)


def test_predict_requires_fit():
    X, y, _ = make_problem(n=20, p=10)
    with pytest.raises(NotFittedError):
        SlopeRegressor().predict(X)
    est = SlopeRegressor().fit(X, y)
    np.testing.assert_allclose(est.predict(X), X @ est.coef_)


def test_intercept_centering():
    X, y, _ = make_problem(n=80, p=10, k=2)
    y = y + 7.5
    est = SlopeRegressor(fit_intercept=True, q=0.2).fit(X, y)
    assert est.intercept_ != 0.0
    # residuals of the centered fit have zero mean
    assert abs(np.mean(y - est.predict(X))) < 1e-8
    plain = SlopeRegressor(fit_intercept=False, q=0.2).fit(X, y)
    assert plain.intercept_ == 0.0


def test_support_identifies_strong_signals():
    X = make_design(DesignSpec("orthogonal", 50, 30, seed=4))
    beta = np.zeros(30)
    beta[[3, 17]] = 10.0
    rng = np.random.default_rng(4)
    y = X @ beta + rng.normal(size=50) * 0.1
    est = SlopeRegressor(q=0.1).fit(X, y)
    np.testing.assert_array_equal(est.support_(), [3, 17])


def test_get_set_params_and_clone():
    est = SlopeRegressor(q=0.25, max_iters=500)
    params = est.get_params()
    assert params["q"] == 0.25 and params["max_iters"] == 500
    est.set_params(q=0.3)
    assert est.q == 0.3
    dup = clone(est)
    assert dup.get_params() == est.get_params()


def test_grid_search_smoke():
    X, y, _ = make_problem(n=60, p=15, k=3)
    gs = GridSearchCV(SlopeRegressor(), {"q": [0.05, 0.2]}, cv=3)
    gs.fit(X, y)
    assert gs.best_params_["q"] in (0.05, 0.2)
    assert np.isfinite(gs.best_score_)


def test_solver_controls_are_passed_through():
    X, y, _ = make_problem()
    est = SlopeRegressor(max_iters=1, gap_tol=0.0, infeas_tol=0.0).fit(X, y)
    assert not est.converged_
    assert est.n_iter_ == 1
