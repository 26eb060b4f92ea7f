"""Scikit-learn style estimator around the sorted-L1 solver."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .lambda_seq import lambda_bh, lambda_bhc_gaussian
from .solver import fista_solve
from .sorted_l1 import validate_lambda


class SlopeRegressor(RegressorMixin, BaseEstimator):
    """Least squares penalized by the sorted-L1 norm.

    Parameters
    ----------
    lam : "bh", "bhc_gaussian", or array-like
        The penalty sequence.  The string forms build the BH-style
        sequence (plain, or Monte-Carlo corrected for non-orthogonal
        Gaussian designs) from the training shape and q; an explicit
        array is validated and used as given.
    q : float
        Target FDR level for the string sequence forms.
    fit_intercept : bool
        When True, X and y are centered before solving and an intercept
        is recovered, mirroring other linear models.
    max_iters, gap_tol, infeas_tol, step : solver controls
        Passed straight to fista_solve; None picks its defaults.

    Attributes after fit: coef_, intercept_, lambda_, n_iter_, dual_gap_,
    infeasibility_, converged_.
    """

    def __init__(self, lam="bh", q=0.1, fit_intercept=False,
                 max_iters=20000, gap_tol=None, infeas_tol=None, step=None):
        self.lam = lam
        self.q = q
        self.fit_intercept = fit_intercept
        self.max_iters = max_iters
        self.gap_tol = gap_tol
        self.infeas_tol = infeas_tol
        self.step = step

    def _sequence(self, n, p):
        if isinstance(self.lam, str):
            if self.lam == "bh":
                return lambda_bh(p, self.q)
            if self.lam == "bhc_gaussian":
                return lambda_bhc_gaussian(n, p, self.q).values
            raise ValueError("lam must be 'bh', 'bhc_gaussian', or an array")
        lam = validate_lambda(self.lam)
        if lam.size != p:
            raise ValueError("lam has %d entries for %d features" % (lam.size, p))
        return lam

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        n, p = X.shape
        lam = self._sequence(n, p)
        if self.fit_intercept:
            x_mean = X.mean(axis=0)
            y_mean = float(y.mean())
            X = X - x_mean
            y = y - y_mean
        res = fista_solve(
            X, y, lam, t=self.step, max_iters=self.max_iters,
            gap_tol=self.gap_tol, infeas_tol=self.infeas_tol,
        )
        self.coef_ = res.solution
        self.lambda_ = lam
        self.n_iter_ = res.iterations
        self.dual_gap_ = res.gap
        self.infeasibility_ = res.infeasibility
        self.converged_ = res.converged
        if self.fit_intercept:
            self.intercept_ = y_mean - float(x_mean @ res.solution)
        else:
            self.intercept_ = 0.0
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_

    def support_(self):
        """Indices kept nonzero, with solver near-zeros declared zero."""
        check_is_fitted(self, "coef_")
        return np.flatnonzero(np.abs(self.coef_) > 1e-10 * self.lambda_[0])
