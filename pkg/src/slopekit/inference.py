"""Multiple-testing procedures, support debiasing, and error metrics.

Under an orthogonal design the transformed data z = X'y are independent
N(beta_i, 1) coordinates; the procedures here reject coordinates by
comparing sorted magnitudes |z|_(1) >= |z|_(2) >= ... against the
Benjamini-Hochberg-style critical values lambda_BH(i) = Phi^{-1}(1 - iq/2p):

* step_up rejects the largest i with |z|_(i) above its critical value,
* step_down stops at the first magnitude that fails,
* slope_test rejects the coordinates kept nonzero by the sorted-L1 prox.

The step counts bracket each other (i_SD <= i_star <= i_SU), which the
tests exercise on random draws.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, SingularityError
from .lambda_seq import lambda_bh
from .sorted_l1 import prox_sorted_l1, validate_lambda


@dataclass
class RejectionSet:
    rejected: np.ndarray  # indices into z, sorted ascending
    count: int
    threshold_index: int  # the cut i_SU / i_SD / i_star in the sorted frame


@dataclass
class ExperimentMetrics:
    V: int
    R: int
    FDP: float
    TPP: float
    MSE: float

    @property
    def power(self):
        return self.TPP


def _check_z(z, p, q):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size != p:
        raise DimensionError("z must be 1-D of length p")
    if not np.all(np.isfinite(z)):
        raise DomainError("z must be finite")
    if not (0.0 < q < 1.0):
        raise DomainError("q must lie in (0, 1)")
    return z


def _top_k(z, k):
    # indices of the k largest magnitudes; stable in the original order on ties
    order = np.argsort(-np.abs(z), kind="stable")
    return np.sort(order[:k])


def step_up(z, p, q):
    """BHq-style step-up rule on z-scores.

    Rejects the i largest magnitudes for the largest i with
    |z|_(i) > Phi^{-1}(1 - iq/2p); no such i means no rejections.
    """
    z = _check_z(z, p, q)
    mags = np.sort(np.abs(z))[::-1]
    above = np.flatnonzero(mags > lambda_bh(p, q))
    i_su = int(above[-1]) + 1 if above.size else 0
    return RejectionSet(_top_k(z, i_su), i_su, i_su)


def step_down(z, p, q):
    """Step-down companion of step_up.

    Scans sorted magnitudes from the top; i_SD is one less than the first
    i with |z|_(i) <= lambda_BH(i).  If every comparison passes, all p
    hypotheses are rejected.
    """
    z = _check_z(z, p, q)
    mags = np.sort(np.abs(z))[::-1]
    below = np.flatnonzero(mags <= lambda_bh(p, q))
    i_sd = int(below[0]) if below.size else p
    return RejectionSet(_top_k(z, i_sd), i_sd, i_sd)


def slope_test(z, lam, zero_tol=0.0):
    """Rejection set of the sorted-L1 prox: coordinates kept nonzero.

    For exact prox output the default exact-zero comparison applies; when
    z comes from an iterative solver pass zero_tol (the harness uses
    1e-10 * lam[0]) to absorb numerically-near-zero coordinates.
    """
    lam = validate_lambda(lam)
    z = _check_z(z, lam.size, 0.5)
    if zero_tol == 0.0:
        b = prox_sorted_l1(z, lam)
        rejected = np.flatnonzero(b != 0.0)
    else:
        rejected = np.flatnonzero(np.abs(z) > zero_tol)
    return RejectionSet(rejected, rejected.size, rejected.size)


def support_nonzeros(b, lam):
    """Support of a solver output, with near-zeros declared zero."""
    lam = validate_lambda(lam)
    return np.flatnonzero(np.abs(np.asarray(b)) > 1e-10 * lam[0])


def fdr_threshold_estimate(y, p, q):
    """Hard thresholding at the step-up cut.

    With i_SU rejections, the threshold is t = Phi^{-1}(1 - q_{i_SU}),
    i.e. lambda_BH(i_SU), and the estimate keeps y_i wherever |y_i| >= t
    (unshrunk).  With zero rejections the i=1 threshold is used, which
    zeroes everything.
    """
    y = _check_z(y, p, q)
    lam = lambda_bh(p, q)
    i_su = step_up(y, p, q).count
    t = lam[i_su - 1] if i_su >= 1 else lam[0]
    return np.where(np.abs(y) >= t, y, 0.0)


def debias(X, y, support):
    """Least-squares refit on a support; zeros elsewhere.

    Removes the shrinkage bias of penalized estimates by re-estimating the
    selected coefficients without a penalty.  The restricted design must
    have full column rank.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise DimensionError("X must be n x p and y length n")
    support = np.asarray(support, dtype=int)
    out = np.zeros(X.shape[1])
    if support.size == 0:
        return out
    if support.size > X.shape[0]:
        raise SingularityError("support larger than the sample size")
    G = X[:, support]
    coef, _, rank, _ = np.linalg.lstsq(G, y, rcond=None)
    if rank < support.size:
        raise SingularityError("restricted design is rank deficient")
    out[support] = coef
    return out


def metrics(estimate, truth):
    """Selection and estimation error summary of an estimate vs the truth.

    V and R count false and total (nonzero) selections, FDP = V/max(R,1),
    TPP = true positives / max(k,1) with k the true support size, and MSE
    is the mean squared coefficient error.
    """
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape or estimate.ndim != 1:
        raise DimensionError("estimate and truth must be 1-D of equal length")
    sel = estimate != 0.0
    true_nz = truth != 0.0
    R = int(sel.sum())
    V = int((sel & ~true_nz).sum())
    k = int(true_nz.sum())
    tp = R - V
    return ExperimentMetrics(
        V=V,
        R=R,
        FDP=V / max(R, 1),
        TPP=tp / max(k, 1),
        MSE=float(np.mean((estimate - truth) ** 2)),
    )
