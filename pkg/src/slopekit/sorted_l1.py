"""Sorted-L1 norm, dual feasibility, and the proximal operator.

The sorted-L1 norm of b under a nonincreasing nonnegative weight sequence
lam is

    J(b) = lam[0] * |b|_(0) + lam[1] * |b|_(1) + ... + lam[p-1] * |b|_(p-1)

where |b|_(0) >= |b|_(1) >= ... are the magnitudes of b in decreasing order.
Its proximal operator reduces, after sorting magnitudes, to an isotonic-type
problem that two routes solve here: a reference algorithm that repeatedly
averages increasing runs of y - lam, and a single-pass stack algorithm that
runs in linear time on sorted input.  Both are kept deliberately independent
so they can cross-check each other.
"""

import numpy as np

from .errors import DimensionError, DomainError

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is installed by default
    _HAVE_NUMBA = False


def validate_lambda(lam):
    """Check that lam is a valid weight sequence and return it as float64.

    Requirements: 1-D, finite, nonincreasing, nonnegative, lam[0] > 0.
    Trailing zeros are allowed.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise DimensionError("lam must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(lam)):
        raise DomainError("lam must be finite")
    if np.any(np.diff(lam) > 0):
        raise DomainError("lam must be nonincreasing")
    if lam[-1] < 0:
        raise DomainError("lam must be nonnegative")
    if not lam[0] > 0:
        raise DomainError("lam[0] must be strictly positive")
    return lam


def _validate_vector(y, name="y"):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise DimensionError("%s must be a nonempty 1-D array" % name)
    if not np.all(np.isfinite(y)):
        raise DomainError("%s must be finite" % name)
    return y


def sorted_l1_norm(b, lam):
    """Value of the sorted-L1 norm J(b) under the weight sequence lam."""
    b = _validate_vector(b, "b")
    lam = validate_lambda(lam)
    if b.size != lam.size:
        raise DimensionError("b and lam must have the same length")
    mags = np.sort(np.abs(b))[::-1]
    return float(np.dot(mags, lam))


def dual_infeasibility(v, lam):
    """How far v sits outside the dual unit ball of the sorted-L1 norm.

    The dual ball consists of all v whose decreasing magnitudes satisfy
    every partial-sum constraint  sum_{j<=i} |v|_(j) <= sum_{j<=i} lam[j].
    Returns max(0, largest partial-sum excess); zero means v is feasible.
    """
    v = _validate_vector(v, "v")
    lam = validate_lambda(lam)
    if v.size != lam.size:
        raise DimensionError("v and lam must have the same length")
    mags = np.sort(np.abs(v))[::-1]
    excess = np.cumsum(mags - lam)
    return float(max(0.0, excess.max()))


def _validate_sorted_input(y, lam):
    y = _validate_vector(y)
    lam = validate_lambda(lam)
    if y.size != lam.size:
        raise DimensionError("y and lam must have the same length")
    if y[-1] < 0 or np.any(np.diff(y) > 0):
        raise DomainError("y must be nonincreasing and nonnegative")
    return y, lam


def prox_reference_averaging(y, lam):
    """Reference prox on sorted input, by repeated segment averaging.

    Input contract: y nonincreasing nonnegative, lam a valid weight
    sequence, equal lengths.  While the difference d = y - lam is not
    nonincreasing, each maximal nondecreasing run of d containing at least
    one strict increase is replaced (in both y and lam) by its average;
    the answer is then the positive part of y - lam.

    Runs include tied values: averaging only strictly increasing segments
    can loop forever once ties appear, while averaging over nondecreasing
    runs still leaves the minimizer unchanged (it is constant on any such
    run) and merges at least two blocks per pass, so at most n passes run.
    """
    y, lam = _validate_sorted_input(y, lam)
    y = y.copy()
    lam = lam.copy()
    n = y.size
    while True:
        d = y - lam
        inc = d[1:] > d[:-1]
        if not inc.any():
            break
        # run boundaries: a new run starts at 0 and wherever d strictly drops
        starts = np.flatnonzero(np.concatenate(([True], d[1:] < d[:-1])))
        ends = np.concatenate((starts[1:], [n]))
        for a, b in zip(starts, ends):
            if b - a > 1 and inc[a : b - 1].any():
                y[a:b] = y[a:b].mean()
                lam[a:b] = lam[a:b].mean()
    return np.maximum(y - lam, 0.0)


def _stack_scan(d, out):
    """Single left-to-right scan merging blocks whose clamped averages
    fail to decrease.  d is y - lam; out receives the block solution."""
    n = d.shape[0]
    first = np.empty(n, dtype=np.int64)
    last = np.empty(n, dtype=np.int64)
    sums = np.empty(n, dtype=np.float64)
    avg = np.empty(n, dtype=np.float64)
    t = -1
    for k in range(n):
        t += 1
        first[t] = k
        last[t] = k
        sums[t] = d[k]
        a = d[k]
        avg[t] = a if a > 0.0 else 0.0
        while t > 0 and avg[t - 1] <= avg[t]:
            last[t - 1] = last[t]
            sums[t - 1] += sums[t]
            a = sums[t - 1] / (last[t - 1] - first[t - 1] + 1)
            avg[t - 1] = a if a > 0.0 else 0.0
            t -= 1
    for b in range(t + 1):
        v = avg[b]
        for k in range(first[b], last[b] + 1):
            out[k] = v


if _HAVE_NUMBA:
    _stack_scan = njit(cache=True)(_stack_scan)


def prox_stack(y, lam):
    """Linear-time prox on sorted input via a block stack.

    Maintains a stack of blocks (first, last, s, w) where s is the
    unclamped running sum of y - lam over the block and w the clamped
    block average (s / length, floored at zero).  A new element starts
    its own block; while the previous block's w does not exceed the
    current one, the blocks merge.  Surviving block averages, already
    clamped, are written out.  Same contract as the reference route.
    """
    y, lam = _validate_sorted_input(y, lam)
    out = np.empty_like(y)
    _stack_scan(y - lam, out)
    return out


def prox_sorted_l1(y, lam, method="stack"):
    """Proximal operator of the sorted-L1 norm at an arbitrary point y.

    Parameters
    ----------
    y : array, shape (p,)
        Point at which the prox is evaluated; any signs, any order.
    lam : array, shape (p,)
        Nonincreasing nonnegative weights, lam[0] > 0.
    method : {"stack", "averaging"}
        Which sorted-input routine performs the core computation.

    Returns
    -------
    x : array, shape (p,)
        argmin_x  0.5 * ||y - x||^2 + J(x).

    Magnitudes are sorted in decreasing order with a stable sort (ties keep
    their original relative order), the sorted problem is solved, and the
    result is mapped back through the inverse permutation with the original
    signs (coordinates with y == 0 take sign +1).
    """
    y = _validate_vector(y)
    lam = validate_lambda(lam)
    if y.size != lam.size:
        raise DimensionError("y and lam must have the same length")
    if method not in ("stack", "averaging"):
        raise DomainError("method must be 'stack' or 'averaging'")
    mags = np.abs(y)
    order = np.argsort(-mags, kind="stable")
    solve = prox_stack if method == "stack" else prox_reference_averaging
    x_sorted = solve(mags[order], lam)
    x = np.empty_like(x_sorted)
    x[order] = x_sorted
    return np.where(y < 0, -1.0, 1.0) * x


def kkt_verify(y, lam, x, tol=1e-8):
    """Check the optimality system of the sorted prox problem.

    For the sorted-input problem min 0.5||y - x||^2 + lam'x subject to
    x[0] >= x[1] >= ... >= x[n-1] >= 0, the multipliers mu are recovered
    from stationarity (mu[i] = mu[i-1] + x[i] - y[i] + lam[i], mu[-1] = 0)
    and the remaining conditions are checked:

    * primal feasibility: x nonincreasing and nonnegative,
    * dual feasibility: mu >= 0,
    * complementary slackness: mu[i] * (x[i] - x[i+1]) = 0, with x[n] = 0,
    * stationarity off the active set: wherever the gap x[i] - x[i+1] is
      strictly positive the constraint is inactive, so mu[i] itself must
      vanish (not just the product), which is what pins down candidates
      that merely shifted a free coordinate.

    Returns (ok, max_violation) where max_violation is the largest breach
    across the groups and ok is max_violation <= tol.
    """
    y = _validate_vector(y)
    lam = validate_lambda(lam)
    x = _validate_vector(x, "x")
    if not (y.size == lam.size == x.size):
        raise DimensionError("y, lam and x must have the same length")
    gaps = np.concatenate((x[:-1] - x[1:], [x[-1]]))
    primal = max(0.0, float(np.max(-gaps)))
    mu = np.cumsum(x - y + lam)
    dual = max(0.0, float(np.max(-mu)))
    slack = float(np.max(np.abs(mu * gaps)))
    free = gaps > 0.0
    stationarity = float(np.max(np.abs(mu[free]))) if np.any(free) else 0.0
    violation = max(primal, dual, slack, stationarity)
    return violation <= tol, violation
