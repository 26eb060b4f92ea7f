"""Asymptotic lasso predictions under i.i.d. Gaussian designs.

In the wide-design limit (p -> inf with n/p -> delta) the lasso with
penalty lam behaves like coordinatewise soft thresholding in an effective
Gaussian channel.  The channel is described by two scalars (alpha, tau)
solving the state-evolution system

    tau^2 = 1 + (1/delta) E (eta_{alpha tau}(Theta + tau Z) - Theta)^2
    lam   = (1 - P(|Theta + tau Z| > alpha tau) / delta) alpha tau

where eta_t is the soft threshold at level t, Z is standard normal and
Theta is drawn from the coefficient prior.  False discovery proportion
and power at the fixed point are Gaussian tail expressions.

Letting the signal amplitude grow collapses the system to one or two
scalar equations in alpha (and a signal-strength variable gamma); their
solution gives q*(epsilon, delta), the smallest FDR the lasso can attain
at sparsity epsilon = k/p, together with the asymptotic power.  The
geometry splits at a sparsity threshold eps* = weak_threshold(delta):
below it full power is possible, above it power is capped below one.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize
from scipy.special import ndtr

from .errors import DomainError, InvariantError, NonconvergenceError

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_RESIDUAL_TOL = 1e-8


def _phi(x):
    return np.exp(-0.5 * np.asarray(x, dtype=np.float64) ** 2) / _SQRT_2PI


def _F(a):
    # E (Z - a)^2 on {Z > a}; the building block of soft-threshold moments
    a = np.asarray(a, dtype=np.float64)
    return (1.0 + a * a) * ndtr(-a) - a * _phi(a)


def soft_threshold_moments(alpha, gamma):
    """Gaussian moments of the soft threshold, in closed form.

    For Z standard normal returns the pair

        m2   = E eta_alpha(gamma + Z)^2
        miss = E (eta_alpha(gamma + Z) - gamma)^2

    accurate to roundoff (no quadrature).  miss tends to 1 + alpha^2 as
    gamma grows, the price of thresholding a very strong signal.
    """
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    a = alpha - gamma
    b = alpha + gamma
    m2 = _F(a) + _F(b)
    mean = (_phi(a) - a * ndtr(-a)) - (_phi(b) - b * ndtr(-b))
    miss = m2 - 2.0 * gamma * mean + gamma * gamma
    return float(m2), float(miss)


def tail_probability(alpha, gamma):
    """P(|gamma + Z| > alpha) for Z standard normal."""
    return float(ndtr(gamma - alpha) + ndtr(-alpha - gamma))


def alpha_min(delta):
    """Smallest admissible threshold parameter at undersampling ratio delta.

    The positive solution of 2[(1+a^2)Phi(-a) - a phi(a)] = delta when
    delta < 1, and 0 otherwise.  Thresholds at or below it cannot balance
    the state-evolution noise recursion.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    if delta >= 1.0:
        return 0.0

    def f(a):
        return 2.0 * _F(a) - delta

    hi = 1.0
    while f(hi) > 0.0:
        hi *= 2.0
    return float(optimize.brentq(f, 0.0, hi, xtol=1e-12))


@dataclass
class PriorSpec:
    """Two-group coefficient prior.

    kind "point_mass": Theta = amplitude with probability epsilon, else 0.
    kind "gaussian_mixture": Theta ~ N(0, amplitude^2) with probability
    epsilon, else 0.
    """

    kind: str
    epsilon: float
    amplitude: float

    def __post_init__(self):
        if self.kind not in ("point_mass", "gaussian_mixture"):
            raise DomainError("kind must be point_mass or gaussian_mixture")
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError("epsilon must lie in [0, 1]")
        if not self.amplitude > 0.0:
            raise DomainError("amplitude must be positive")

    @property
    def second_moment(self):
        return self.epsilon * self.amplitude ** 2


@dataclass
class AmpFixedPoint:
    alpha: float
    tau: float
    delta: float
    lam: float
    fdp: float
    power: float
    regime: str = "finite"


@dataclass
class HighSnrPrediction:
    epsilon: float
    delta: float
    alpha_star: float
    gamma_star: float | None
    q_star: float
    power: float

    @property
    def regime(self):
        return "full_power" if self.gamma_star is None else "limited_power"


def _mix_miss(prior, alpha, tau):
    # E (eta_alpha(Theta/tau + Z) - Theta/tau)^2 under the prior
    eps = prior.epsilon
    null = 2.0 * float(_F(alpha))
    if eps == 0.0:
        return null
    if prior.kind == "point_mass":
        nonnull = soft_threshold_moments(alpha, prior.amplitude / tau)[1]
    else:
        s = prior.amplitude / tau
        nonnull = 2.0 * integrate.quad(
            lambda u: soft_threshold_moments(alpha, s * u)[1] * float(_phi(u)),
            0.0, 10.0, epsabs=1e-10, limit=200,
        )[0]
    return (1.0 - eps) * null + eps * nonnull


def _nonnull_tail(prior, alpha, tau):
    # P(|Theta + tau Z| > alpha tau | Theta != 0)
    if prior.kind == "point_mass":
        return tail_probability(alpha, prior.amplitude / tau)
    sd = float(np.hypot(prior.amplitude, tau))
    return float(2.0 * ndtr(-alpha * tau / sd))


def _mix_tail(prior, alpha, tau):
    eps = prior.epsilon
    null = 2.0 * float(ndtr(-alpha))
    if eps == 0.0:
        return null
    return (1.0 - eps) * null + eps * _nonnull_tail(prior, alpha, tau)


def _calibrate_alpha(prior, delta, lam, tau):
    # largest alpha with (1 - P(|Theta + tau Z| > alpha tau)/delta) alpha tau = lam;
    # the penalty map can dip negative at small alpha, so walk down from a
    # proven-positive bracket and bisect at the last sign change
    def g(a):
        return (1.0 - _mix_tail(prior, a, tau) / delta) * a * tau - lam

    hi = max(2.0, lam / tau + 2.0)
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise NonconvergenceError(
                "no alpha bracket for calibration: delta=%g lam=%g tau=%g" % (delta, lam, tau)
            )
    upper = hi
    a = hi * 0.95
    while a > 1e-12:
        if g(a) <= 0.0:
            return float(optimize.brentq(g, a, upper, xtol=1e-13))
        upper = a
        a *= 0.95
    raise NonconvergenceError(
        "calibration never changed sign: delta=%g lam=%g tau=%g" % (delta, lam, tau)
    )


def state_evolution(prior, delta, lam, max_iters=2000, tol=1e-12):
    """Solve the state-evolution system for a finite penalty.

    Damped fixed-point iteration on tau^2 (step factor 0.5) with the
    calibration equation re-solved for alpha at each step; gaussian
    mixture priors integrate the miss term by adaptive quadrature.  The
    returned point carries fdp and power computed from the tail formulas,
    and both defining equations are re-checked to 1e-8 before returning.
    """
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    if lam <= 0.0:
        raise DomainError("lam must be positive")
    if prior.second_moment <= 0.0:
        raise DomainError("prior variance must be positive")

    tau2 = 1.0 + prior.second_moment / delta
    for _ in range(max_iters):
        tau = np.sqrt(tau2)
        alpha = _calibrate_alpha(prior, delta, lam, tau)
        target = 1.0 + tau2 * _mix_miss(prior, alpha, tau) / delta
        if abs(target - tau2) <= tol * max(1.0, tau2):
            tau2 = target
            break
        tau2 = 0.5 * tau2 + 0.5 * target
    else:
        raise NonconvergenceError(
            "state evolution stalled: delta=%g lam=%g tau^2=%g" % (delta, lam, tau2)
        )

    tau = float(np.sqrt(tau2))
    alpha = _calibrate_alpha(prior, delta, lam, tau)
    r_se = abs(tau2 - 1.0 - tau2 * _mix_miss(prior, alpha, tau) / delta)
    r_cal = abs(lam - (1.0 - _mix_tail(prior, alpha, tau) / delta) * alpha * tau)
    if max(r_se, r_cal) > _RESIDUAL_TOL:
        raise InvariantError(
            "fixed point residuals %.3g / %.3g exceed %.0e" % (r_se, r_cal, _RESIDUAL_TOL)
        )
    if alpha <= alpha_min(delta):
        raise InvariantError("calibrated alpha %.6g at or below alpha_min" % alpha)

    total = _mix_tail(prior, alpha, tau)
    fdp = (1.0 - prior.epsilon) * 2.0 * float(ndtr(-alpha)) / total
    power = _nonnull_tail(prior, alpha, tau)
    return AmpFixedPoint(
        alpha=float(alpha), tau=tau, delta=float(delta), lam=float(lam),
        fdp=float(fdp), power=float(power), regime="finite",
    )


def _full_power_lhs(eps, delta, a):
    return 2.0 * (1.0 - eps) * _F(a) + eps * (1.0 + np.asarray(a) ** 2) - delta


def _full_power_dip(eps, delta, hi):
    # location and value of the minimum of the full-power equation on [0, hi]
    grid = np.linspace(0.0, hi, 4001)
    vals = _full_power_lhs(eps, delta, grid)
    j = int(np.argmin(vals))
    lo = grid[max(j - 1, 0)]
    up = grid[min(j + 1, grid.size - 1)]
    res = optimize.minimize_scalar(
        lambda a: float(_full_power_lhs(eps, delta, a)),
        bounds=(lo, up), method="bounded", options={"xatol": 1e-12},
    )
    return float(res.x), float(res.fun)


@lru_cache(maxsize=None)
def weak_threshold(delta):
    """Sparsity boundary between the full- and limited-power regimes.

    For delta < 1, the largest epsilon at which the full-power equation
    2(1-eps)[(1+a^2)Phi(-a) - a phi(a)] + eps(1+a^2) = delta still has a
    real root.  The equation's minimum over a is monotone in epsilon, so
    the boundary is found by bisection (to 1e-8) on the sign of that
    minimum.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")

    def dip(eps):
        return _full_power_dip(eps, delta, 30.0)[1]

    lo, hi = 1e-9, 1.0 - 1e-9
    if dip(lo) > 0.0 or dip(hi) < 0.0:
        raise InvariantError("weak threshold bracket failed at delta=%g" % delta)
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if dip(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _largest_full_power_root(eps, delta):
    def h(a):
        return float(_full_power_lhs(eps, delta, a))

    hi = 2.0
    while h(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise NonconvergenceError(
                "full-power equation never positive: eps=%g delta=%g" % (eps, delta)
            )
    a_dip, v_dip = _full_power_dip(eps, delta, hi)
    if v_dip > 0.0:
        # only possible at the regime boundary where the two roots merge
        if v_dip > 1e-6:
            raise NonconvergenceError(
                "full-power equation has no root: eps=%g delta=%g min=%g" % (eps, delta, v_dip)
            )
        return a_dip
    root = float(optimize.brentq(h, a_dip, hi, xtol=1e-13))
    if delta < 1.0:
        # two roots: contrary to a tempting reading, both sit above
        # alpha_min (the equation is strictly positive at alpha_min);
        # the larger one is the admissible threshold
        amin = alpha_min(delta)
        lower = float(optimize.brentq(h, amin, a_dip, xtol=1e-13))
        if not (amin <= lower <= root):
            raise InvariantError("unexpected root ordering in full-power equation")
    return root


def _alpha_from_tail(eps, delta, gamma):
    # unique alpha with 2(1-eps)Phi(-alpha) + eps P(|gamma + Z| > alpha) = delta;
    # the left side falls monotonically from 1 to 0 in alpha
    def f(a):
        return 2.0 * (1.0 - eps) * float(ndtr(-a)) + eps * tail_probability(a, gamma) - delta

    hi = 2.0
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise NonconvergenceError("tail equation never crosses: eps=%g delta=%g" % (eps, delta))
    return float(optimize.brentq(f, 0.0, hi, xtol=1e-13))


def _limited_power_roots(eps, delta):
    # nested bisection: alpha eliminated through the tail equation, then the
    # moment equation solved for gamma
    def G(gamma):
        a = _alpha_from_tail(eps, delta, gamma)
        miss = soft_threshold_moments(a, gamma)[1]
        return 2.0 * (1.0 - eps) * float(_F(a)) + eps * miss - delta

    lo, hi = 1e-8, 1.0
    if G(lo) >= 0.0:
        raise NonconvergenceError("limited-power system degenerate: eps=%g delta=%g" % (eps, delta))
    while G(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise NonconvergenceError("no gamma bracket: eps=%g delta=%g" % (eps, delta))
    gamma = float(optimize.brentq(G, lo, hi, xtol=1e-12))
    alpha = _alpha_from_tail(eps, delta, gamma)
    return alpha, gamma


def high_snr_fdr(epsilon, delta):
    """FDR/power floor of the lasso in the strong-signal limit.

    Full-power regime (delta >= 1, or sparsity epsilon at or below
    weak_threshold(delta)): one scalar equation in alpha; q_star is the
    asymptotic FDP with power 1.  Otherwise a two-equation system in
    (alpha, gamma) gives both q_star and a power strictly below 1.
    Residuals of the solved equations are certified to 1e-8.
    """
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)")
    if delta <= 0.0:
        raise DomainError("delta must be positive")

    if delta >= 1.0 or epsilon <= weak_threshold(delta):
        alpha = _largest_full_power_root(epsilon, delta)
        resid = abs(float(_full_power_lhs(epsilon, delta, alpha)))
        if resid > 1e-6:
            raise InvariantError("full-power residual %.3g" % resid)
        two_tail = 2.0 * float(ndtr(-alpha))
        q = (1.0 - epsilon) * two_tail / (epsilon + (1.0 - epsilon) * two_tail)
        return HighSnrPrediction(
            epsilon=float(epsilon), delta=float(delta), alpha_star=alpha,
            gamma_star=None, q_star=float(q), power=1.0,
        )

    alpha, gamma = _limited_power_roots(epsilon, delta)
    r1 = abs(2.0 * (1.0 - epsilon) * float(_F(alpha))
             + epsilon * soft_threshold_moments(alpha, gamma)[1] - delta)
    r2 = abs(2.0 * (1.0 - epsilon) * float(ndtr(-alpha))
             + epsilon * tail_probability(alpha, gamma) - delta)
    if max(r1, r2) > _RESIDUAL_TOL:
        raise InvariantError("limited-power residuals %.3g / %.3g" % (r1, r2))
    q = 2.0 * (1.0 - epsilon) * float(ndtr(-alpha)) / delta
    power = tail_probability(alpha, gamma)
    return HighSnrPrediction(
        epsilon=float(epsilon), delta=float(delta), alpha_star=float(alpha),
        gamma_star=float(gamma), q_star=float(q), power=float(power),
    )


def high_snr_sweep(epsilons, deltas):
    """Evaluate high_snr_fdr over a grid, deltas outer, epsilons inner."""
    return [high_snr_fdr(e, d) for d in deltas for e in epsilons]


def write_sweep_csv(path, predictions):
    """Serialize predictions as epsilon,delta,regime,alpha,gamma,q_star,power.

    gamma is left empty on full-power rows.
    """
    def f(x):
        return "%.17g" % x

    lines = ["epsilon,delta,regime,alpha,gamma,q_star,power"]
    for pr in predictions:
        gamma = "" if pr.gamma_star is None else f(pr.gamma_star)
        lines.append(",".join([
            f(pr.epsilon), f(pr.delta), pr.regime, f(pr.alpha_star),
            gamma, f(pr.q_star), f(pr.power),
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
