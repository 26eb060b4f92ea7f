"""Regularization sequences calibrated to false-discovery-rate control.

The baseline sequence mirrors the Benjamini-Hochberg critical values,

    lambda_BH(i) = Phi^{-1}(1 - i q / (2 p)),        i = 1..p,

which controls FDR at level q under orthogonal designs.  Under general
designs, noise in the unselected coordinates inflates the effective noise
level as variables enter the model; the corrected sequences here grow each
lambda_BH(i) by the expected inflation factor, either with the closed-form
Gaussian-design correction or with Monte-Carlo estimated per-design weights.
Corrected sequences stop being monotone eventually; they are truncated at
their first global minimizer k_star and held constant afterwards.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import (ConfigurationError, DimensionError, DomainError, ParseError,
                     SingularityError)

# Rational approximation (central region + tails) for the standard normal
# quantile, refined below by Newton steps against an erfc-based Phi.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _poly(coeffs, x):
    out = np.full_like(x, coeffs[0])
    for c in coeffs[1:]:
        out = out * x + c
    return out


def normal_quantile(u):
    """Standard normal quantile Phi^{-1}(u) for u in (0, 1).

    A rational initial approximation (separate central and tail branches)
    is polished by two Newton corrections against the erfc-based normal
    CDF, leaving |Phi(result) - u| well below 1e-9.  Accepts scalars or
    arrays; scalar input returns a float.
    """
    u_arr = np.asarray(u, dtype=np.float64)
    if u_arr.size == 0:
        raise DimensionError("u must be nonempty")
    if np.any(~np.isfinite(u_arr)) or np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise DomainError("u must lie strictly inside (0, 1)")
    x = np.atleast_1d(u_arr).astype(np.float64).copy()
    lo = x < _P_LOW
    hi = x > 1.0 - _P_LOW
    mid = ~(lo | hi)
    out = np.empty_like(x)
    if mid.any():
        q = x[mid] - 0.5
        r = q * q
        out[mid] = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)
    if lo.any():
        ql = np.sqrt(-2.0 * np.log(x[lo]))
        out[lo] = _poly(_C, ql) / (_poly(_D, ql) * ql + 1.0)
    if hi.any():
        qh = np.sqrt(-2.0 * np.log1p(-x[hi]))
        out[hi] = -_poly(_C, qh) / (_poly(_D, qh) * qh + 1.0)
    # Newton polish; skipped in the far tails where 1/phi overflows and the
    # rational branch is already beyond the absolute accuracy target
    for _ in range(2):
        safe = np.abs(out) < 37.0
        err = ndtr(out) - x
        out[safe] -= (err * np.sqrt(2.0 * np.pi) * np.exp(0.5 * out * out))[safe]
    if u_arr.ndim == 0:
        return float(out[0])
    return out.reshape(u_arr.shape)


def lambda_bh(p, q):
    """Benjamini-Hochberg-style sequence Phi^{-1}(1 - i q / (2p)), i = 1..p."""
    if not (isinstance(p, (int, np.integer)) and p >= 1):
        raise DomainError("p must be a positive integer")
    if not (0.0 < q < 1.0):
        raise DomainError("q must lie in (0, 1)")
    i = np.arange(1, p + 1, dtype=np.float64)
    return normal_quantile(1.0 - i * q / (2.0 * p))


@dataclass
class CorrectedSequence:
    """A corrected sequence truncated at its first global minimizer."""

    values: np.ndarray
    k_star: int
    params: dict = field(default_factory=dict)

    def to_csv(self, path_or_buf):
        _write_rows(path_or_buf, ("i", "lambda"),
                    ((i + 1, _f17(v)) for i, v in enumerate(self.values)))

    @classmethod
    def from_csv(cls, path_or_buf):
        rows = _read_rows(path_or_buf, ("i", "lambda"))
        vals = np.array([float(v) for _, v in rows])
        idx = np.array([int(i) for i, _ in rows])
        if not np.array_equal(idx, np.arange(1, len(vals) + 1)):
            raise ParseError("sequence index column must run 1..p")
        # the capped sequence attains its minimum first at k_star
        return cls(values=vals, k_star=int(np.argmin(vals)) + 1, params={})


def _truncate_at_min(uncapped, p, error_msg):
    k_star = int(np.argmin(uncapped)) + 1
    m = uncapped.size
    if m < p and k_star == m:
        raise ConfigurationError(error_msg)
    capped = np.empty(p)
    capped[:k_star] = uncapped[:k_star]
    capped[k_star:] = uncapped[k_star - 1]
    return capped, k_star


def lambda_bhc_gaussian(n, p, q, variant="sum_bh"):
    """Gaussian-design corrected sequence, truncated at its minimum.

    The uncapped values are

        lambda_i = lambda_BH(i) * sqrt(1 + S_i / (n - i + 1)),

    where S_i sums the squares of the first i-1 baseline values
    (variant "sum_bh", the default) or of the first i-1 *corrected* values
    (variant "recursive").  lambda_1 is the baseline value.  The sequence
    decreases to a minimum at index k_star and grows afterwards; returned
    values are held at lambda_{k_star} beyond it.  If n is too small for a
    minimum to appear before the computable range ends, the configuration
    is rejected.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise DomainError("n must be an integer >= 2")
    if variant not in ("sum_bh", "recursive"):
        raise DomainError("variant must be 'sum_bh' or 'recursive'")
    base = lambda_bh(p, q)
    m = min(p, int(n))
    unc = np.empty(m)
    unc[0] = base[0]
    csum = 0.0
    for i in range(2, m + 1):
        prev = base[i - 2] if variant == "sum_bh" else unc[i - 2]
        csum += prev * prev
        unc[i - 1] = base[i - 1] * np.sqrt(1.0 + csum / (n - i + 1))
    capped, k_star = _truncate_at_min(
        unc, p, "n too small: corrected sequence still decreasing at i = %d < p" % m)
    return CorrectedSequence(capped, k_star,
                             {"kind": "bhc_gaussian", "n": int(n), "p": int(p),
                              "q": float(q), "variant": variant})


def lambda_bhc_weighted(table, p, q):
    """Corrected sequence from a Monte-Carlo weight table.

    Uses lambda_i = lambda_BH(i) * sqrt(1 + w(i-1) * S_i) with w linearly
    interpolated from the table and S_i the sum of squared baseline values
    before i.  The table must start at k = 1 and reach far enough past the
    minimum for k_star to be identified; otherwise the configuration is
    rejected.
    """
    base = lambda_bh(p, q)
    ks = table.ks
    if ks[0] > 1:
        raise ConfigurationError("weight table must cover k = 1")
    m = min(p, int(ks[-1]) + 1)
    unc = np.empty(m)
    unc[0] = base[0]
    csum = 0.0
    for i in range(2, m + 1):
        csum += base[i - 2] ** 2
        unc[i - 1] = base[i - 1] * np.sqrt(1.0 + table.interpolate(i - 1) * csum)
    capped, k_star = _truncate_at_min(
        unc, p, "weight table range insufficient: no minimum before k = %d" % m)
    return CorrectedSequence(capped, k_star,
                             {"kind": "bhc_weighted", "p": int(p), "q": float(q)})


@dataclass
class WeightTable:
    """Monte-Carlo weight estimates w_hat(k) on a grid of support sizes.

    se carries the Monte-Carlo standard error of each estimate; it is kept
    in memory for diagnostics but not serialized (the CSV format is exactly
    k,w_hat,samples).
    """

    ks: np.ndarray
    w_hat: np.ndarray
    samples: np.ndarray
    se: np.ndarray = None

    def interpolate(self, k):
        if np.any(np.asarray(k) < self.ks[0]) or np.any(np.asarray(k) > self.ks[-1]):
            raise DomainError("k outside the table range [%d, %d]" % (self.ks[0], self.ks[-1]))
        return np.interp(k, self.ks, self.w_hat)

    def to_csv(self, path_or_buf):
        _write_rows(path_or_buf, ("k", "w_hat", "samples"),
                    ((int(k), _f17(w), int(s))
                     for k, w, s in zip(self.ks, self.w_hat, self.samples)))

    @classmethod
    def from_csv(cls, path_or_buf):
        rows = _read_rows(path_or_buf, ("k", "w_hat", "samples"))
        ks = np.array([int(r[0]) for r in rows])
        if np.any(np.diff(ks) <= 0):
            raise DomainError("weight table k column must be strictly increasing")
        return cls(ks=ks,
                   w_hat=np.array([float(r[1]) for r in rows]),
                   samples=np.array([int(r[2]) for r in rows]))


def weight_sampling_grid(n, p):
    """Support sizes at which weights are estimated.

    21 equidistant points spanning [1, min(n, p-1)] plus 19 extra
    equispaced points inside the first interval (40 nominal points),
    rounded to integers, deduplicated and sorted.  When the range holds
    fewer than 21 integers, every integer in it is used instead.
    """
    hi = min(int(n), int(p) - 1)
    if hi < 1:
        raise ConfigurationError("weight grid needs min(n, p-1) >= 1")
    if hi - 1 < 20:
        return np.arange(1, hi + 1)
    coarse = np.linspace(1.0, hi, 21)
    dense = np.linspace(1.0, coarse[1], 21)[1:-1]
    ks = np.unique(np.rint(np.concatenate((coarse, dense))).astype(int))
    return np.clip(ks, 1, hi)


@dataclass
class WeightSamplingConfig:
    initial_samples: int = 64
    rel_tol: float = 0.02
    max_samples_small: int = 8192
    max_samples_large: int = 4096
    large_k: int = 300
    cond_limit: float = 1e12
    seed: int = 0

    def max_samples(self, k):
        return self.max_samples_small if k < self.large_k else self.max_samples_large


def _weight_batch(design_sampler, p, k, rng, count, cond_limit):
    """One batch of Monte-Carlo draws of (1/k) ||(X_S'X_S)^{-1} X_S' X_i||^2."""
    vals = np.empty(count)
    got = 0
    attempts = 0
    while got < count:
        attempts += 1
        if attempts > 50 * count:
            raise SingularityError(
                "design keeps producing singular restricted systems at k = %d" % k)
        X = design_sampler(rng)
        pick = rng.choice(p, size=k + 1, replace=False)
        S, i = pick[:k], pick[k]
        G = X[:, S]
        r = np.linalg.qr(G, mode="r")
        d = np.abs(np.diag(r))
        if d.min() == 0.0 or d.max() / d.min() > cond_limit:
            continue  # resample near-singular draws
        coef, *_ = np.linalg.lstsq(G, X[:, i], rcond=None)
        vals[got] = float(coef @ coef) / k
        got += 1
    return vals


def estimate_weights(design_sampler, n, p, ks=None, config=None):
    """Monte-Carlo weight estimates for the given design.

    For each support size k, w(k) averages (1/k) ||(X_S'X_S)^{-1} X_S'
    X_i||^2 over uniformly drawn supports S of size k and i outside S
    (the design_sampler is called per draw; samplers for fixed designs
    simply return the same matrix).  Sample counts follow a doubling
    scheme: after an initial batch, a fresh batch of the current size is
    drawn as a reference, the relative difference decides termination, and
    the batches merge — so counts double until agreement or the cap.

    Returns a WeightTable (deterministic given config.seed: every batch
    draws from a stream derived from (seed, k, batch index)).
    """
    cfg = config or WeightSamplingConfig()
    if ks is None:
        ks = weight_sampling_grid(n, p)
    ks = np.asarray(ks, dtype=int)
    if ks.ndim != 1 or ks.size == 0 or np.any(np.diff(ks) <= 0):
        raise DomainError("ks must be a strictly increasing 1-D integer grid")
    if ks[0] < 1 or ks[-1] > min(n, p - 1):
        raise ConfigurationError("ks must lie within [1, min(n, p-1)]")
    w_hat = np.empty(ks.size)
    counts = np.empty(ks.size, dtype=int)
    ses = np.empty(ks.size)
    for j, k in enumerate(ks):
        total_sum = 0.0
        total_sq = 0.0
        total_n = 0
        batch = 0
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, int(k), batch)))
        vals = _weight_batch(design_sampler, p, int(k), rng,
                             cfg.initial_samples, cfg.cond_limit)
        total_sum, total_sq, total_n = vals.sum(), (vals**2).sum(), vals.size
        cap = cfg.max_samples(int(k))
        while total_n < cap:
            batch += 1
            rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, int(k), batch)))
            vals = _weight_batch(design_sampler, p, int(k), rng, total_n,
                                 cfg.cond_limit)
            cur = total_sum / total_n
            ref = vals.mean()
            rel = abs(ref - cur) / max(abs(cur), 1e-30)
            total_sum += vals.sum()
            total_sq += (vals**2).sum()
            total_n += vals.size
            if rel <= cfg.rel_tol:
                break
        w_hat[j] = total_sum / total_n
        counts[j] = total_n
        var = max(total_sq / total_n - w_hat[j] ** 2, 0.0)
        ses[j] = np.sqrt(var / total_n)
    return WeightTable(ks=ks, w_hat=w_hat, samples=counts, se=ses)


def _f17(x):
    return "%.17g" % x


def _write_rows(path_or_buf, header, rows):
    if hasattr(path_or_buf, "write"):
        w = csv.writer(path_or_buf)
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path_or_buf, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _read_rows(path_or_buf, header):
    if hasattr(path_or_buf, "read"):
        fh = path_or_buf
        rows = _read_rows_from(fh, header)
    else:
        with open(path_or_buf, newline="") as fh:
            rows = _read_rows_from(fh, header)
    return rows


def _read_rows_from(fh, header):
    r = csv.reader(fh)
    try:
        first = next(r)
    except StopIteration:
        raise ParseError("empty CSV")
    if tuple(c.strip() for c in first) != header:
        raise ParseError("expected header %s, got %r" % (",".join(header), first))
    rows = []
    for line in r:
        if not line:
            continue
        if len(line) != len(header):
            raise ParseError("malformed CSV row: %r" % (line,))
        rows.append(tuple(c.strip() for c in line))
    if not rows:
        raise ParseError("CSV has a header but no data rows")
    return rows
