"""Experiment engine: designs, signal classes, replication loops, reports.

Reproducibility contract
------------------------
Every experiment is driven by a single 64-bit master seed.  Replication r
draws its own generator as

    seed_r = splitmix64(master_seed + (r + 1) * 0x9E3779B97F4A7C15)
    rng_r  = numpy.random.Generator(numpy.random.PCG64(seed_r))

where splitmix64 is the standard finalizer (shift-xor-multiply twice).
The RNG algorithm is pinned to PCG64 so reports are byte-identical across
runs and machines; aggregation is an ordered fold over replication
indices, so the worker count never changes the output.

Designs marked as redrawn (gaussian_iid) are regenerated inside each
replication from rng_r; all other designs are built once from the design
seed and shared across replications.
"""

import json
import hashlib
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.fft import dct, idct

from . import __version__
from .errors import ConfigurationError, DimensionError, NonconvergenceError, ParseError
from .inference import debias, fdr_threshold_estimate, metrics, step_up
from .lambda_seq import lambda_bh, lambda_bhc_gaussian
from .solver import fista_solve
from .io import fmt17

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z):
    """The splitmix64 finalizer; maps 64-bit states to well-mixed outputs."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def replication_seed(master_seed, rep):
    """Derived 64-bit seed for replication rep (documented in module docs)."""
    return splitmix64((master_seed + (rep + 1) * _GOLDEN) & _MASK64)


def _rep_rng(master_seed, rep):
    return np.random.Generator(np.random.PCG64(replication_seed(master_seed, rep)))


# ---------------------------------------------------------------------------
# designs

_DESIGN_KINDS = ("orthogonal", "gaussian_iid", "dct_restricted", "equicorrelated_whitened")


@dataclass
class DesignSpec:
    kind: str
    n: int
    p: int
    seed: int = 0
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in _DESIGN_KINDS:
            raise ConfigurationError("unknown design kind %r" % (self.kind,))
        if self.n < 1 or self.p < 1:
            raise DimensionError("n and p must be positive")
        if self.kind == "orthogonal" and self.n < self.p:
            raise DimensionError("orthogonal designs need n >= p")
        if self.kind == "dct_restricted" and self.n > self.p:
            raise DimensionError("dct_restricted needs n <= p")
        if self.kind == "equicorrelated_whitened":
            if self.n != self.p:
                raise DimensionError("equicorrelated_whitened is square (n == p)")
            if not 0.0 <= self.rho < 1.0:
                raise ConfigurationError("rho must lie in [0, 1)")

    @property
    def redrawn_per_replication(self):
        return self.kind == "gaussian_iid"


def whitening_constants(p, rho):
    """(diagonal, off-diagonal) of the equicorrelation whitener, pre-normalization.

    The covariance (1-rho) I + rho 11' has inverse square root
    a I + b 11' with a = 1/sqrt(1-rho) and b = (1/sqrt(1-rho+p rho) - a)/p.
    """
    a = 1.0 / np.sqrt(1.0 - rho)
    b = (1.0 / np.sqrt(1.0 - rho + p * rho) - a) / p
    return a + b, b


class DctOperator:
    """Row-restricted orthonormal DCT, scaled by sqrt(p/n).

    Implements the matvec/rmatvec/shape protocol the solver accepts, so
    large instances never materialize the p x p transform.
    """

    def __init__(self, rows, p):
        self.rows = np.asarray(rows, dtype=np.intp)
        self.p = int(p)
        self.shape = (self.rows.size, self.p)
        self.scale = np.sqrt(self.p / self.rows.size)

    def matvec(self, v):
        out = dct(np.asarray(v, dtype=np.float64), type=2, norm="ortho")
        return self.scale * out[self.rows]

    def rmatvec(self, r):
        full = np.zeros(self.p)
        full[self.rows] = np.asarray(r, dtype=np.float64)
        return self.scale * idct(full, type=2, norm="ortho")


def _dct_rows(spec, rng):
    # the constant row is always kept; the rest sampled without replacement
    extra = rng.choice(spec.p - 1, size=spec.n - 1, replace=False) + 1
    return np.concatenate(([0], np.sort(extra)))


def make_design(spec, rng=None, as_operator=False):
    """Build the design matrix for a DesignSpec; deterministic under seed.

    Pass as_operator=True to get a matrix-free operator for
    dct_restricted designs.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
    n, p = spec.n, spec.p
    if spec.kind == "orthogonal":
        g = rng.normal(size=(n, p))
        q_mat, r_mat = np.linalg.qr(g)
        return q_mat * np.sign(np.diag(r_mat))
    if spec.kind == "gaussian_iid":
        return rng.normal(size=(n, p)) / np.sqrt(n)
    if spec.kind == "dct_restricted":
        rows = _dct_rows(spec, rng)
        if as_operator:
            return DctOperator(rows, p)
        full = dct(np.eye(p), type=2, norm="ortho", axis=0)
        return np.sqrt(p / n) * full[rows, :]
    # equicorrelated_whitened: column-normalized inverse square root
    diag, off = whitening_constants(p, spec.rho)
    w = np.full((p, p), off)
    np.fill_diagonal(w, diag)
    col_norm = np.sqrt(diag ** 2 + (p - 1) * off ** 2)
    return w / col_norm


# ---------------------------------------------------------------------------
# signals

@dataclass
class SignalSpec:
    class_id: object  # 1..7 or "fixed_amplitude"
    k: int
    p: int
    seed: int = 0
    amplitude: float = None

    def __post_init__(self):
        if self.class_id == "fixed_amplitude":
            if self.amplitude is None or not self.amplitude > 0:
                raise ConfigurationError("fixed_amplitude needs a positive amplitude")
        elif self.class_id not in (1, 2, 3, 4, 5, 6, 7):
            raise ConfigurationError("class_id must be 1..7 or 'fixed_amplitude'")
        if not 1 <= self.k <= self.p:
            raise DimensionError("k must lie in [1, p]")


def make_signal(spec, rng=None):
    """Draw a coefficient vector for a SignalSpec; deterministic under seed.

    Classes 1-6 and fixed_amplitude put k values on a uniformly random
    support; class 7 is dense with power-decayed magnitudes assigned in
    random order (k only parameterizes the decay).
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
    p, k = spec.p, spec.k
    s = np.sqrt(2.0 * np.log(p))
    cid = spec.class_id
    if cid == 7:
        ranks = np.arange(1, p + 1)
        vals = 1.2 * s * (ranks / k) ** (-1.2)
        return rng.permutation(vals)
    if cid == "fixed_amplitude":
        vals = np.full(k, float(spec.amplitude))
    elif cid == 1:
        vals = rng.normal(0.0, 2.0 * s, size=k)
    elif cid == 2:
        vals = rng.normal(0.0, 3.0 * s, size=k)
    elif cid == 3:
        vals = np.full(k, 1.2 * s)
    elif cid == 4:
        vals = np.linspace(1.2 * s, 0.6 * s, k)
    elif cid == 5:
        vals = np.linspace(1.5 * s, 0.5 * s, k)
    else:  # class 6
        vals = np.linspace(4.5 * s, 1.5 * s, k)
    beta = np.zeros(p)
    beta[rng.choice(p, size=k, replace=False)] = vals
    return beta


# ---------------------------------------------------------------------------
# methods and experiment configuration

_METHOD_NAMES = ("slope", "lasso", "bh_marginal", "fdr_threshold")
_LAMBDA_KINDS = ("bh", "bhc_gaussian")


@dataclass
class MethodSpec:
    name: str
    q: float = None
    lambda_kind: str = "bh"
    lam: float = None

    def __post_init__(self):
        if self.name not in _METHOD_NAMES:
            raise ConfigurationError("unknown method %r" % (self.name,))
        if self.name == "lasso":
            if self.lam is None or not self.lam > 0:
                raise ConfigurationError("lasso needs a positive lam")
        else:
            if self.q is None or not 0.0 < self.q < 1.0:
                raise ConfigurationError("%s needs q in (0, 1)" % self.name)
        if self.name == "slope" and self.lambda_kind not in _LAMBDA_KINDS:
            raise ConfigurationError("lambda_kind must be one of %s" % (_LAMBDA_KINDS,))


@dataclass
class ExperimentConfig:
    design: DesignSpec
    signal: SignalSpec
    method: MethodSpec
    debias: bool = False
    replications: int = 1
    noise_sd: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if not self.noise_sd > 0:
            raise ConfigurationError("noise_sd must be positive")
        if self.signal.p != self.design.p:
            raise DimensionError("signal p must match design p")

    def to_dict(self):
        return {
            "design": {
                "kind": self.design.kind, "n": self.design.n, "p": self.design.p,
                "seed": self.design.seed, "rho": self.design.rho,
            },
            "signal": {
                "class_id": self.signal.class_id, "k": self.signal.k,
                "seed": self.signal.seed, "amplitude": self.signal.amplitude,
            },
            "method": {
                "name": self.method.name, "q": self.method.q,
                "lambda_kind": self.method.lambda_kind, "lam": self.method.lam,
            },
            "debias": self.debias,
            "replications": self.replications,
            "noise_sd": self.noise_sd,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            design = DesignSpec(
                kind=doc["design"]["kind"], n=int(doc["design"]["n"]),
                p=int(doc["design"]["p"]), seed=int(doc["design"].get("seed", 0)),
                rho=float(doc["design"].get("rho", 0.0)),
            )
            sig = doc["signal"]
            cid = sig["class_id"]
            if cid != "fixed_amplitude":
                cid = int(cid)
            amp = sig.get("amplitude")
            signal = SignalSpec(
                class_id=cid, k=int(sig["k"]), p=int(sig.get("p", design.p)),
                seed=int(sig.get("seed", 0)),
                amplitude=None if amp is None else float(amp),
            )
            met = doc["method"]
            lam = met.get("lam")
            method = MethodSpec(
                name=met["name"],
                q=None if met.get("q") is None else float(met["q"]),
                lambda_kind=met.get("lambda_kind", "bh"),
                lam=None if lam is None else float(lam),
            )
            return cls(
                design=design, signal=signal, method=method,
                debias=bool(doc.get("debias", False)),
                replications=int(doc.get("replications", 1)),
                noise_sd=float(doc.get("noise_sd", 1.0)),
                master_seed=int(doc.get("master_seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("bad experiment config: %s" % (exc,))

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError("%s: %s" % (path, exc))
        return cls.from_dict(doc)

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# single-call method wrappers

def lasso_reference(X, y, lam):
    """Lasso solution via the sorted-L1 solver with a constant sequence."""
    if not lam > 0:
        raise ConfigurationError("lam must be positive")
    p = X.shape[1]
    return fista_solve(X, y, np.full(p, float(lam))).solution


def bh_marginal(X, y, q):
    """Step-up rule on marginal statistics X'y, each treated as N(0,1) null."""
    z = np.asarray(X).T @ np.asarray(y)
    return step_up(z, z.size, q)


# ---------------------------------------------------------------------------
# the replication engine

def _method_lambda(cfg):
    n, p = cfg.design.n, cfg.design.p
    m = cfg.method
    if m.name == "slope":
        if m.lambda_kind == "bh":
            return lambda_bh(p, m.q)
        return lambda_bhc_gaussian(n, p, m.q).values
    if m.name == "lasso":
        return np.full(p, float(m.lam))
    return None


def _estimate_once(cfg, X, y, lam):
    # returns the estimate vector, or None when the solver fails to certify
    p = cfg.design.p
    name = cfg.method.name
    if name in ("slope", "lasso"):
        res = fista_solve(X, y, lam)
        if not res.converged:
            return None
        b = res.solution.copy()
        b[np.abs(b) <= 1e-10 * lam[0]] = 0.0
        return b
    z = X.T @ y
    if name == "bh_marginal":
        rej = step_up(z, p, cfg.method.q)
        est = np.zeros(p)
        est[rej.rejected] = z[rej.rejected]
        return est
    return fdr_threshold_estimate(z, p, cfg.method.q)


@dataclass
class ExperimentReport:
    config: dict
    config_hash: str
    version: str
    per_rep: list          # (rep index, ExperimentMetrics) for successes
    failures: list         # rep indices whose solve failed
    aggregates: dict = field(default_factory=dict)

    def write_csv(self, path):
        lines = ["rep,V,R,FDP,TPP,MSE"]
        for rep, m in self.per_rep:
            lines.append("%d,%d,%d,%s,%s,%s"
                         % (rep, m.V, m.R, fmt17(m.FDP), fmt17(m.TPP), fmt17(m.MSE)))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def write_json(self, path):
        doc = {
            "aggregates": self.aggregates,
            "config": self.config,
            "config_hash": self.config_hash,
            "failures": self.failures,
            "version": self.version,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")


def _aggregate(per_rep):
    def mean_se(vals):
        arr = np.asarray(vals, dtype=np.float64)
        mean = float(arr.mean())
        se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        return mean, se

    fdr, se_fdr = mean_se([m.FDP for _, m in per_rep])
    tpp, se_tpp = mean_se([m.TPP for _, m in per_rep])
    mse, se_mse = mean_se([m.MSE for _, m in per_rep])
    return {
        "mean_fdr": fdr, "se_fdr": se_fdr,
        "mean_tpp": tpp, "se_tpp": se_tpp,
        "mean_mse": mse, "se_mse": se_mse,
        "successes": len(per_rep),
    }


def run_experiment(cfg, workers=1):
    """Run all replications of an ExperimentConfig and aggregate metrics.

    Failed replications (solver without certificates, or a rank-deficient
    debias refit) are recorded and excluded from aggregates; more than 1%
    of them aborts the experiment rather than letting a bad configuration
    masquerade as a result.
    """
    lam = _method_lambda(cfg)
    fixed_design = None
    if not cfg.design.redrawn_per_replication:
        fixed_design = make_design(cfg.design)

    def one(rep):
        rng = _rep_rng(cfg.master_seed, rep)
        X = fixed_design if fixed_design is not None else make_design(cfg.design, rng=rng)
        beta = make_signal(cfg.signal, rng=rng)
        y = X @ beta + rng.normal(0.0, cfg.noise_sd, size=cfg.design.n)
        est = _estimate_once(cfg, X, y, lam)
        if est is None:
            return None
        if cfg.debias:
            support = np.flatnonzero(est)
            try:
                est = debias(X, y, support)
            except Exception:
                return None
        return metrics(est, beta)

    reps = range(cfg.replications)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, reps))
    else:
        results = [one(r) for r in reps]

    per_rep = [(r, m) for r, m in zip(reps, results) if m is not None]
    failures = [r for r, m in zip(reps, results) if m is None]
    if len(failures) > 0.01 * cfg.replications:
        raise NonconvergenceError(
            "%d of %d replications failed to converge" % (len(failures), cfg.replications)
        )
    if not per_rep:
        raise NonconvergenceError("every replication failed")

    agg = _aggregate(per_rep)
    agg["replications"] = cfg.replications
    agg["failures"] = len(failures)
    return ExperimentReport(
        config=cfg.to_dict(), config_hash=cfg.config_hash(), version=__version__,
        per_rep=per_rep, failures=failures, aggregates=agg,
    )
