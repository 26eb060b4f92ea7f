"""Command-line front end.

Subcommands: prox, solve, lambda, weights, simulate, predict.  Every run
echoes its resolved configuration to stderr before computing; results go
to stdout or files only, so pipelines stay clean.  All floating-point
output uses 17 significant digits.

Exit codes: 0 success, 2 bad arguments, 3 input parse failure, 4 solver
nonconvergence, 5 internal invariant violation.
"""

import argparse
import json
import os
import sys

import numpy as np

from .amp import high_snr_sweep, write_sweep_csv
from .errors import (
    ConfigurationError, DimensionError, DomainError, InvariantError,
    NonconvergenceError, ParseError, SingularityError,
)
from .harness import ExperimentConfig, run_experiment
from .io import fmt17, load_matrix, load_vector, save_vector
from .lambda_seq import (
    WeightTable, WeightSamplingConfig, estimate_weights, lambda_bh,
    lambda_bhc_gaussian, lambda_bhc_weighted, weight_sampling_grid,
)
from .solver import fista_solve
from .sorted_l1 import prox_sorted_l1


def _echo_config(args):
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print("config: %s" % json.dumps(resolved, default=str, sort_keys=True), file=sys.stderr)


def _emit_vector(vec, out):
    if out:
        save_vector(out, vec)
    else:
        sys.stdout.write("\n".join(fmt17(v) for v in vec) + "\n")


def _emit_lines(lines, out):
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_float_list(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ParseError("bad numeric list %r" % text)


def _parse_int_list(text):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ParseError("bad integer list %r" % text)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_prox(args):
    y = load_vector(args.y)
    lam = load_vector(args.lam)
    x = prox_sorted_l1(y, lam, method=args.method)
    _emit_vector(x, args.out)
    return 0


def _cmd_solve(args):
    X = load_matrix(args.x)
    y = load_vector(args.y)
    n, p = X.shape
    if args.lam:
        lam = load_vector(args.lam)
    elif args.q is not None:
        if args.lambda_kind == "bh":
            lam = lambda_bh(p, args.q)
        else:
            lam = lambda_bhc_gaussian(n, p, args.q).values
    else:
        raise ConfigurationError("need --lam or --q")
    res = fista_solve(
        X, y, lam, t=args.step, max_iters=args.max_iters,
        gap_tol=args.gap_tol, infeas_tol=args.infeas_tol,
    )
    _emit_vector(res.solution, args.out)
    report = {
        "converged": res.converged,
        "duality_gap": res.gap,
        "infeasibility": res.infeasibility,
        "iterations": res.iterations,
        "objective": res.objective_value,
        "termination": res.termination,
    }
    if args.gap_report:
        with open(args.gap_report, "w") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    print("solve: %s" % json.dumps(report, sort_keys=True), file=sys.stderr)
    if not res.converged:
        raise NonconvergenceError(
            "no certificate after %d iterations (gap %.3g, infeasibility %.3g)"
            % (res.iterations, res.gap, res.infeasibility)
        )
    return 0


def _cmd_lambda(args):
    if args.kind == "bh":
        values = lambda_bh(args.p, args.q)
    elif args.kind == "bhc-gaussian":
        if args.n is None:
            raise ConfigurationError("bhc-gaussian needs --n")
        seq = lambda_bhc_gaussian(args.n, args.p, args.q, variant=args.variant)
        values = seq.values
        print("k_star = %d" % seq.k_star, file=sys.stderr)
    elif args.kind == "bhc-weighted":
        if not args.weights:
            raise ConfigurationError("bhc-weighted needs --weights")
        table = WeightTable.from_csv(args.weights)
        seq = lambda_bhc_weighted(table, args.p, args.q)
        values = seq.values
        print("k_star = %d" % seq.k_star, file=sys.stderr)
    else:
        raise ConfigurationError("unknown kind %r" % args.kind)
    lines = ["i,lambda"]
    lines += ["%d,%s" % (i + 1, fmt17(v)) for i, v in enumerate(values)]
    _emit_lines(lines, args.out)
    return 0


def _cmd_weights(args):
    cfg = WeightSamplingConfig(
        initial_samples=args.initial_samples, rel_tol=args.rel_tol,
        max_samples_small=args.max_samples_small,
        max_samples_large=args.max_samples_large, seed=args.seed,
    )
    ks = _parse_int_list(args.ks) if args.ks else weight_sampling_grid(args.n, args.p)

    def sampler(rng):
        return rng.normal(size=(args.n, args.p)) / np.sqrt(args.n)

    table = estimate_weights(sampler, args.n, args.p, ks=ks, config=cfg)
    lines = ["k,w_hat,samples"]
    lines += ["%d,%s,%d" % (k, fmt17(w), s)
              for k, w, s in zip(table.ks, table.w_hat, table.samples)]
    _emit_lines(lines, args.out)
    return 0


def _cmd_simulate(args):
    cfg = ExperimentConfig.from_json(args.config)
    print("experiment: %s" % json.dumps(cfg.to_dict(), sort_keys=True), file=sys.stderr)
    report = run_experiment(cfg, workers=args.workers)
    csv_path = args.out_prefix + "_reps.csv"
    json_path = args.out_prefix + "_summary.json"
    report.write_csv(csv_path)
    report.write_json(json_path)
    print("wrote %s and %s" % (csv_path, json_path), file=sys.stderr)
    return 0


def _cmd_predict(args):
    epsilons = _parse_float_list(args.epsilons)
    deltas = _parse_float_list(args.deltas)
    preds = high_snr_sweep(epsilons, deltas)
    if args.out:
        write_sweep_csv(args.out, preds)
    else:
        header = "epsilon,delta,regime,alpha,gamma,q_star,power"
        rows = [header]
        for pr in preds:
            gamma = "" if pr.gamma_star is None else fmt17(pr.gamma_star)
            rows.append(",".join([
                fmt17(pr.epsilon), fmt17(pr.delta), pr.regime,
                fmt17(pr.alpha_star), gamma, fmt17(pr.q_star), fmt17(pr.power),
            ]))
        sys.stdout.write("\n".join(rows) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="slopekit",
        description="Sorted-L1 penalized estimation: prox, solvers, sequences, experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prox", help="prox of the sorted-L1 norm")
    p.add_argument("--y", required=True, help="input vector (CSV or SLP1)")
    p.add_argument("--lam", required=True, help="penalty sequence (CSV or SLP1)")
    p.add_argument("--method", choices=("stack", "averaging"), default="stack")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_prox)

    p = sub.add_parser("solve", help="FISTA solve of the penalized least-squares problem")
    p.add_argument("--x", required=True, help="design matrix (CSV or SLP1)")
    p.add_argument("--y", required=True, help="response vector")
    p.add_argument("--lam", help="penalty sequence file")
    p.add_argument("--q", type=float, help="build the sequence at this FDR level instead")
    p.add_argument("--lambda-kind", choices=("bh", "bhc-gaussian"), default="bh")
    p.add_argument("--step", type=float, help="fixed step size (default 1/||X||^2)")
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--gap-tol", type=float)
    p.add_argument("--infeas-tol", type=float)
    p.add_argument("--out", help="estimate CSV (default stdout)")
    p.add_argument("--gap-report", help="write the convergence report JSON here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("lambda", help="emit a BH or corrected penalty sequence")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--kind", choices=("bh", "bhc-gaussian", "bhc-weighted"), default="bh")
    p.add_argument("--n", type=int, help="sample size (bhc kinds)")
    p.add_argument("--variant", choices=("sum_bh", "recursive"), default="sum_bh")
    p.add_argument("--weights", help="weight table CSV (bhc-weighted)")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_lambda)

    p = sub.add_parser("weights", help="Monte-Carlo correction weights for a Gaussian design")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--ks", help="comma-separated support sizes (default: built-in grid)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rel-tol", type=float, default=0.02)
    p.add_argument("--initial-samples", type=int, default=64)
    p.add_argument("--max-samples-small", type=int, default=8192)
    p.add_argument("--max-samples-large", type=int, default=4096)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("simulate", help="run a replicated experiment from a JSON config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out-prefix", default="experiment",
                   help="writes <prefix>_reps.csv and <prefix>_summary.json")
    p.add_argument("--workers", type=int, default=os.cpu_count(),
                   help="parallel replications (default: available cores)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("predict", help="asymptotic lasso FDR/power sweep")
    p.add_argument("--epsilons", required=True, help="comma-separated sparsity fractions")
    p.add_argument("--deltas", required=True, help="comma-separated n/p ratios")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_predict)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    _echo_config(args)
    try:
        return args.func(args)
    except ParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return 3
    except NonconvergenceError as exc:
        print("nonconvergence: %s" % exc, file=sys.stderr)
        return 4
    except (ConfigurationError, DimensionError, DomainError, SingularityError) as exc:
        print("bad arguments: %s" % exc, file=sys.stderr)
        return 2
    except InvariantError as exc:
        print("internal invariant violated: %s" % exc, file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
