"""Command-line interface: subcommands, formats, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from slopekit.amp import high_snr_fdr
from slopekit.cli import main
from slopekit.harness import DesignSpec, ExperimentConfig, MethodSpec, SignalSpec
from slopekit.io import MAGIC, save_matrix, save_vector
from slopekit.lambda_seq import lambda_bh


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_problem(tmp_path, n=25, p=15, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) / np.sqrt(n)
    beta = np.zeros(p)
    beta[:3] = 5.0
    y = X @ beta + rng.normal(size=n)
    xp, yp = tmp_path / "X.csv", tmp_path / "y.csv"
    save_matrix(str(xp), X)
    save_vector(str(yp), y)
    return str(xp), str(yp), X, y


# ---------------------------------------------------------------------------
# config echo


def test_every_run_echoes_resolved_config(capsys, tmp_path):
    yp = tmp_path / "y.csv"
    lp = tmp_path / "lam.csv"
    save_vector(str(yp), np.array([5.0, 4.0, 3.0]))
    save_vector(str(lp), np.array([1.0, 1.0, 1.0]))
    code, out, err = run_cli(capsys, "prox", "--y", str(yp), "--lam", str(lp))
    assert code == 0
    first = err.splitlines()[0]
    assert first.startswith("config: ")
    doc = json.loads(first[len("config: "):])
    assert doc["method"] == "stack" and doc["command"] == "prox"


# ---------------------------------------------------------------------------
# prox


def test_prox_worked_example(capsys, tmp_path):
    yp = tmp_path / "y.csv"
    lp = tmp_path / "lam.csv"
    save_vector(str(yp), np.array([5.0, 4.0, 3.0]))
    save_vector(str(lp), np.array([1.0, 1.0, 1.0]))
    for method in ("stack", "averaging"):
        code, out, _ = run_cli(capsys, "prox", "--y", str(yp),
                               "--lam", str(lp), "--method", method)
        assert code == 0
        np.testing.assert_allclose([float(t) for t in out.split()],
                                   [4.0, 3.0, 2.0], atol=1e-12)
    outp = tmp_path / "x.csv"
    code, out, _ = run_cli(capsys, "prox", "--y", str(yp), "--lam", str(lp),
                           "--out", str(outp))
    assert code == 0 and out == ""
    np.testing.assert_allclose(np.loadtxt(outp), [4.0, 3.0, 2.0], atol=1e-12)


def test_prox_rejects_ragged_input(capsys, tmp_path):
    yp = tmp_path / "y.csv"
    yp.write_text("1,2\n3\n")
    lp = tmp_path / "lam.csv"
    save_vector(str(lp), np.ones(2))
    code, _, err = run_cli(capsys, "prox", "--y", str(yp), "--lam", str(lp))
    assert code == 3
    assert "parse error" in err


# ---------------------------------------------------------------------------
# lambda


def test_lambda_bh_values_and_format(capsys):
    code, out, _ = run_cli(capsys, "lambda", "--p", "1000", "--q", "0.207")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "i,lambda"
    assert len(lines) == 1001
    assert lines[1] == "1,3.7103168588553559"
    assert lines[2] == "2,3.5309947276788773"


def test_lambda_corrected_reports_critical_point(capsys):
    code, out, err = run_cli(capsys, "lambda", "--p", "5000", "--q", "0.05",
                             "--kind", "bhc-gaussian", "--n", "5000")
    assert code == 0
    assert "k_star = 91" in err
    vals = np.array([float(l.split(",")[1]) for l in out.splitlines()[1:]])
    assert vals.size == 5000
    assert np.all(np.diff(vals) <= 0)


def test_lambda_weighted_from_table(capsys, tmp_path):
    n, p = 500, 500
    ks = np.arange(1, 101)
    wp = tmp_path / "w.csv"
    lines = ["k,w_hat,samples"]
    lines += ["%d,%.17g,64" % (k, 1.0 / (n - k - 1.0)) for k in ks]
    wp.write_text("\n".join(lines) + "\n")
    code, out, err = run_cli(capsys, "lambda", "--p", str(p), "--q", "0.1",
                             "--kind", "bhc-weighted", "--weights", str(wp))
    assert code == 0
    assert "k_star = 13" in err
    assert len(out.splitlines()) == p + 1


def test_lambda_argument_errors(capsys):
    code, _, err = run_cli(capsys, "lambda", "--p", "100", "--q", "0.1",
                           "--kind", "bhc-gaussian")
    assert code == 2 and "bad arguments" in err
    code, _, _ = run_cli(capsys, "lambda", "--p", "0", "--q", "0.1")
    assert code == 2
    code, _, _ = run_cli(capsys, "lambda", "--p", "100", "--q", "1.5")
    assert code == 2


# ---------------------------------------------------------------------------
# solve


def test_solve_writes_estimate_and_report(capsys, tmp_path):
    xp, yp, X, y = write_problem(tmp_path)
    outp = tmp_path / "b.csv"
    gapp = tmp_path / "gap.json"
    code, out, err = run_cli(capsys, "solve", "--x", xp, "--y", yp,
                             "--q", "0.1", "--out", str(outp),
                             "--gap-report", str(gapp))
    assert code == 0
    b = np.loadtxt(outp)
    assert b.shape == (15,)
    doc = json.loads(gapp.read_text())
    assert doc["converged"] is True
    assert doc["duality_gap"] <= 1e-6 * max(1.0, 0.5 * float(y @ y))
    summary = [l for l in err.splitlines() if l.startswith("solve: ")]
    assert len(summary) == 1
    assert json.loads(summary[0][len("solve: "):]) == doc


def test_solve_explicit_sequence_matches_q_form(capsys, tmp_path):
    xp, yp, X, y = write_problem(tmp_path)
    lp = tmp_path / "lam.csv"
    save_vector(str(lp), lambda_bh(15, 0.1))
    o1, o2 = tmp_path / "b1.csv", tmp_path / "b2.csv"
    assert run_cli(capsys, "solve", "--x", xp, "--y", yp, "--q", "0.1",
                   "--out", str(o1))[0] == 0
    assert run_cli(capsys, "solve", "--x", xp, "--y", yp, "--lam", str(lp),
                   "--out", str(o2))[0] == 0
    assert o1.read_bytes() == o2.read_bytes()


def test_solve_nonconvergence_exit_code(capsys, tmp_path):
    xp, yp, _, _ = write_problem(tmp_path)
    outp = tmp_path / "b.csv"
    code, _, err = run_cli(capsys, "solve", "--x", xp, "--y", yp, "--q", "0.1",
                           "--max-iters", "1", "--gap-tol", "0",
                           "--out", str(outp))
    assert code == 4
    assert "nonconvergence" in err
    assert outp.exists()  # the partial estimate is still written


def test_solve_refuses_truncated_binary(capsys, tmp_path):
    xp, yp, X, _ = write_problem(tmp_path)
    bad = tmp_path / "X.slp1"
    save_matrix(str(bad), X)
    bad.write_bytes(bad.read_bytes()[:-4])
    code, _, _ = run_cli(capsys, "solve", "--x", str(bad), "--y", yp, "--q", "0.1")
    assert code == 3
    code, _, _ = run_cli(capsys, "solve", "--x", xp, "--y", yp)
    assert code == 2  # neither --lam nor --q


# ---------------------------------------------------------------------------
# weights


def test_weights_deterministic_table(capsys):
    argv = ("weights", "--n", "30", "--p", "40", "--ks", "1,3",
            "--initial-samples", "16", "--max-samples-small", "32")
    code, out1, _ = run_cli(capsys, *argv)
    assert code == 0
    code, out2, _ = run_cli(capsys, *argv)
    assert out1 == out2
    lines = out1.splitlines()
    assert lines[0] == "k,w_hat,samples"
    assert len(lines) == 3
    k, w, s = lines[1].split(",")
    assert int(k) == 1 and float(w) > 0 and int(s) >= 16


def test_weights_bad_grid(capsys):
    code, _, _ = run_cli(capsys, "weights", "--n", "30", "--p", "40",
                         "--ks", "1,2,junk")
    assert code == 3


# ---------------------------------------------------------------------------
# simulate


def experiment_doc():
    cfg = ExperimentConfig(
        design=DesignSpec("orthogonal", 30, 20, seed=0),
        signal=SignalSpec("fixed_amplitude", 4, 20, amplitude=8.0),
        method=MethodSpec("slope", q=0.1),
        replications=3,
        master_seed=1,
    )
    return cfg.to_dict()


def test_simulate_writes_report_pair(capsys, tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps(experiment_doc()))
    prefix = str(tmp_path / "run")
    code, _, err = run_cli(capsys, "simulate", "--config", str(cfgp),
                           "--out-prefix", prefix, "--workers", "1")
    assert code == 0
    reps = (tmp_path / "run_reps.csv").read_text()
    assert reps.splitlines()[0] == "rep,V,R,FDP,TPP,MSE"
    assert len(reps.splitlines()) == 4
    summary = json.loads((tmp_path / "run_summary.json").read_text())
    assert summary["aggregates"]["successes"] == 3
    assert "experiment:" in err


def test_simulate_reruns_are_byte_identical(capsys, tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps(experiment_doc()))
    pa, pb = str(tmp_path / "a"), str(tmp_path / "b")
    assert run_cli(capsys, "simulate", "--config", str(cfgp),
                   "--out-prefix", pa, "--workers", "1")[0] == 0
    assert run_cli(capsys, "simulate", "--config", str(cfgp),
                   "--out-prefix", pb, "--workers", "2")[0] == 0
    assert (tmp_path / "a_reps.csv").read_bytes() == \
           (tmp_path / "b_reps.csv").read_bytes()
    assert (tmp_path / "a_summary.json").read_bytes() == \
           (tmp_path / "b_summary.json").read_bytes()


def test_simulate_bad_config(capsys, tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text("{broken")
    code, _, _ = run_cli(capsys, "simulate", "--config", str(cfgp),
                         "--out-prefix", str(tmp_path / "x"))
    assert code == 3


# ---------------------------------------------------------------------------
# predict


def test_predict_stdout_table(capsys):
    code, out, _ = run_cli(capsys, "predict", "--epsilons", "0.1,0.3",
                           "--deltas", "0.5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "epsilon,delta,regime,alpha,gamma,q_star,power"
    assert len(lines) == 3
    full = lines[1].split(",")
    assert full[2] == "full_power" and full[4] == ""
    assert float(full[5]) == pytest.approx(high_snr_fdr(0.1, 0.5).q_star)
    lim = lines[2].split(",")
    assert lim[2] == "limited_power" and float(lim[4]) > 0


def test_predict_file_output_matches_stdout(capsys, tmp_path):
    outp = tmp_path / "sweep.csv"
    code, stdout_text, _ = run_cli(capsys, "predict", "--epsilons", "0.05",
                                   "--deltas", "1")
    assert code == 0
    code, _, _ = run_cli(capsys, "predict", "--epsilons", "0.05",
                         "--deltas", "1", "--out", str(outp))
    assert code == 0
    disk = outp.read_text().replace("\r\n", "\n")
    assert disk == stdout_text


def test_predict_bad_list(capsys):
    code, _, _ = run_cli(capsys, "predict", "--epsilons", "0.1,oops",
                         "--deltas", "1")
    assert code == 3


# ---------------------------------------------------------------------------
# parser behavior and the installed entry point


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_console_script_runs():
    for argv in ([sys.executable, "-m", "slopekit.cli"], ["slopekit"]):
        proc = subprocess.run(
            argv + ["lambda", "--p", "3", "--q", "0.1"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[0] == "i,lambda"
