import csv
import io
import math
import re

import pytest

from hitlab import __version__
from hitlab import closedform as C
from hitlab import quadrature as Q
from hitlab.cli import main, read_config


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def data_rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.reader(body))


def strip_timestamp(text):
    return re.sub(r"^# timestamp: .*$", "", text, flags=re.M)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _value(stdout):
    return float(stdout.split("=")[-1].split()[0])


def test_eval_phi_at_one_is_log3():
    code, out, _ = run("eval", "phi", "--m", "1")
    assert code == 0
    assert _value(out) == pytest.approx(math.log(3), abs=1e-12)
    assert "quadrature error" in out


def test_eval_psi32_symmetric_is_zero():
    code, out, _ = run("eval", "psi32", "--lambda", "1")
    assert code == 0 and _value(out) == 0.0


def test_eval_h_at_minus_one():
    code, out, _ = run("eval", "h", "--y=-1")
    assert code == 0
    assert _value(out) == pytest.approx(C.alpha_density(-1.0), rel=1e-14)
    # mpmath value of the density formula; the quoted 0.1186283 is off by 2e-6
    assert _value(out) == pytest.approx(0.11863027857691, abs=1e-12)


def test_eval_grid_csv():
    code, out, _ = run("eval", "phi", "--m", "0,1,2", "--csv")
    assert code == 0
    assert out.startswith(f"# hitlab {__version__}\n")
    rows = data_rows(out)
    assert rows[0] == ["formula", "parameters", "value", "error_estimate"]
    assert [r[1] for r in rows[1:]] == ["m=0", "m=1", "m=2"]
    assert float(rows[3][2]) == pytest.approx(8 / 3 - math.log(3), abs=1e-10)


def test_eval_psi_matches_quadrature():
    code, out, _ = run("eval", "psi", "--a", "1", "--b", "2", "--theta", "2")
    assert code == 0
    assert _value(out) == pytest.approx(Q.psi(Q.TwoBarrier(1.0, 2.0, 2.0)), rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["eval", "nosuch", "--m", "1"],
    ["eval", "phi", "--m", "abc"],
    ["eval", "phi", "--m", "1", "--bogus", "2"],
    ["eval", "phi", "--m=-3"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv):
    code, _, err = run(*argv)
    assert code == 2
    assert err


def test_help_exits_zero(capsys):
    for sub in ("eval", "plotdata", "simulate", "verify"):
        assert main([sub, "--help"]) == 0
        text = capsys.readouterr().out
        assert ("--seed" in text) == (sub in ("simulate", "verify"))
        assert ("--csv" if sub == "verify" else "--output") in text


# ---------------------------------------------------------------------------
# plotdata
# ---------------------------------------------------------------------------

def test_plotdata_phi_default_grid():
    code, out, _ = run("plotdata", "phi")
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["m", "phi"]
    assert len(rows) == 1 + 111
    assert float(rows[1][0]) == -1.0
    assert float(rows[1][1]) == pytest.approx(math.log(3), abs=1e-10)
    grid = [float(r[0]) for r in rows[1:]]
    assert all(b > a for a, b in zip(grid, grid[1:]))
    assert grid[-1] == 10.0


def test_plotdata_phi_prime_crosses_zero_left_of_origin():
    code, out, _ = run("plotdata", "phi_prime", "--lo=-0.5", "--hi", "0.5", "--points", "101")
    assert code == 0
    pts = [(float(x), float(v)) for x, v in data_rows(out)[1:]]
    signs = [(x, v) for x, v in pts if v > 0]
    first_positive = min(x for x, _ in signs)
    assert -0.5 < first_positive <= 0.0
    at_zero = dict(pts)[0.0]
    assert at_zero == pytest.approx(0.0615, abs=1e-4)


def test_plotdata_delta_at_one():
    code, out, _ = run("plotdata", "delta_fn", "--lo", "1", "--hi", "2", "--points", "2")
    assert code == 0
    assert float(data_rows(out)[1][1]) == pytest.approx(math.pi**2 / 12 - 1, abs=1e-12)


def test_plotdata_h_cond_three_columns():
    code, out, _ = run("plotdata", "h_cond", "--t", "0.5,2", "--points", "5")
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["y", "t", "h_cond"]
    assert len(rows) == 1 + 10
    assert {r[1] for r in rows[1:]} == {"0.5", "2.0"}


@pytest.mark.parametrize("argv", [
    ["plotdata", "phi", "--lo", "2", "--hi", "1"],
    ["plotdata", "phi", "--lo=-2.5"],
    ["plotdata", "delta_fn", "--lo", "0.5"],
    ["plotdata", "phi", "--t", "1"],
    ["plotdata", "h_cond", "--t", "0"],
])
def test_plotdata_usage_errors(argv):
    assert run(*argv)[0] == 2


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_single_path_repeatable():
    a = run("simulate", "single-barrier", "--n", "1", "--seed", "9", "--step", "1e-2")
    b = run("simulate", "single-barrier", "--n", "1", "--seed", "9", "--step", "1e-2")
    assert a[0] == 0
    assert data_rows(a[1]) == data_rows(b[1])
    assert len(data_rows(a[1])) == 2


def test_simulate_seed_from_environment(monkeypatch):
    monkeypatch.setenv("HITLAB_SEED", "17")
    code, out, _ = run("simulate", "fixed-horizon", "--n", "2", "--step", "0.1")
    assert code == 0
    assert "# seed: 17" in out
    assert data_rows(out)[1][1] == "17"


def test_simulate_inverse_sqrt_hitting_time():
    code, out, _ = run("simulate", "single-barrier", "--n", "100000", "--step", "1e-3",
                       "--functional", "inv-sqrt-T")
    assert code == 0
    name, mean, se, n, excluded = data_rows(out)[1]
    assert name == "inv-sqrt-T" and int(n) > 99_000
    assert abs(float(mean) - math.sqrt(2 / math.pi)) <= 3 * float(se)


def test_simulate_symmetric_two_barrier_centered():
    code, out, _ = run("simulate", "two-barrier", "--a", "1", "--b", "1", "--n", "20000",
                       "--step", "1e-2", "--functional", "A1")
    assert code == 0
    _, mean, se, _, _ = data_rows(out)[1]
    assert abs(float(mean)) <= 3 * float(se)


@pytest.mark.parametrize("argv", [
    ["simulate", "brownian-motion", "--n", "5"],
    ["simulate", "single-barrier", "--n", "0"],
    ["simulate", "single-barrier", "--step", "-1"],
    ["simulate", "single-barrier", "--n", "5", "--functional", "nonsense"],
])
def test_simulate_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_manifest_round_trip(tmp_path):
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    code, _, _ = run("simulate", "two-barrier", "--n", "20", "--step", "0.05", "--b", "0.5",
                     "--orders", "0,1", "--levels", "0.25", "--seed", "3", "-o", str(first))
    assert code == 0
    code, _, _ = run("simulate", "two-barrier", "--config", str(first), "-o", str(second))
    assert code == 0
    assert strip_timestamp(first.read_text()) == strip_timestamp(second.read_text())
    assert read_config(str(first))["b"] == "0.5"


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nn = 3\nstep = 0.1\nseed = 4\n")
    code, out, _ = run("simulate", "fixed-horizon", "--config", str(cfg), "--n", "2")
    assert code == 0
    assert "# seed: 4" in out
    assert len(data_rows(out)) == 1 + 2


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run("simulate", "single-barrier", "--config", str(cfg))[0] == 2
    assert run("simulate", "single-barrier", "--config", str(tmp_path / "missing"))[0] == 2


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def test_verify_rejects_zero_paths():
    assert run("verify", "all", "--n", "0")[0] == 2
    assert run("verify", "S99")[0] == 2
    assert run("verify", "S1", "--lambda", "2")[0] == 2


def test_verify_s1_passes(tmp_path):
    report = tmp_path / "report.csv"
    code, out, _ = run("verify", "S1", "--csv", str(report))
    assert code == 0
    assert "suite verdict: pass" in out
    rows = data_rows(report.read_text())
    assert rows[0] == ["scenario_id", "check", "claim_ref", "expected", "estimate", "std_error",
                       "statistic", "verdict"]
    assert rows[1][0] == "S1" and rows[1][-1] == "pass"


def test_verify_failure_exit_code():
    code, out, _ = run("verify", "S1", "--n", "2000", "--step", "1e-2", "--z-max", "0")
    assert code == 1
    assert "suite verdict: fail" in out


def test_verify_s6_lambda_two_matches_quadrature(tmp_path):
    report = tmp_path / "s6.csv"
    code, _, _ = run("verify", "S6", "--lambda", "2", "--csv", str(report))
    assert code == 0
    rows = data_rows(report.read_text())[1:]
    assert len(rows) == 2
    for row in rows:
        expected, estimate, se = float(row[3]), float(row[4]), float(row[5])
        assert abs(estimate - expected) <= 3 * se
    # theta = 2 is positive at lambda = 2; theta = 3/2 carries the sign of the quadrature
    theta_two = next(r for r in rows if "T^2" in r[1])
    assert float(theta_two[4]) > 0
