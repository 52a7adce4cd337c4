import json
import re
import shlex
import subprocess
import sys
from pathlib import Path

import pytest

from frozen_rde.cli import main
from frozen_rde.serialize import read_csv_with_header

GOLDEN = Path(__file__).parent / "golden"
COMMANDS = [line.split("|", 1) for line in (GOLDEN / "commands.txt").read_text().splitlines() if line]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name,cmd", COMMANDS, ids=[c[0] for c in COMMANDS])
def test_golden_output(capsys, name, cmd):
    code, out, _ = run(capsys, *shlex.split(cmd))
    assert code == 0
    assert out == (GOLDEN / name).read_text()


def test_repeat_runs_identical(capsys):
    argv = ["simulate", "--theta", "0.7", "--depth", "8", "--samples", "50", "--seed", "9", "--bivariate"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_theta_star(capsys):
    code, out, _ = run(capsys, "theta-star", "--tol", "1e-4")
    d = json.loads(out)
    assert code == 0 and abs(d["theta_star"] - 0.636) <= 1e-3
    assert d["defaults"]["tol"] == 1e-4


def test_signature_constant_rows(capsys):
    code, out, _ = run(capsys, "signature", "--theta", "0.85", "--c", "0", "--n", "10")
    meta, cols, rows = read_csv_with_header(out)
    assert cols == ["n", "f"] and len(rows) == 10
    assert all(float(r[1]) == pytest.approx(20 / 37, abs=1e-15) for r in rows)
    assert meta["format_version"] == 1 and meta["command"] == "signature"


def test_below_critical_exit(capsys):
    code, out, err = run(capsys, "find-chat", "--theta", "0.6")
    assert code == 3 and out == ""
    assert json.loads(err)["error"] == "below_critical"


@pytest.mark.parametrize("argv", [
    ["find-chat", "--theta", "1.5"],
    ["find-chat", "--theta", "abc"],
    ["signature", "--theta", "0.5", "--c", "-1", "--n", "3"],
    ["signature", "--theta", "0.5", "--c", "0.1"],
    ["iterate", "--theta", "0.5", "--bogus", "1"],
    ["simulate", "--theta", "0.5", "--depth", "3", "--samples", "2", "--seed", "0", "--bivariate", "--frozen"],
    ["sweep-chat", "--theta-min", "0.9", "--theta-max", "0.7", "--step", "0.1"],
    ["profile-finf", "--theta", "0.4"],
    ["nonsense"],
    [],
])
def test_flag_errors(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 2 and out == ""


def test_depth_too_large_is_computation_error(capsys):
    code, _, err = run(capsys, "simulate", "--theta", "0.5", "--depth", "30", "--samples", "1", "--seed", "0")
    assert code == 3 and json.loads(err)["error"] == "depth_too_large"


def test_out_file(capsys, tmp_path):
    target = tmp_path / "sig.csv"
    code, out, _ = run(capsys, "signature", "--theta", "0.5", "--c", "0.1", "--n", "4", "--out", str(target))
    assert code == 0 and out == ""
    _, stdout_text, _ = run(capsys, "signature", "--theta", "0.5", "--c", "0.1", "--n", "4")
    assert target.read_text() == stdout_text


def test_seventeen_digits(capsys):
    _, out, _ = run(capsys, "signature", "--theta", "0.7", "--c", "0.02", "--n", "5")
    _, _, rows = read_csv_with_header(out)
    for r in rows:
        mant = re.sub(r"e.*$", "", r[1]).replace(".", "").lstrip("0")
        assert len(mant) <= 17
        assert float(r[1]) == float(f"{float(r[1]):.17g}")


def test_profile_summary(capsys):
    _, out, _ = run(capsys, "profile-finf", "--theta", "0.85", "--format", "json")
    d = json.loads(out)
    assert d["f_inf"][0] == pytest.approx(20 / 37, abs=1e-10)
    assert d["summary"]["upcrossings"] == 1 and d["summary"]["dips_below"]


def test_check_solution_report(capsys):
    _, out, _ = run(capsys, "check-solution", "--theta", "0.6", "--c", "0.01", "--n", "2")
    d = json.loads(out)
    assert d["conditions"]["conditions"]["ii"]["passed"] is False


def test_bivariate_diagonal_below_critical(capsys):
    _, out, _ = run(capsys, "bivariate", "--theta", "0.5", "--K", "10")
    d = json.loads(out)
    assert d["c"] == 0 and d["verdicts"]["off_diagonal_mass"] == 0
    assert d["verdicts"]["invariance_gap"] < 1e-15


def test_frozen_summary(capsys):
    _, out, _ = run(capsys, "simulate", "--theta", "0.4", "--depth", "10", "--samples", "5",
                    "--seed", "0", "--frozen")
    d = json.loads(out)
    assert d["all_inclusions_ok"] and d["all_sandwich_ok"] and d["instances"] == 5


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "frozen_rde", "theta-star", "--tol", "1e-3"],
                       capture_output=True, text=True, check=False)
    assert p.returncode == 0 and "theta_star" in p.stdout
