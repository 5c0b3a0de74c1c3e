import subprocess
import sys

import pytest

from verhulstpc.cli import main


def test_fixtures_list(capsys):
    assert main(["fixtures"]) == 0
    assert "fig2_k7" in capsys.readouterr().out.split()


def test_fixture_show(capsys):
    assert main(["fixtures", "--show", "fig2_k7"]) == 0
    assert "class_of_user" in capsys.readouterr().out


def test_unknown_fixture(capsys):
    assert main(["fixtures", "--show", "nope"]) == 2
    assert "unknown fixture" in capsys.readouterr().err


def test_complexity_output(capsys, tmp_path):
    assert main(["complexity", "--k", "1,5,30", "--iterations", "2", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("K,iterations,adds_per_user_iter")
    first = lines[1].split(",")
    assert first[:5] == ["1", "2", "4.0", "7.0", "1.0"]
    assert (tmp_path / "complexity.csv").exists()


def test_run_writes_files(capsys, tmp_path):
    code = main(["run", "convergence", "--scenario", "fig2_k7", "--out", str(tmp_path),
                 "--trials", "2", "--iterations", "20"])
    assert code == 0
    out = capsys.readouterr().out.split()
    assert any(p.endswith("convergence_summary.csv") for p in out)


def test_bad_scenario_file(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("K = 3\ndelta = 1.5\n")
    assert main(["run", "convergence", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    assert "delta" in capsys.readouterr().err


def test_missing_scenario_file(capsys, tmp_path):
    assert main(["run", "convergence", "--scenario", str(tmp_path / "x.cfg"),
                 "--out", str(tmp_path)]) == 2


def test_static_error_flag(tmp_path):
    assert main(["run", "adaptive_compare", "--scenario", "fig2_k7", "--out", str(tmp_path),
                 "--trials", "2", "--iterations", "10", "--deltas", "0.1", "--static-error"]) == 0


@pytest.mark.parametrize("argv", [["run"], ["run", "bogus", "--out", "x"], []])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "verhulstpc", "fixtures"],
                         capture_output=True, text=True, check=True)
    assert "table1_defaults" in res.stdout
