import json
import os
import subprocess
import sys

import pytest

from resonant_nls.cli import (EXIT_CRITERION, EXIT_EXCLUDED, EXIT_OK, EXIT_VALIDATION, RunConfig,
                              ValidationError, main, run)


def _run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_modeset_n2(capsys):
    code, out = _run(capsys, "modeset", "--n", "2")
    assert code == EXIT_OK
    assert out["m_plus"] == [7, 8]
    assert out["amplitude_squares"] == {"7": "109/7", "8": "4/7"}
    assert out["checks"]["valid"]


def test_modeset_with_gaps(capsys):
    code, out = _run(capsys, "modeset", "--n", "3", "--gaps", "1,3")
    assert code == EXIT_OK and out["m_plus"] == [28, 30, 31]


def test_amplitudes_reports_exact_determinant(capsys):
    code, out = _run(capsys, "amplitudes", "--modeset", "[7, 8]")
    assert code == EXIT_OK
    assert out["linearization"]["det_exact"] == "-1744/7"


def test_series_summary(capsys):
    code, out = _run(capsys, "series", "--m0", "1", "--eps", "1e-3", "--order", "3")
    assert code == EXIT_OK
    assert len(out["max_abs_per_order"]) == 4
    assert "scale_histogram" in out and out["min_divisor"] > 0


def test_solve_and_dump(capsys, tmp_path):
    path = tmp_path / "solve.json"
    code, out = _run(capsys, "solve", "--modeset", "[1]", "--eps", "1e-3", "--dump",
                     "--output", str(path))
    assert code == EXIT_OK and out["converged"]
    assert json.loads(path.read_text()) == out
    assert len(out["solution"]) == 2 * out["unknowns"]


def test_sweep_writes_csv(capsys, tmp_path):
    csv_path = tmp_path / "sweep.csv"
    code, out = _run(capsys, "sweep", "--modeset", "[1]", "--eps-list", "1e-4,3e-4,1e-3,3e-3",
                     "--csv", str(csv_path))
    assert code == EXIT_OK
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "eps,residual,distance,C,slope_so_far" and len(lines) == 5


def test_scan_writes_csv(capsys, tmp_path):
    csv_path = tmp_path / "scan.csv"
    code, out = _run(capsys, "scan", "--eps0", "1e-2", "--grid", "200", "--nmax", "500",
                     "--csv", str(csv_path))
    assert code == EXIT_OK
    assert out["n_max"] == 500
    assert csv_path.read_text().splitlines()[0] == "eps,good"


def test_excluded_eps_exit_code(capsys, tmp_path):
    path = tmp_path / "out.json"
    code, out = _run(capsys, "solve", "--modeset", "[1]", "--eps", str(1 / 300),
                     "--output", str(path))
    assert code == EXIT_EXCLUDED
    assert out["error"]["kind"] == "excluded-eps" and out["error"]["witness"] == [300, 301]
    assert not path.exists()


@pytest.mark.parametrize("argv", [
    ["modeset", "--bogus"],
    ["modeset"],
    ["solve", "--modeset", "[1]", "--eps", "abc"],
    ["solve", "--modeset", "not json", "--eps", "1e-3"],
    ["amplitudes", "--modeset", "[1, 100]"],
    ["verify", "--suite", "nope"],
    ["nosuch"],
])
def test_validation_failures(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out = json.loads(capsys.readouterr().out)
    assert code == EXIT_VALIDATION
    assert out["error"]["kind"] == "validation"


def test_malformed_flag_leaves_no_files(capsys, tmp_path):
    out_path, csv_path = tmp_path / "o.json", tmp_path / "o.csv"
    code = main(["sweep", "--modeset", "[1]", "--eps-list", "1e-4,abc",
                 "--output", str(out_path), "--csv", str(csv_path)])
    capsys.readouterr()
    assert code == EXIT_VALIDATION
    assert not out_path.exists() and not csv_path.exists()


def test_run_config_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        RunConfig("solve", {"modeset": "[1]", "eps": 1e-3, "colour": "red"})
    with pytest.raises(ValidationError):
        RunConfig("solve", {"modeset": "[1]"})
    with pytest.raises(ValidationError):
        RunConfig("modeset", {"n": 2}, csv="x.csv")


def test_run_config_coerces_types(capsys):
    cfg = RunConfig("modeset", {"n": "2"})
    assert cfg.params == {"n": 2, "gaps": ""}
    assert run(cfg) == EXIT_OK
    capsys.readouterr()


def test_verify_q_residual(capsys):
    code, out = _run(capsys, "verify", "--suite", "q-residual")
    assert code == EXIT_OK and out["passed"]


def test_verify_failure_exit_code(capsys, monkeypatch):
    from resonant_nls import verify
    from resonant_nls.verify import CriterionResult
    monkeypatch.setitem(verify.SUITES, "separation", lambda: [CriterionResult(6, "separation", False)])
    code, out = _run(capsys, "verify", "--suite", "separation")
    assert code == EXIT_CRITERION and not out["passed"]


def test_output_is_deterministic(capsys):
    argv = ["series", "--eps", "1e-3", "--order", "2", "--dump"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_module_entry_point_and_threads():
    env = dict(os.environ, RESONANT_NLS_THREADS="1")
    proc = subprocess.run([sys.executable, "-m", "resonant_nls", "modeset", "--n", "2"],
                          capture_output=True, text=True, env=env, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["m_plus"] == [7, 8]
