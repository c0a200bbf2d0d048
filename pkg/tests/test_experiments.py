import json
import os
import subprocess
import sys

import numpy as np
import pytest

from landaulab.errors import DomainError, UsageError
from landaulab.experiments.cli import main
from landaulab.experiments.config import ExperimentConfig, parse_config
from landaulab.experiments.fitting import fit_loglog
from landaulab.experiments.scenarios import (
    Report, emit_plotdata, expected_ratio_slope, format_value, run_scenario,
)


def test_fit_loglog_examples():
    fit = fit_loglog([(x, x * x) for x in (1.0, 2.0, 4.0, 8.0)])
    assert fit.slope == pytest.approx(2.0) and fit.r_squared == pytest.approx(1.0)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    flat = fit_loglog([(1, 7), (2, 7), (3, 7)])
    assert flat.slope == pytest.approx(0.0, abs=1e-12) and flat.r_squared == 1.0
    np.testing.assert_allclose(fit.predict([3.0]), [9.0])
    with pytest.raises(DomainError):
        fit_loglog([(1, 1), (2, 2)])
    with pytest.raises(DomainError):
        fit_loglog([(1, 1), (2, -2), (3, 3)])


def test_expected_ratio_slope():
    assert expected_ratio_slope([(128, 2), (2187, 3), (16384, 4)], 3, 1) == (
        "N", pytest.approx(-2 / 3))
    assert expected_ratio_slope([(64, 2), (256, 2), (1024, 2)], 4, 0) == (
        "B", pytest.approx(-0.25))
    assert expected_ratio_slope([(64, 2), (729, 3), (16384, 4)], 3, 1)[0] is None


def test_config_round_trip():
    cfg = ExperimentConfig.default("optimality-ratio", quadrature={"nodes_per_axis": 24},
                                   tolerances={"slope": 0.1}, threads=4)
    text = cfg.to_text()
    again = parse_config(text)
    assert again == cfg
    assert again.to_text() == text


@pytest.mark.parametrize("text, field", [
    ("[scenario]\nname = nope\n", "scenario"),
    ("[scenario]\nname = optimality-ratio\n[parameters]\npq = 3:1\nschedule = 10:2, 64:2, 256:2\n",
     "schedule"),
    ("[scenario]\nname = optimality-ratio\n[parameters]\npq = 3:1\n", "schedule"),
    ("[scenario]\nname = covering-audit\n[parameters]\nn_values = 1\n[quadrature]\nfoo = 1\n",
     "quadrature"),
    ("[scenario]\nname = covering-audit\n[parameters]\nn_values = 1\n[tolerances]\nslope = 1\n",
     "tolerances"),
    ("[scenario]\nname = coercivity-sweep\n[parameters]\ndensities = cube\n", "densities"),
    ("[other]\n", "scenario.name"),
])
def test_config_errors_name_the_field(text, field):
    with pytest.raises(UsageError, match=field):
        parse_config(text)


def test_emit_plotdata(tmp_path):
    rep = Report("optimality-ratio", {}, ["N", "ratio"], [{"N": 2, "ratio": 1.0}],
                 series={"ratio": (["N", "ratio", "fitted"], [(2, 1.0, 1.5), (3, 0.5, 0.4)])})
    (path,) = emit_plotdata(rep, str(tmp_path))
    lines = open(path).read().splitlines()
    assert lines[0] == "# N ratio fitted" and lines[1] == "2 1 1.5"
    with pytest.raises(DomainError):
        emit_plotdata(Report("x", {}, [], []), str(tmp_path))


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(True) == "true" and format_value(3) == "3"


def test_covering_scenario_report():
    cfg = ExperimentConfig.default("covering-audit", n_values=(1, 2), samples=5000)
    rep = run_scenario(cfg)
    assert rep.passed and len(rep.records) == 2
    doc = json.loads(rep.to_json())
    assert set(doc) == {"scenario", "config", "records", "assertions"}
    assert rep.to_csv().splitlines()[0].startswith("N,centers")


def _write(tmp_path, text):
    p = tmp_path / "cfg.ini"
    p.write_text(text)
    return str(p)


def test_cli_exit_codes(tmp_path, capsys):
    base = "[scenario]\nname = covering-audit\n[parameters]\nn_values = 1, 2\nsamples = 5000\n"
    out = str(tmp_path / "out")
    assert main(["covering-audit", "--config", _write(tmp_path, base), "--out", out]) == 0
    assert sorted(os.listdir(out)) == [
        "covering-audit.csv", "covering-audit.json", "covering-audit_multiplicity.dat",
        "covering-audit_multiplicity.png"]
    strict = base + "[tolerances]\nmultiplicity = 2\n"
    out2 = str(tmp_path / "out2")
    assert main(["covering-audit", "--config", _write(tmp_path, strict), "--out", out2,
                 "--json", "--no-plots"]) == 1
    doc = json.load(open(os.path.join(out2, "covering-audit.json")))
    assert any(not a["passed"] for a in doc["assertions"])
    assert not os.path.exists(os.path.join(out2, "covering-audit.csv"))
    assert main(["covering-audit", "--config", _write(tmp_path, "[scenario]\nname = bad\n")]) == 2
    assert main(["shell-estimate", "--config", _write(tmp_path, base)]) == 2
    assert main(["no-such-scenario"]) == 2
    assert main(["covering-audit", "--quad-level", "1", "--out", out]) == 2


def test_cli_numerical_failure(tmp_path, capsys):
    text = ("[scenario]\nname = coercivity-sweep\n[parameters]\ndensities = maxwellian\n"
            "[quadrature]\nnodes_per_axis = 4\ntolerance = 1e-12\n")
    assert main(["coercivity-sweep", "--config", _write(tmp_path, text),
                 "--out", str(tmp_path / "o"), "--no-plots"]) == 3
    assert "AccuracyError" in capsys.readouterr().err


def test_console_script_runs(tmp_path):
    text = "[scenario]\nname = covering-audit\n[parameters]\nn_values = 1\nsamples = 2000\n"
    proc = subprocess.run([sys.executable, "-m", "landaulab.experiments.cli", "covering-audit",
                           "--config", _write(tmp_path, text), "--out", str(tmp_path / "o"),
                           "--csv", "--no-plots"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
