import csv
import json

import numpy as np
import pytest

from fbspec import cli, harness, stepper
from fbspec.cli import ConfigError, OutputPathError, parse_config


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_file_gets_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, "command=mms\ncase=example1\nN=100\nM=100\n"))
    assert cfg.command == "mms" and cfg.N == 100 and cfg.M == 100
    assert cfg.T == 1.0
    assert cfg.M_list == [100, 200, 1000]
    assert cfg.model_params() == cli.model.default_params()


def test_file_syntax_and_override_precedence(tmp_path):
    path = write(
        tmp_path,
        "# comment line\ncommand = time-study   # trailing\nM-list=[10, 20,40]\nT=0.5\nparam.I = 0.5\npaper-literal=yes\n",
    )
    cfg = parse_config(path, {"T": 2.0, "N": None})
    assert cfg.M_list == [10, 20, 40]
    assert cfg.T == 2.0 and cfg.N == 100
    assert cfg.paper_literal is True
    assert cfg.params == {"I": 0.5}
    assert cfg.model_params().I == 0.5


def test_rejections(tmp_path):
    with pytest.raises(ConfigError, match="list not increasing"):
        parse_config(overrides={"M_list": "[200,100]"})
    with pytest.raises(ConfigError, match="'colour'"):
        parse_config(write(tmp_path, "colour=red\n"))
    with pytest.raises(ConfigError, match="T must be positive"):
        parse_config(overrides={"T": -1})
    with pytest.raises(ConfigError, match="expected key=value"):
        parse_config(write(tmp_path, "just words\n", "b.cfg"))
    with pytest.raises(ConfigError, match="unknown model parameter"):
        parse_config(param_overrides={"gamma": "1"})
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "missing.cfg")


def test_violations_named_individually():
    with pytest.raises(ConfigError) as err:
        parse_config(overrides={"T": 0, "N": 0, "N_list": "[5,3]"})
    msg = str(err.value)
    assert "T must be positive" in msg and "N must be" in msg and "N_list: list not increasing" in msg


def test_admissibility_gate():
    with pytest.raises(ConfigError, match="relax-admissibility"):
        parse_config(param_overrides={"delta1": "2.0"})
    cfg = parse_config(overrides={"relax_admissibility": True}, param_overrides={"delta1": "2.0"})
    assert cfg.model_params().delta1 == 2.0
    # the default set's own w1 < 1 is inherited, not re-reported
    assert parse_config(param_overrides={"w1": "0.5"}).model_params().w1 == 0.5
    with pytest.raises(ConfigError, match="I must lie"):
        parse_config(overrides={"relax_admissibility": True}, param_overrides={"I": "2"})


def test_output_path_checked(tmp_path):
    with pytest.raises(OutputPathError):
        parse_config(overrides={"out": str(tmp_path / "nope" / "x.csv")})
    (tmp_path / "d.csv").mkdir()
    with pytest.raises(OutputPathError):
        parse_config(overrides={"out": str(tmp_path / "d.csv")})


def _read(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_emit_time_study(tmp_path):
    rep = harness.ErrorReport(axis="time", case="x", levels=[(100, 1e-3), (200, 1 / 3 * 1e-3)], rates=[1.5849625007211563])
    rep.wall_times = [0.1, 0.2]
    csv_path, meta_path = cli.emit_report(rep, tmp_path / "t.csv")
    rows = _read(csv_path)
    assert rows[0] == ["level", "e_inf", "rate"]
    assert len(rows) == 3 and rows[1][2] == ""
    assert float(rows[2][1]) == 1 / 3 * 1e-3 and float(rows[2][2]) == 1.5849625007211563
    meta = json.loads(meta_path.read_text())
    assert meta_path.name == "t.meta"
    assert meta["wall_times"] == [0.1, 0.2] and "version" in meta


def test_emit_stability_and_trajectory(tmp_path):
    rep = harness.StabilityReport(eps_levels=[1e-6, 1e-8, 1e-10], diffs=[1e-6, 1e-8, 1e-10], ratios=[1.0, 1.0, 1.0])
    rows = _read(cli.emit_report(rep, tmp_path / "s.csv")[0])
    assert rows[0] == ["eps", "diff", "ratio"] and len(rows) == 4

    traj, _ = stepper.run(6, 100, p0=cli.mms.base_model_p0, stride=10)
    rows = _read(cli.emit_report(traj, tmp_path / "traj.csv")[0])
    assert len(rows) == 12
    assert rows[0] == ["t", "R", "v1"] + [f"p_node_{i}" for i in range(7)]
    # round trip of every number
    back = np.array([[float(v) for v in r[3:]] for r in rows[1:]])
    assert np.array_equal(back, traj.p_array())
    assert [float(r[1]) for r in rows[1:]] == traj.R


def test_emit_reports_path_on_failure(tmp_path):
    rep = harness.StabilityReport(eps_levels=[1.0], diffs=[1.0], ratios=[1.0])
    with pytest.raises(OSError, match="nope"):
        cli.emit_report(rep, tmp_path / "nope" / "x.csv")


def test_fmt():
    assert cli.fmt(None) == ""
    assert cli.fmt(7) == "7"
    x = 0.1 + 0.2
    assert float(cli.fmt(x)) == x


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert cli.main(["mms", "--case", "example2", "--N", "10", "--M", "20", "--out", str(out)]) == 0
    assert out.exists() and out.with_suffix(".meta").exists()
    assert cli.main(["time-study", "--M-list", "[20,10]"]) == 1
    assert cli.main(["solve", "--out", str(tmp_path / "no" / "x.csv")]) == 3
    assert cli.main(["solve", "--param", "w1"]) == 1
    capsys.readouterr()


def test_main_solver_failure_exit(tmp_path, monkeypatch, capsys):
    real = stepper.run

    def collapsing(*a, **kw):
        kw["forcing"] = stepper.Forcing(source_R=lambda t: -5.0)
        return real(*a, **kw)

    monkeypatch.setattr(stepper, "run", collapsing)
    assert cli.main(["solve", "--case", "base-model", "--N", "6", "--M", "50"]) == 2
    assert "solver stopped" in capsys.readouterr().err


def test_stdout_is_deterministic(capsys):
    argv = ["solve", "--case", "example2", "--N", "8", "--M", "10"]
    cli.main(argv)
    first = capsys.readouterr().out
    cli.main(argv)
    assert capsys.readouterr().out == first
    assert first.splitlines()[0].startswith("t,R,v1,p_node_0")
