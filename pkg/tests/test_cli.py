"""Command-line interface: argument handling, exit codes, and the stability
of written artifacts across reruns."""

import json

import pytest

from diffbounds.cli import build_parser, cli_main


def run_args(out, **over):
    args = ["run", "--experiment", "zzp_check", "--seed", "3", "--out", str(out),
            "--reps", "2", "--samples", "100", "--set", "t_end=100.0",
            "--set", "eps=0.0,0.5"]
    for k, v in over.items():
        args += ["--set", f"{k}={v}"]
    return args


def test_parser_shape():
    parser = build_parser()
    ns = parser.parse_args(["run", "--experiment", "fig1a", "--seed", "4",
                            "--set", "dt=0.002"])
    assert ns.command == "run"
    assert ns.experiment == "fig1a"
    assert ns.seed == 4
    assert ns.overrides == ["dt=0.002"]
    with pytest.raises(SystemExit):
        parser.parse_args(["run", "--experiment", "nosuch"])


def test_run_writes_artifacts_and_reports(tmp_path, capsys):
    out = tmp_path / "results"
    rc = cli_main(run_args(out))
    assert rc == 0
    msg = capsys.readouterr().out
    assert "zzp_check" in msg and str(out) in msg
    assert (out / "zzp_check.csv").exists()
    assert (out / "zzp_check_audit.json").exists()
    assert (out / "zzp_check.png").exists()


def test_fig1a_header_is_pinned(tmp_path):
    out = tmp_path / "results"
    rc = cli_main(["run", "--experiment", "fig1a", "--seed", "0", "--out",
                   str(out), "--reps", "2", "--samples", "60",
                   "--set", "deltas=0.25", "--set", "eps=0.1,0.2"])
    assert rc == 0
    first = (out / "fig1a.csv").read_text().splitlines()[0]
    assert first == "delta,eps,emp_w,emp_w_sd,bound"


def test_rerun_is_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli_main(run_args(out_a)) == 0
    assert cli_main(run_args(out_b)) == 0
    for name in ("zzp_check.csv", "zzp_check_audit.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_missing_config_exits_2(tmp_path, capsys):
    rc = cli_main(["run", "--config", str(tmp_path / "absent.ini")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_parameter_exits_2(capsys):
    rc = cli_main(["run", "--experiment", "zzp_check", "--set", "bogus=1"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_numerical_failure_exits_3(tmp_path, capsys):
    rc = cli_main(["run", "--experiment", "stochastic_drift_check", "--seed",
                   "0", "--out", str(tmp_path / "o"), "--reps", "1",
                   "--samples", "20", "--set", "dt=1.0"])
    assert rc == 3
    assert "aborted:" in capsys.readouterr().err


def test_config_file_run(tmp_path, capsys):
    out = tmp_path / "from_config"
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[run]\n"
        f"experiment = zzp_check\nseed = 8\nout = {out}\n\n"
        "[zzp_check]\n"
        "eps = 0.0, 0.25\n"
        "t_end = 80.0\n"
        "n_samples = 80\n"
        "reps = 2\n")
    rc = cli_main(["run", "--config", str(ini)])
    assert rc == 0
    audit = json.loads((out / "zzp_check_audit.json").read_text())
    assert audit["seed"] == 8
    assert audit["parameters"]["eps"] == [0.0, 0.25]
