import json
from pathlib import Path

import pytest

from gibbscert.cli import main

GAUSSIAN_CHAIN = """\
[lattice]
dimension = 1
lower = 0
upper = 7

[potentials]
convex = zero
bounded = zero

[interaction]
type = algebraic
delta = 0.5
c = 0.3
alpha = 1.0
sign = ferromagnetic
"""


@pytest.fixture
def model(tmp_path):
    p = tmp_path / "model.ini"
    p.write_text(GAUSSIAN_CHAIN)
    return p


def read_all(outdir: Path) -> dict:
    return {f.name: f.read_bytes() for f in sorted(outdir.iterdir())}


def test_validate_ok(model, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["validate", "--model", str(model), "--out", str(out)]) == 0
    assert "passed" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["all_ok"] is True
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "validate"
    assert manifest["seed"] == 12345


def test_certify_writes_certificate(model, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["certify", "--model", str(model), "--out", str(out),
               "--method", "gershgorin"])
    assert rc == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["rho"] == pytest.approx(0.5)
    assert cert["method"] == "gershgorin"


def test_sample_and_moments(model, tmp_path):
    out = tmp_path / "out"
    rc = main(["sample", "--model", str(model), "--out", str(out),
               "--n-samples", "2000", "--csv"])
    assert rc == 0
    moments = json.loads((out / "moments.json").read_text())
    assert len(moments["mean"]) == 8
    assert (out / "samples.csv").read_text().count("\n") == 2001


def test_covariance_decay_csv(model, tmp_path):
    out = tmp_path / "out"
    assert main(["covariance", "--model", str(model), "--out", str(out)]) == 0
    lines = (out / "decay.csv").read_text().splitlines()
    assert lines[0] == "distance,value,bound"
    assert len(lines) == 8  # header + 7 off-center sites
    report = json.loads((out / "report.json").read_text())
    # the tiny 8-site box is pre-asymptotic; just require genuine decay
    assert report["decay"]["exponent"] > 0.5


def test_experiment_commands_pass(model, tmp_path):
    args = {
        "compare-subset": ["--sub-lower", "2", "--sub-upper", "5"],
        "compare-abs": [],
        "variance-scan": ["--sizes", "4,8,16"],
        "boundary": ["--radii", "2,4,6"],
        "coarse-grain": ["--K", "2"],
    }
    for cmd, extra in args.items():
        out = tmp_path / cmd
        rc = main([cmd, "--model", str(model), "--out", str(out)] + extra)
        assert rc == 0, cmd
        report = json.loads((out / "report.json").read_text())
        assert report["ok"] is True, cmd
        assert (out / "checks.csv").exists() == bool(report["checks"])


def test_failing_inequality_returns_one(model, tmp_path, monkeypatch):
    import gibbscert.cli as cli
    from gibbscert.experiments import CheckRecord, ExperimentReport

    def fake(*a, **kw):
        rep = ExperimentReport("forced", "fp")
        rep.checks.append(CheckRecord("q", 2.0, 1.0, 0.0, "fail"))
        return rep

    monkeypatch.setattr(cli, "compare_attractive_domination", fake)
    out = tmp_path / "out"
    assert main(["compare-abs", "--model", str(model), "--out", str(out)]) == 1
    assert json.loads((out / "report.json").read_text())["ok"] is False


def test_parse_error_returns_two(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[lattice]\nshape = donut\n")
    assert main(["validate", "--model", str(bad),
                 "--out", str(tmp_path / "out")]) == 2


def test_missing_model_file_returns_two(tmp_path):
    # unreadable model files are usage errors, not crashes
    rc = main(["validate", "--model", str(tmp_path / "nope.ini"),
               "--out", str(tmp_path / "out")])
    assert rc == 2


def test_unknown_flag_exits_with_usage_error(model, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["validate", "--model", str(model),
              "--out", str(tmp_path / "o"), "--frobnicate"])
    assert exc.value.code == 2


def test_numeric_failure_returns_three(model, tmp_path, monkeypatch):
    import gibbscert.cli as cli
    from gibbscert.sampler import SamplingError

    def boom(*a, **kw):
        raise SamplingError("non-finite energy")

    monkeypatch.setattr(cli, "sample_gibbs", boom)
    rc = main(["sample", "--model", str(model), "--out", str(tmp_path / "o")])
    assert rc == 3


def test_rerun_is_byte_identical(model, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(["sample", "--model", str(model), "--out", str(out),
                   "--n-samples", "1000", "--chains", "2", "--csv"])
        assert rc == 0
        outs.append(read_all(out))
    assert outs[0] == outs[1]


def test_thread_count_is_byte_identical(model, tmp_path):
    outs = []
    for threads in ("1", "8"):
        out = tmp_path / f"t{threads}"
        rc = main(["sample", "--model", str(model), "--out", str(out),
                   "--n-samples", "1000", "--chains", "4",
                   "--threads", threads, "--csv"])
        assert rc == 0
        outs.append(read_all(out))
    # manifests differ only in the recorded thread count
    assert outs[0]["moments.json"] == outs[1]["moments.json"]
    assert outs[0]["samples.csv"] == outs[1]["samples.csv"]


def test_missing_model_file_error_message(tmp_path, capsys):
    main(["validate", "--model", str(tmp_path / "nope.ini"),
          "--out", str(tmp_path / "out")])
    assert "nope.ini" in capsys.readouterr().err
