import json

import numpy as np
import pytest

from muskatlab.cli import main, read_csv
from muskatlab.config import parse_config_text
from muskatlab.errors import ConfigParseError, ConfigValidationError

BASE = """\
# two interfaces
[fluid]
densities = 2, 1, 0
depths = 0, 1

[grid]
L = 20
N = 128

[initial]
kind = gaussian_bumps
eps = 1e-3

[stepper]
T_final = 20
dt_max = 5

[diagnostics]
per_decade = 4
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(BASE)
    return p


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_parse_defaults():
    exp = parse_config_text(BASE)
    assert exp.fluid.n == 2 and exp.grid.N == 128
    assert exp["stepper"]["nonlinear_mode"] == "quadrature"
    assert exp["diagnostics"]["s_list"] == (0.0, 1.0)
    assert exp["initial"]["seed"] == 0
    # comments and layout do not change the hash
    again = parse_config_text("; header\n" + BASE.replace("L = 20", "L=20.0"))
    assert again.sha256() == exp.sha256()


def test_unknown_key_location():
    text = BASE.replace("dt_max = 5", "dt_max = 5\n  dealais = true")
    with pytest.raises(ConfigParseError) as info:
        parse_config_text(text, "x.ini")
    err = info.value
    assert err.code == "PARSE_ERROR"
    assert err.details["line"] == 17 and err.details["column"] == 3
    assert "dealais" in str(err)


@pytest.mark.parametrize("text", [
    "[fluid]\ndensities = 1, 0\ndepths = 0\n[nosuch]\n",
    "densities = 1, 0\n",
    "[fluid]\ndensities = 1, 0\ndensities = 1, 0\n",
    "[fluid]\n???\n",
])
def test_parse_errors(text):
    with pytest.raises(ConfigParseError):
        parse_config_text(text)


def test_validation_aggregates():
    text = BASE.replace("densities = 2, 1, 0", "densities = 1, 2, 0") \
               .replace("N = 128", "N = 7")
    with pytest.raises(ConfigValidationError) as info:
        parse_config_text(text)
    msg = str(info.value)
    assert info.value.code == "VALIDATION_ERROR"
    assert "ordering" in msg and "[grid] N" in msg


def test_missing_required():
    with pytest.raises(ConfigValidationError):
        parse_config_text("[grid]\nN = 64\n")


def test_unknown_key_exit_code(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text(BASE + "dealais = true\n")
    out = tmp_path / "o"
    assert main(["evolve", "--config", str(p), "--out", str(out)]) == 2
    rep = _report(out)
    assert rep["status"] == "error" and rep["error"]["code"] == "PARSE_ERROR"


def test_usage_errors(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert main(["bogus", "--config", str(cfg_file)]) == 2
    assert main(["spectrum", "--config", str(cfg_file), "--out", str(out),
                 "--threads", "0"]) == 2
    assert main(["spectrum", "--config", str(cfg_file), "--out", str(out),
                 "--resume", "x.bin"]) == 2
    assert main(["decay", "--config", str(cfg_file), "--out",
                 str(tmp_path / "empty")]) == 2


def test_spectrum_output(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert main(["spectrum", "--config", str(cfg_file), "--out", str(out)]) == 0
    header, cols, rows = read_csv(out / "spectrum.csv")
    assert cols[:3] == ["xi", "lambda_1", "lambda_2"]
    assert any(h.startswith("config-sha256: ") for h in header)
    data = np.array(rows, dtype=float)
    assert len(data) == 200 and np.all(data[:, 1] > 0)
    rel = np.abs(data[:, 3] - data[:, 4]) / np.abs(data[:, 4])
    assert rel.max() <= 1e-12


def test_evolve_decay_and_byte_identity(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["evolve", "--config", str(cfg_file), "--out", str(a)]) == 0
    assert main(["evolve", "--config", str(cfg_file), "--out", str(b)]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    assert (a / "checkpoint_final.bin").read_bytes() == \
        (b / "checkpoint_final.bin").read_bytes()
    # t = 0, 1, 10^(1/4) ... 10^(5/4), 20: too few samples in the last decade
    assert main(["decay", "--config", str(cfg_file), "--out", str(a)]) == 2
    assert _report(a)["error"]["code"] == "INSUFFICIENT_SAMPLES"


def test_decay_fit_from_cli(tmp_path):
    p = tmp_path / "long.ini"
    p.write_text(BASE.replace("T_final = 20", "T_final = 100\nlinear_only = true")
                 .replace("per_decade = 4", "per_decade = 10\ndecay_window = 10, 100"))
    out = tmp_path / "o"
    assert main(["evolve", "--config", str(p), "--out", str(out)]) == 0
    assert main(["decay", "--config", str(p), "--out", str(out)]) == 0
    _, cols, rows = read_csv(out / "decay.csv")
    assert [r[0] for r in rows] == ["0", "1"]
    beta = [float(r[cols.index("beta_hat")]) for r in rows]
    assert beta[1] > beta[0] > 0


def test_resume_reproduces(cfg_file, tmp_path):
    text = cfg_file.read_text().replace("[diagnostics]",
                                        "[output]\ncheckpoint_every = 3\n\n[diagnostics]")
    cfg_file.write_text(text)
    out = tmp_path / "o"
    assert main(["evolve", "--config", str(cfg_file), "--out", str(out)]) == 0
    final = (out / "checkpoint_final.bin").read_bytes()
    _, cols, rows = read_csv(out / "trajectory.csv")
    res = tmp_path / "r"
    assert main(["evolve", "--config", str(cfg_file), "--out", str(res),
                 "--resume", str(out / "checkpoint_0003.bin")]) == 0
    assert (res / "checkpoint_final.bin").read_bytes() == final
    _, _, rrows = read_csv(res / "trajectory.csv")
    assert rrows == rows[-len(rrows):]


def test_verify_passes(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert main(["verify", "--config", str(cfg_file), "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["status"] == "ok" and not rep["failed"]
    _, cols, rows = read_csv(out / "verify.csv")
    assert all(r[1] == "true" for r in rows)


def test_velocity_field(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert main(["velocity-field", "--config", str(cfg_file), "--out", str(out),
                 "--threads", "1"]) == 0
    _, cols, rows = read_csv(out / "velocity.csv")
    assert cols == ["x1", "x2", "u1", "u2", "div_estimate"]
    assert len(rows) == 9 * 7


def test_seed_override(tmp_path):
    p = tmp_path / "r.ini"
    p.write_text(BASE.replace("kind = gaussian_bumps", "kind = random_small"))
    outs = []
    for seed in ("1", "2"):
        out = tmp_path / seed
        assert main(["evolve", "--config", str(p), "--out", str(out),
                     "--seed", seed]) == 0
        outs.append((out / "checkpoint_final.bin").read_bytes())
    assert outs[0] != outs[1]
    assert main(["evolve", "--config", str(p), "--out", str(tmp_path / "x"),
                 "--seed", "-1"]) == 2


def test_threads_env(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setenv("MUSKAT_THREADS", "two")
    assert main(["spectrum", "--config", str(cfg_file), "--out",
                 str(tmp_path / "o")]) == 2
