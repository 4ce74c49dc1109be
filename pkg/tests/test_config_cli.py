import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from homwave.cli import main
from homwave.config import ConfigError, RunConfig, default_theta, load_config, model_from_config

FOURIER_CFG = {
    "symbol": {"kind": "acoustics", "d": 2},
    "coefficients": {"g": {"kind": "fourier", "terms": [{"n": [0, 0], "re": [[2.0, 0.3], [0.3, 1.0]]}]}},
    "cutoff": 2,
}


def _run(tmp_path, *argv):
    return main(list(argv) + ["--out-dir", str(tmp_path)])


def _csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_json_and_toml_agree(tmp_path):
    (tmp_path / "a.json").write_text(json.dumps({"preset": "const", "tau": 2.5, "eps_list": [0.5, 0.25]}))
    (tmp_path / "a.toml").write_text('preset = "const"\ntau = 2.5\neps_list = [0.5, 0.25]\n')
    a = load_config(tmp_path / "a.json", environ={})
    b = load_config(tmp_path / "a.toml", environ={})
    assert a == b and a.tau == 2.5


def test_precedence_file_env_flags(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"preset": "const", "tau": 2.0, "s": 1.0}))
    env = {"HOMWAVE_TAU": "3.0", "HOMWAVE_S": "1.5", "HOMWAVE_PRESET": "hill"}
    cfg = load_config(tmp_path / "c.json", overrides={"s": 0.5}, environ=env)
    assert (cfg.preset, cfg.tau, cfg.s) == ("hill", 3.0, 0.5)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"preset": "const", "bogus": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"preset": "const", "eps_list": [0.1, -0.1]})
    (tmp_path / "bad.toml").write_text("preset = ")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.toml", environ={})


def test_fourier_config_builds_constant_model():
    cfg = RunConfig.from_dict(FOURIER_CFG)
    m = model_from_config(cfg)
    assert np.allclose(m.g0, [[2.0, 0.3], [0.3, 1.0]])
    assert np.allclose(default_theta(cfg, 2), np.ones(2) / np.sqrt(2))


def test_effective_from_config_file(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(FOURIER_CFG))
    assert _run(tmp_path, "effective", "--config", str(path)) == 0
    rows = _csv(tmp_path / "effective.csv")
    assert rows[0] == ["row", "col", "re", "im"]
    vals = {(r[0], r[1]): float(r[2]) for r in rows[1:]}
    assert vals[("0", "1")] == pytest.approx(0.3)
    summary = json.loads((tmp_path / "effective.json").read_text())
    assert summary["command"] == "effective"


@pytest.mark.parametrize("argv", [
    ["germ", "--preset", "example-8.7"],
    ["threshold", "--preset", "example-13.2", "--fan", "8"],
    ["fiber-sweep", "--preset", "acoustics-1d", "--eps", "0.25", "0.125"],
    ["rate", "--preset", "acoustics-1d", "--eps", "0.25", "0.125"],
    ["sharpness", "--preset", "example-13.2", "--s", "1.5"],
    ["simulate", "--preset", "acoustics-1d-harmonic", "--at-eps", "0.25", "--samples", "5"],
    ["cauchy-rate", "--preset", "acoustics-1d-harmonic", "--eps", "0.25", "0.125"],
    ["reproduce", "hill"],
])
def test_commands_succeed(tmp_path, argv):
    assert _run(tmp_path, *argv) == 0


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(d, "fiber-sweep", "--preset", "acoustics-1d", "--eps", "0.25", "0.125") == 0
    assert (a / "fiber-sweep.csv").read_bytes() == (b / "fiber-sweep.csv").read_bytes()
    ja, jb = (json.loads((d / "fiber-sweep.json").read_text()) for d in (a, b))
    ja["config"].pop("out_dir"), jb["config"].pop("out_dir")
    assert ja == jb


def test_error_exit_codes(tmp_path, capsys):
    assert _run(tmp_path, "effective", "--preset", "nope") == 1
    assert _run(tmp_path, "reproduce", "nope") == 1
    assert _run(tmp_path, "effective", "--config", str(tmp_path / "missing.json")) == 1
    assert _run(tmp_path, "effective") == 1  # no medium given
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1
    assert "error" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "homwave", "effective", "--preset", "const",
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    assert (tmp_path / "effective.csv").exists()
