import json
import subprocess
import sys

import pytest

from conftest import ROOT
from cvep_helpers.arg_manager import parseArgs
from cvep_helpers.cli_utils import exitCodeFor, isFilePath
from cvep_helpers.config_manager import ConfigManager

SCRIPT = ROOT / "cvep_pipeline.py"
SMALL = {
    "channels": 4,
    "runs": 2,
    "trials_per_run": 8,
    "permutations": 50,
    "length_grid_s": [0.1, 0.3],
}


def run(*args):
    return subprocess.run([sys.executable, str(SCRIPT)] + [str(arg) for arg in args], cwd=str(ROOT),
                          stdout=subprocess.PIPE, stderr=subprocess.PIPE, universal_newlines=True)


@pytest.fixture
def smallConfig(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


def test_run_is_reproducible(tmp_path, smallConfig):
    first = run("run", "--config", smallConfig, "--out", tmp_path / "a", "--quiet")
    assert first.returncode == 0, first.stderr
    second = run("run", "--config", smallConfig, "--out", tmp_path / "b", "--quiet")
    assert second.returncode == 0, second.stderr
    for name in ("curve_overt.csv", "curve_covert.csv", "evaluation.json", "report/summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config"]["paths"]["out"] == str(tmp_path / "a")
    assert "versions" in manifest and "system" in manifest

    # a manifest re-executes its recorded configuration
    rerun = run("run", "--config", tmp_path / "a" / "manifest.json", "--out", tmp_path / "c", "--quiet")
    assert rerun.returncode == 0, rerun.stderr
    assert (tmp_path / "c" / "curve_overt.csv").read_bytes() == (tmp_path / "a" / "curve_overt.csv").read_bytes()


def test_empty_length_grid_is_a_validation_error(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps(dict(SMALL, length_grid_s=[])))
    result = run("run", "--config", config, "--out", tmp_path / "out")
    assert result.returncode == 2
    report = json.loads((tmp_path / "out" / "error.json").read_text())
    assert report["stage"] == "run"
    assert report["type"] == "ValueError"
    assert report["exit_code"] == 2


def test_unknown_command_exits_with_usage_error():
    assert run("calibrate").returncode == 2


def test_codes_generate_and_verify(tmp_path):
    path = tmp_path / "codes.json"
    assert run("codes", "generate", "--out", path, "--quiet").returncode == 0
    assert run("codes", "verify", path, "--quiet").returncode == 0

    document = json.loads(path.read_text())
    bits = document["modulated"][3]["bits"]
    document["modulated"][3]["bits"] = "11" + bits[2:]
    path.write_text(json.dumps(document))
    result = run("codes", "verify", path, "--out", tmp_path, "--quiet")
    assert result.returncode == 2
    assert json.loads((tmp_path / "error.json").read_text())["stage"] == "codes verify"


def test_stimulus_events(tmp_path):
    result = run("stim", "events", "--code", "left", "--L", 36, "--out", tmp_path, "--quiet")
    assert result.returncode == 0, result.stderr
    assert len((tmp_path / "events.csv").read_text().splitlines()) == 2401
    assert len((tmp_path / "structure.csv").read_text().splitlines()) == 109
    assert run("stim", "events", "--code", "nope", "--out", tmp_path, "--quiet").returncode == 2


def test_raw_simulation_preprocess_and_evaluate(tmp_path, smallConfig):
    raw, epochs = tmp_path / "raw", tmp_path / "epochs"
    result = run("simulate", "--raw", "--config", smallConfig, "--out", raw, "--quiet")
    assert result.returncode == 0, result.stderr
    result = run("preprocess", "--data", raw, "--out", epochs, "--quiet")
    assert result.returncode == 0, result.stderr
    result = run("evaluate", "--data", epochs, "--condition", "overt", "--permutations", 20,
                 "--out", tmp_path / "evaluation.json", "--quiet")
    assert result.returncode == 0, result.stderr
    evaluation = json.loads((tmp_path / "evaluation.json").read_text())
    assert list(evaluation) == ["overt"]
    assert len(evaluation["overt"]["predictions"]) == 8
    # epoched commands refuse raw directories
    assert run("evaluate", "--data", raw, "--out", tmp_path, "--quiet").returncode == 2


def test_sweep_and_report(tmp_path, smallConfig):
    data = tmp_path / "data"
    assert run("simulate", "--config", smallConfig, "--out", data, "--quiet").returncode == 0
    result = run("sweep", "--data", data, "--config", smallConfig, "--lengths", "0.1,0.2", "--condition", "covert",
                 "--out", tmp_path / "curve_covert.csv", "--quiet")
    assert result.returncode == 0, result.stderr
    assert len((tmp_path / "curve_covert.csv").read_text().splitlines()) == 1 + 2 * 4
    result = run("report", "--data", tmp_path, "--out", tmp_path, "--svg", "--quiet")
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "report" / "curve.svg").exists()
    assert (tmp_path / "report" / "summary.csv").exists()


def test_configuration_layers(tmp_path, smallConfig):
    args = parseArgs(["sweep", "--data", "x", "--config", str(smallConfig), "--lengths", "0.2,0.4",
                      "--permutations", "5"])
    conf = ConfigManager(args)
    assert conf.lengthGrid == [0.2, 0.4]
    assert conf.runConfig["permutations"] == 5
    assert conf.runConfig["channels"] == 4
    assert conf.conditions == ("overt", "covert")
    assert conf.outputDir.name == "out"

    named = ConfigManager(parseArgs(["run", "--config", "default", "--out", str(tmp_path / "o.d")]))
    assert named.runConfig["channels"] == 8
    assert named.outputPath == tmp_path / "o.d"

    dotted = ConfigManager(parseArgs(["run", "--config", "default", "--out", str(tmp_path / "out.v2")]))
    assert dotted.outputDir == tmp_path / "out.v2"
    assert not isFilePath(tmp_path / "out.v2")
    assert isFilePath(tmp_path / "c.json")
    (tmp_path / "x.json").mkdir()
    assert not isFilePath(tmp_path / "x.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ValueError):
        ConfigManager(parseArgs(["run", "--config", str(broken)]))
    with pytest.raises(ValueError):
        ConfigManager(parseArgs(["run", "--config", str(tmp_path / "missing.json")]))


def test_exit_codes():
    assert exitCodeFor(ValueError("bad input")) == 2
    assert exitCodeFor(RuntimeError("singular")) == 1
