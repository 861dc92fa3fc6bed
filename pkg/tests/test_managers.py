import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pytest

from cvep_sdk.managers import DEFAULT_CONFIG, DatasetManager, PipelineManager, ReportManager, buildConfig
from cvep_sdk.simulator import defaultForwardModel, simulateRawRecording
from cvep_sdk.stimulus import makeSessionPlan
from cvep_sdk.timer import StageTimer
from cvep_sdk.utils import mergeLayers, readCsv, readJson, sha256File, sha256Json, writeCsv

SMALL = {
    "channels": 4,
    "runs": 2,
    "trials_per_run": 8,
    "permutations": 20,
    "length_grid_s": [0.1, 0.3],
}


def test_dataset_directory(mixedDataset, tmp_path):
    manager = DatasetManager(tmp_path / "dataset")
    manager.save(mixedDataset)
    assert manager.kind == "epochs"
    assert (tmp_path / "dataset" / "trials.bin").stat().st_size == mixedDataset.data.size * 4
    loaded = manager.load()
    np.testing.assert_array_equal(loaded.data, mixedDataset.data)
    np.testing.assert_array_equal(loaded.labels, mixedDataset.labels)
    assert loaded.conditions == mixedDataset.conditions
    assert loaded.pair.right.bits == mixedDataset.pair.right.bits

    (tmp_path / "dataset" / "trials.bin").write_bytes(b"\0" * 8)
    with pytest.raises(ValueError):
        manager.load()
    with pytest.raises(ValueError):
        DatasetManager(tmp_path / "missing").load()


def test_raw_recording_directory(pair, tmp_path):
    plan = makeSessionPlan(1, pair.names, nRuns=1, trialsPerRun=2)
    raw = simulateRawRecording(plan, defaultForwardModel(3), pair)
    manager = DatasetManager(tmp_path / "raw")
    manager.saveRaw(raw, pair, {"note": "test"})
    assert manager.kind == "raw"
    loaded, loadedPair, provenance = manager.loadRaw()
    np.testing.assert_array_equal(loaded.data, raw.data)
    assert loaded.onsets == raw.onsets
    assert loadedPair.names == pair.names
    assert provenance == {"note": "test"}
    with pytest.raises(ValueError):
        manager.load()


def test_report_files_are_stable(tmp_path):
    curves = {"overt": [(0.1, 0.7), (0.3, 0.95)], "covert": [(0.1, 0.55), (0.3, 0.8)]}
    first = ReportManager(tmp_path / "a").plotCurves(curves)
    second = ReportManager(tmp_path / "b").plotCurves(curves)
    assert first.read_bytes() == second.read_bytes()

    patterns = {"overt": {"a": np.linspace(0, 1, 4), "responses": np.ones((3, 12)), "rate_hz": 120}}
    assert ReportManager(tmp_path / "a").plotPatterns(patterns).exists()

    summary = ReportManager(tmp_path / "a").writeSummary(
        {"overt": {"length_s": 0.3, "mean_accuracy": 0.95, "p_value": 0.001, "labels": [0, 1, 1, 0]}})
    header, rows = readCsv(summary)
    assert header == ["condition", "length_s", "mean_accuracy", "p_value", "trials"]
    assert rows == [["overt", "0.3", "0.95", "0.001", "4"]]


def test_report_leaves_global_style_alone(tmp_path):
    before = dict(plt.rcParams)
    ReportManager(tmp_path).plotCurves({"overt": [(0.1, 0.7), (0.3, 0.95)]})
    assert plt.rcParams["svg.hashsalt"] == before["svg.hashsalt"]
    assert plt.rcParams["svg.fonttype"] == before["svg.fonttype"]


def test_csv_cells_with_separators(tmp_path):
    path = tmp_path / "cells.csv"
    writeCsv(path, ("name", "note"), [("left, first", 'say "hi"'), ("plain", 0.5)])
    assert path.read_text().splitlines()[1] == '"left, first","say ""hi"""'
    header, rows = readCsv(path)
    assert header == ["name", "note"]
    assert rows == [["left, first", 'say "hi"'], ["plain", "0.5"]]


def test_curve_from_csv(tmp_path):
    path = tmp_path / "curve_overt.csv"
    writeCsv(path, ("length_s", "fold", "accuracy", "mean_accuracy", "p_value"),
             [(0.3, 0, 1.0, 0.9, 0.01), (0.3, 1, 0.8, 0.9, 0.01), (0.1, 0, 0.6, 0.6, 0.2)])
    assert ReportManager.curveFromCsv(path) == [(0.1, 0.6), (0.3, 0.9)]


@pytest.mark.parametrize("overrides", [
    {"length_grid_s": []},
    {"length_grid_s": [0.105]},
    {"folds": 1},
    {"channels": 1},
    {"noise_model": "brown"},
    {"degree": 4},
    {"shift_bits": 126},
    {"trials_per_run": 7},
    {"runs": 1, "overt_runs": 1, "trials_per_run": 2, "folds": 4},
    {"condition_gains": {"covert": 1.5}},
    {"unknown_key": 1},
])
def test_invalid_configurations(overrides):
    with pytest.raises(ValueError):
        buildConfig(overrides)


def test_config_layers_nested_values():
    config = buildConfig({"condition_gains": {"covert": 0.6}})
    assert config["condition_gains"] == {"overt": 1.0, "covert": 0.6}
    assert DEFAULT_CONFIG["condition_gains"]["covert"] == 0.4
    base = {"a": {"b": 1}, "d": [1]}
    merged = mergeLayers(base, {"a": {"c": 2}}, {"d": [2]})
    assert merged == {"a": {"b": 1, "c": 2}, "d": [2]}
    assert base == {"a": {"b": 1}, "d": [1]}


def test_stage_seeds_follow_the_master_seed(tmp_path):
    first = PipelineManager({"seed": 1}, tmp_path)
    assert first.seeds == PipelineManager({"seed": 1}, tmp_path).seeds
    assert first.seeds != PipelineManager({"seed": 2}, tmp_path).seeds
    assert len(set(first.seeds.values())) == 4


def test_experiment_manifest(tmp_path):
    manager = PipelineManager(SMALL, tmp_path / "run", verbose=False)
    manifest = manager.runExperiment({"note": "small"})
    out = tmp_path / "run"
    assert manifest == readJson(out / "manifest.json")
    assert manifest["note"] == "small"
    assert manifest["config"]["channels"] == 4
    assert manifest["config_sha256"] == sha256Json(manifest["config"])
    for name in ("codes.json", "plan.json", "dataset/trials.bin", "evaluation.json", "model_overt.json",
                 "curve_overt.csv", "curve_covert.csv", "report/curve.svg", "report/summary.csv"):
        assert manifest["artifacts"][name] == sha256File(out / name)
    assert set(manifest["timings_s"]) >= {"codes", "plan", "simulate", "evaluate", "sweep", "report"}
    assert "spatial_pattern" in readJson(out / "model_covert.json")

    again = PipelineManager(SMALL, tmp_path / "again", verbose=False).runExperiment()
    assert again["artifacts"]["curve_overt.csv"] == manifest["artifacts"]["curve_overt.csv"]
    assert again["artifacts"]["dataset/trials.bin"] == manifest["artifacts"]["dataset/trials.bin"]


def test_stage_timer():
    timer = StageTimer(maxTicks=2)
    with timer.measure("a"):
        pass
    timer.start("b")
    assert timer.stop("b") >= 0.0
    assert set(timer.toDict()) == {"a", "b"}
    assert timer.duration("missing") == 0.0
    with pytest.raises(ValueError):
        timer.stop("never")
    with pytest.raises(ValueError):
        StageTimer(maxTicks=0)
