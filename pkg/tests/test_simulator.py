import math

import numpy as np
import pytest

from cvep_sdk.reconvolution import structureMatricesForPair
from cvep_sdk.simulator import Dataset, ForwardModel, defaultForwardModel, evokedSignal, generateNoise, \
    simulateDataset, simulateRawRecording, simulateTrial
from cvep_sdk.stimulus import makeSessionPlan, makeTrialSpec


def test_default_forward_model():
    fm = defaultForwardModel(8, lengthS=0.3, rngSeed=3)
    assert fm.aTrue.shape == (8,)
    assert fm.rTrue.shape == (3, 36)
    assert fm.rVector.shape == (108,)
    assert int(np.argmax(fm.aTrue)) in (3, 4)
    np.testing.assert_array_equal(defaultForwardModel(8, rngSeed=3).rTrue, fm.rTrue)
    assert not np.array_equal(defaultForwardModel(8, rngSeed=4).rTrue, fm.rTrue)
    with pytest.raises(ValueError):
        defaultForwardModel(1)
    with pytest.raises(ValueError):
        defaultForwardModel(8, lengthS=0.001)


def test_forward_model_validation():
    fm = defaultForwardModel(4)
    with pytest.raises(ValueError):
        ForwardModel(fm.aTrue, fm.rTrue, -1.0)
    with pytest.raises(ValueError):
        ForwardModel(np.zeros(4), fm.rTrue, 0.1)
    with pytest.raises(ValueError):
        ForwardModel(fm.aTrue, fm.rTrue, 0.1, noiseModel="brown")
    with pytest.raises(ValueError):
        ForwardModel(fm.aTrue, fm.rTrue, 0.1, lateralization=1.5)
    with pytest.raises(ValueError):
        ForwardModel(fm.aTrue, fm.rTrue[:2], 0.1)
    with pytest.raises(ValueError):
        ForwardModel(fm.aTrue, fm.rTrue, 0.1, conditionGains={"overt": 1.0})


def test_covert_patterns_are_lateralized():
    fm = defaultForwardModel(9, rngSeed=1)
    np.testing.assert_array_equal(fm.patternFor("overt", "left"), fm.aTrue)
    left = fm.patternFor("covert", "left")
    right = fm.patternFor("covert", "right")
    # attending left loads the right hemisphere and vice versa
    assert left[-1] > right[-1]
    assert right[0] > left[0]
    with pytest.raises(ValueError):
        fm.patternFor("covert", "up")


def test_forward_model_document():
    fm = defaultForwardModel(4, snr=float("inf"), noiseModel="pink")
    document = fm.toDict()
    assert document["snr"] == "inf"
    restored = ForwardModel.fromDict(document)
    assert math.isinf(restored.snr)
    assert restored.noiseModel == "pink"
    np.testing.assert_array_equal(restored.aTrue, fm.aTrue)


@pytest.mark.parametrize("condition,side", [("overt", "left"), ("covert", "right")])
def test_evoked_signal_level(pair, condition, side):
    fm = defaultForwardModel(8, rngSeed=6, snr=0.2)
    trial = makeTrialSpec(3, side, condition, pair.names)
    structures = structureMatricesForPair(pair, 20, fm.lengthSamples)
    signal = evokedSignal(fm, trial, structures[trial.label])
    assert signal.shape == (8, 2400)
    pattern = fm.patternFor(condition, side)
    peak = int(np.argmax(np.abs(pattern)))
    expected = 0.2 * fm.noiseStd * fm.conditionGains[condition]
    assert np.std(signal[peak]) == pytest.approx(expected, rel=1e-9)
    with pytest.raises(ValueError):
        evokedSignal(fm, trial, structureMatricesForPair(pair, 20, 12)[0])


def test_noise_models(rng):
    white = generateNoise("white", (2, 20000), rng)
    assert np.std(white) == pytest.approx(1.0, rel=0.05)
    pink = generateNoise("pink", (2, 20000), rng)
    np.testing.assert_allclose(pink.std(axis=-1), 1.0)
    power = np.abs(np.fft.rfft(pink, axis=-1)) ** 2
    assert power[:, 1:200].mean() > 10 * power[:, -2000:].mean()
    with pytest.raises(ValueError):
        generateNoise("brown", (2, 10), rng)


def test_only_the_cued_code_is_evoked(pair):
    fm = defaultForwardModel(4, rngSeed=2, snr=float("inf"))
    trial = makeTrialSpec(1, "left", "overt", pair.names)
    X = simulateTrial(fm, trial, pair, np.random.default_rng(0))
    assert X.dtype == np.float32
    structures = structureMatricesForPair(pair, 20, fm.lengthSamples)
    np.testing.assert_allclose(X, evokedSignal(fm, trial, structures[0]), rtol=1e-5, atol=1e-12)


def test_simulated_dataset_is_reproducible(pair):
    plan = makeSessionPlan(2, pair.names, nRuns=2, trialsPerRun=4)
    fm = defaultForwardModel(4, rngSeed=2, snr=0.1)
    dataset = simulateDataset(plan, fm, pair, rngSeed=9)
    assert dataset.data.shape == (8, 4, 2400)
    assert dataset.data.dtype == np.float32
    assert dataset.labels.tolist() == [trial.label for _, _, trial in plan.trials()]
    assert dataset.conditions == tuple(trial.condition for _, _, trial in plan.trials())
    assert dataset.provenance["simulation_seed"] == 9
    np.testing.assert_array_equal(simulateDataset(plan, fm, pair, rngSeed=9).data, dataset.data)
    np.testing.assert_array_equal(simulateDataset(plan, fm, pair, rngSeed=9, nJobs=2).data, dataset.data)
    assert not np.array_equal(simulateDataset(plan, fm, pair, rngSeed=10).data, dataset.data)


def test_dataset_condition_selection(mixedDataset):
    assert mixedDataset.condition == "mixed"
    covert = mixedDataset.selectCondition("covert")
    assert covert.condition == "covert"
    assert len(covert) == 16
    assert covert.toTrialSet().condition == "covert"
    with pytest.raises(ValueError):
        covert.selectCondition("overt")
    with pytest.raises(ValueError):
        Dataset(mixedDataset.data, mixedDataset.labels[:-1], mixedDataset.conditions, mixedDataset.pair)


def test_raw_recording_layout(pair):
    plan = makeSessionPlan(4, pair.names, nRuns=1, trialsPerRun=2)
    fm = defaultForwardModel(3, rngSeed=2, snr=0.1)
    raw = simulateRawRecording(plan, fm, pair, rngSeed=3, gapS=1.0)
    assert raw.data.shape == (3, 512 + 2 * (20 * 512 + 512))
    assert raw.onsets == (512, 512 + 20 * 512 + 512)
    assert raw.labels == tuple(trial.label for _, _, trial in plan.trials())
    assert raw.conditions == ("overt", "overt")
