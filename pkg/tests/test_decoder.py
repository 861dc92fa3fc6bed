from dataclasses import replace

import numpy as np
import pytest
from sklearn.base import clone

from cvep_sdk.decoder import DecoderModel, ReconvolutionCCA, TrialSet, fitReconvolutionCCA, predictSide, \
    predictTrials, spatialPattern
from cvep_sdk.reconvolution import StructureMatrix, structureMatricesForPair
from cvep_sdk.utils import pearson

from conftest import simulate

L = 36


@pytest.fixture(scope="module")
def trialSet(overtDataset):
    return overtDataset.toTrialSet()


@pytest.fixture(scope="module")
def structures(pair):
    return structureMatricesForPair(pair, 20, L)


@pytest.fixture(scope="module")
def model(trialSet, structures):
    return fitReconvolutionCCA(trialSet, structures, L)


def test_model_shapes(model):
    assert model.w.shape == (8,)
    assert model.r.shape == (3 * L,)
    assert model.responses().shape == (3, L)
    assert model.templates().shape == (2, 2400)
    assert 0.1 < model.rhoTrain <= 1.0
    assert model.r[np.argmax(np.abs(model.r))] > 0


def test_recovers_flash_responses(model, forwardModel):
    # the onset response is seen once per trial, only flash responses are well determined
    assert abs(pearson(model.r[L:], forwardModel.rVector[L:])) > 0.8


def test_spatial_pattern_matches_forward_model(model, trialSet, forwardModel):
    pattern = spatialPattern(model, trialSet)
    assert pattern.a.shape == (8,)
    assert pattern.channelNames == trialSet.channelNames
    assert abs(pearson(pattern.a, forwardModel.aTrue)) > 0.9


def test_spatial_pattern_scales_with_covariance(model, trialSet):
    doubled = TrialSet(trialSet.data.astype(np.float64) * 2, trialSet.labels, trialSet.condition)
    single = spatialPattern(model, TrialSet(trialSet.data.astype(np.float64), trialSet.labels, trialSet.condition))
    np.testing.assert_allclose(spatialPattern(model, doubled).a, 4 * single.a, rtol=1e-10)
    with pytest.raises(ValueError):
        spatialPattern(model, trialSet, np.eye(3))


def test_predicts_training_trials(model, trialSet):
    labels, scores = predictTrials(model, trialSet.data)
    assert scores.shape == (len(trialSet), 2)
    assert np.mean(labels == trialSet.labels) >= 0.95
    label, single = predictSide(model, trialSet.data[0])
    assert label == labels[0]
    np.testing.assert_allclose(single, scores[0])
    with pytest.raises(ValueError):
        predictSide(model, trialSet.data[:2])
    with pytest.raises(ValueError):
        predictTrials(model, trialSet.data[:, :4])


def test_invariant_to_channel_mixing(trialSet, structures):
    data = trialSet.data.astype(np.float64)
    G = np.eye(data.shape[1]) + 0.3 * np.random.default_rng(9).standard_normal((data.shape[1], data.shape[1]))
    mixed = np.einsum("dc,jct->jdt", G, data)
    base = fitReconvolutionCCA(TrialSet(data, trialSet.labels), structures, L, ridge=0.0)
    remixed = fitReconvolutionCCA(TrialSet(mixed, trialSet.labels), structures, L, ridge=0.0)
    assert remixed.rhoTrain == pytest.approx(base.rhoTrain, abs=1e-9)
    np.testing.assert_allclose(remixed.r, base.r, rtol=1e-5, atol=1e-6 * np.max(np.abs(base.r)))
    np.testing.assert_allclose(G.T @ remixed.w, base.w, rtol=1e-5, atol=1e-6 * np.max(np.abs(base.w)))
    np.testing.assert_array_equal(predictTrials(remixed, mixed)[0], predictTrials(base, data)[0])


def test_swapping_structures_flips_predictions(model, trialSet):
    labels, scores = predictTrials(model, trialSet.data)
    swapped = replace(model, structures={0: model.structures[1], 1: model.structures[0]})
    swappedLabels, swappedScores = predictTrials(swapped, trialSet.data)
    assert np.all(scores[:, 0] != scores[:, 1])
    np.testing.assert_array_equal(swappedLabels, 1 - labels)
    np.testing.assert_allclose(swappedScores, scores[:, ::-1])


def test_perfect_template_scores_one(model):
    template = model.templates()[1]
    trial = np.outer(model.w / (model.w @ model.w), template)
    label, scores = predictSide(model, trial)
    assert label == 1
    assert scores[1] == pytest.approx(1.0, abs=1e-10)
    assert scores[0] < 1.0


def test_fit_validation(trialSet, structures):
    with pytest.raises(ValueError):
        fitReconvolutionCCA(trialSet.subset([0]), structures, L)
    left = np.flatnonzero(trialSet.labels == 0)
    with pytest.raises(ValueError):
        fitReconvolutionCCA(trialSet.subset(left), structures, L)
    with pytest.raises(ValueError):
        fitReconvolutionCCA(trialSet, structures, L, ridge=-1.0)
    with pytest.raises(ValueError):
        fitReconvolutionCCA(trialSet, structures, L + 1)
    with pytest.raises(ValueError):
        TrialSet(trialSet.data, np.full(len(trialSet), 2))


def test_singular_covariance_raises(trialSet, structures):
    data = trialSet.data.astype(np.float64).copy()
    data[:, 0] = 0.0
    with pytest.raises(RuntimeError):
        fitReconvolutionCCA(TrialSet(data, trialSet.labels), structures, L, ridge=0.0)


def test_model_file(model, trialSet, tmp_path):
    path = tmp_path / "model.json"
    model.save(path)
    loaded = DecoderModel.load(path)
    assert loaded.codeNames == model.codeNames
    np.testing.assert_array_equal(loaded.structures[1].data, model.structures[1].data)
    np.testing.assert_array_equal(predictTrials(loaded, trialSet.data)[0], predictTrials(model, trialSet.data)[0])


def test_estimator_interface(pair, trialSet):
    clf = ReconvolutionCCA(pair, lengthSamples=L)
    assert clone(clf).get_params()["lengthSamples"] == L
    clf.fit(trialSet.data[:30], trialSet.labels[:30])
    assert list(clf.classes_) == [0, 1]
    assert clf.score(trialSet.data[30:], trialSet.labels[30:]) >= 0.9
    decision = clf.decision_function(trialSet.data[30:])
    np.testing.assert_array_equal(decision > 0, clf.predict(trialSet.data[30:]) == 1)
    with pytest.raises(ValueError):
        ReconvolutionCCA(None).fit(trialSet.data, trialSet.labels)


def _bestCorrelationByAngle(cXX, cDD, cXD):
    # for a fixed 2-channel filter the best r is a regression, so only the filter angle needs a search
    def squaredCorrelation(theta):
        W = np.stack([np.cos(theta), np.sin(theta)])
        explained = np.einsum("in,ij,jn->n", W, cXD @ np.linalg.solve(cDD, cXD.T), W)
        return explained / np.einsum("in,ij,jn->n", W, cXX, W)

    coarse = np.linspace(0, np.pi, 20001)
    center = coarse[np.argmax(squaredCorrelation(coarse))]
    fine = np.linspace(center - np.pi / 20000, center + np.pi / 20000, 2001)
    return float(np.sqrt(squaredCorrelation(fine).max()))


def test_canonical_correlation_matches_exhaustive_search(rng):
    for _ in range(20):
        L = int(rng.integers(1, 3))
        nSamples = 50
        labels = np.array([0, 1, 0, 1])
        structures = {label: StructureMatrix(rng.standard_normal((3 * L, nSamples)), L, 120, str(label))
                      for label in (0, 1)}
        mixing = rng.standard_normal((2, 3 * L))
        X = np.stack([mixing @ structures[label].data + rng.standard_normal((2, nSamples)) for label in labels])
        model = fitReconvolutionCCA(TrialSet(X, labels), structures, L, ridge=0.0)

        S = np.concatenate(list(X), axis=1).T
        D = np.concatenate([structures[label].data for label in labels], axis=1).T
        joint = np.cov(np.hstack([S, D]).T, bias=True)
        expected = _bestCorrelationByAngle(joint[:2, :2], joint[2:, 2:], joint[:2, 2:])
        assert model.rhoTrain == pytest.approx(expected, abs=1e-5)


def test_noise_free_recovery(pair, forwardModel):
    clean = simulate(pair, forwardModel.withSnr(np.inf)).toTrialSet()
    model = fitReconvolutionCCA(clean, structureMatricesForPair(pair, 20, L), L)
    assert model.rhoTrain >= 0.999
    assert abs(pearson(model.r, forwardModel.rVector)) >= 0.99
    assert abs(pearson(spatialPattern(model, clean).a, forwardModel.aTrue)) >= 0.99
