"""
Offline evaluation: chronological k-fold cross-validation, label-permutation p-values and the sweep over modeled
transient response lengths.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import KFold

from .decoder import DEFAULT_RIDGE, DecoderModel, ReconvolutionCCA, SpatialPattern, spatialPattern
from .simulator import Dataset
from .utils import showProgress, writeCsv

#: tuple: Modeled response lengths of the sweep, in seconds
DEFAULT_LENGTHS_S = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
#: float: Operating point of the decoder
OPERATING_LENGTH_S = 0.3
CURVE_COLUMNS = ("length_s", "fold", "accuracy", "mean_accuracy", "p_value")
#: int: Decimal places of accuracies and p-values in curve files
CSV_DIGITS = 6


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    foldOfTrial: Tuple[int, ...]

    def split(self):
        """
        Yields :code:`(fold, trainIndices, testIndices)` for every fold
        """
        folds = np.asarray(self.foldOfTrial)
        for fold in range(self.k):
            yield fold, np.flatnonzero(folds != fold), np.flatnonzero(folds == fold)


@dataclass(frozen=True, eq=False)
class EvalResult:
    condition: str
    lengthSamples: int
    rateHz: float
    ridge: float
    foldAccuracies: Tuple[float, ...]
    predictions: np.ndarray
    scores: np.ndarray
    labels: np.ndarray
    folds: FoldAssignment
    pValue: float = 1.0
    nPermutations: int = 0

    @property
    def lengthS(self) -> float:
        return self.lengthSamples / self.rateHz

    @property
    def meanAccuracy(self) -> float:
        return float(np.mean(self.foldAccuracies))

    def toDict(self) -> dict:
        return {
            "condition": self.condition,
            "length_s": self.lengthS,
            "length_samples": self.lengthSamples,
            "ridge": self.ridge,
            "fold_accuracies": list(self.foldAccuracies),
            "mean_accuracy": self.meanAccuracy,
            "p_value": self.pValue,
            "permutations": self.nPermutations,
            "folds": list(self.folds.foldOfTrial),
            "labels": self.labels.tolist(),
            "predictions": self.predictions.tolist(),
            "scores": self.scores.tolist(),
        }


@dataclass(frozen=True, eq=False)
class SweepResult:
    condition: str
    results: Tuple[EvalResult, ...]

    def curve(self) -> List[Tuple[float, float]]:
        return [(result.lengthS, result.meanAccuracy) for result in self.results]

    def best(self) -> EvalResult:
        """Best length; the shortest one wins ties"""
        return max(self.results, key=lambda result: (result.meanAccuracy, -result.lengthSamples))

    def at(self, lengthS: float) -> EvalResult:
        for result in self.results:
            if abs(result.lengthS - lengthS) < 1e-9:
                return result
        raise ValueError("Length {} s is not part of the sweep".format(lengthS))

    def rows(self):
        for result in self.results:
            for fold, accuracy in enumerate(result.foldAccuracies):
                yield (round(result.lengthS, 6), fold, round(float(accuracy), CSV_DIGITS),
                       round(result.meanAccuracy, CSV_DIGITS), round(result.pValue, CSV_DIGITS))

    def writeCsv(self, path: Path):
        writeCsv(path, CURVE_COLUMNS, self.rows())


def chronologicalFolds(nTrials: int, k: int = 4) -> FoldAssignment:
    """
    Splits trials into :code:`k` contiguous blocks in trial order, the first :code:`nTrials % k` blocks one trial
    larger

    Raises:
        ValueError: if :code:`k < 2` or fewer trials than folds
    """
    if k < 2:
        raise ValueError("At least 2 folds are required (supplied: {})".format(k))
    if nTrials < k:
        raise ValueError("Cannot split {} trials into {} folds".format(nTrials, k))
    foldOfTrial = np.zeros(nTrials, dtype=int)
    for fold, (_, test) in enumerate(KFold(n_splits=k, shuffle=False).split(np.arange(nTrials))):
        foldOfTrial[test] = fold
    return FoldAssignment(k, tuple(int(f) for f in foldOfTrial))


def permutationPValue(predictions, labels, nPermutations: int = 1000, rng=None) -> float:
    """
    Add-one permutation p-value of the prediction accuracy: labels are permuted against fixed predictions and
    :code:`p = (1 + #{permuted accuracy >= observed}) / (1 + nPermutations)`

    Args:
        predictions (numpy.ndarray): Predicted labels
        labels (numpy.ndarray): True labels
        nPermutations (int): Number of permutations, 0 gives :code:`p = 1`
        rng: Seed or :class:`numpy.random.Generator`

    Returns:
        float: p-value in (0, 1]
    """
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.size == 0 or labels.size == 0:
        raise ValueError("Predictions and labels must not be empty")
    if predictions.shape != labels.shape:
        raise ValueError("Got {} predictions for {} labels".format(predictions.shape, labels.shape))
    if nPermutations < 0:
        raise ValueError("Number of permutations must be non-negative (supplied: {})".format(nPermutations))
    rng = np.random.default_rng(rng)
    observed = np.mean(predictions == labels)
    exceed = 0
    for _ in range(nPermutations):
        if np.mean(predictions == rng.permutation(labels)) >= observed:
            exceed += 1
    return (1 + exceed) / (1 + nPermutations)


def _fitFold(dataset: Dataset, train, test, lengthSamples, ridge):
    labels = dataset.labels[train]
    if len(np.unique(labels)) < 2:
        raise ValueError("Training folds of condition '{}' hold only label {}; both sides are required".format(
            dataset.condition, int(labels[0])))
    clf = ReconvolutionCCA(dataset.pair, lengthSamples, ridge, dataset.rateHz)
    clf.fit(dataset.data[train], labels, dataset.channelNames, dataset.condition)
    return clf.predictScores(dataset.data[test])


def crossValidate(dataset: Dataset, lengthSamples: int, ridge: float = DEFAULT_RIDGE, k: int = 4,
                  nPermutations: int = 1000, rngSeed=0, nJobs: int = 1) -> EvalResult:
    """
    Chronological k-fold cross-validation of the decoder on one condition

    Args:
        dataset (Dataset): Trials of a single condition
        lengthSamples (int): Modeled response length L
        ridge (float): Decoder regularization
        k (int): Number of folds
        nPermutations (int): Permutations of the p-value
        rngSeed: Seed of the permutations
        nJobs (int): Parallel fold jobs

    Returns:
        EvalResult: every trial predicted exactly once

    Raises:
        ValueError: for mixed conditions or a training set lacking one label
    """
    if dataset.condition == "mixed":
        raise ValueError("Cross-validation needs a single condition (got {})".format(sorted(set(dataset.conditions))))
    folds = chronologicalFolds(len(dataset), k)
    splits = list(folds.split())
    outputs = Parallel(n_jobs=nJobs)(
        delayed(_fitFold)(dataset, train, test, lengthSamples, ridge) for _, train, test in splits
    )
    predictions = np.zeros(len(dataset), dtype=int)
    scores = np.zeros((len(dataset), 2))
    accuracies = []
    for (_, _, test), (labels, foldScores) in zip(splits, outputs):
        predictions[test] = labels
        scores[test] = foldScores
        accuracies.append(float(np.mean(labels == dataset.labels[test])))
    pValue = permutationPValue(predictions, dataset.labels, nPermutations, rngSeed)
    return EvalResult(dataset.condition, int(lengthSamples), dataset.rateHz, ridge, tuple(accuracies), predictions,
                      scores, dataset.labels.copy(), folds, pValue, nPermutations)


def lengthToSamples(lengthS: float, rateHz: float) -> int:
    samples = lengthS * rateHz
    if samples < 1 or abs(samples - round(samples)) > 1e-6:
        raise ValueError("Length {} s is not a positive whole number of samples at {} Hz".format(lengthS, rateHz))
    return int(round(samples))


def sweepResponseLength(dataset: Dataset, lengthsS: Sequence[float] = DEFAULT_LENGTHS_S,
                        ridge: float = DEFAULT_RIDGE, k: int = 4, nPermutations: int = 1000, rngSeed: int = 0,
                        nJobs: int = 1, verbose: bool = False) -> SweepResult:
    """
    Runs :func:`crossValidate` once per modeled response length. The permutation stream of every point is seeded
    from :code:`[rngSeed, lengthSamples]`, so the curve does not depend on :code:`nJobs`

    Returns:
        SweepResult: one :class:`EvalResult` per length, in the given order
    """
    if len(lengthsS) == 0:
        raise ValueError("Length grid is empty")
    samples = [lengthToSamples(length, dataset.rateHz) for length in lengthsS]

    def run(lengthSamples):
        return crossValidate(dataset, lengthSamples, ridge, k, nPermutations, [rngSeed, lengthSamples])

    if nJobs == 1:
        results = []
        for index, lengthSamples in enumerate(samples):
            results.append(run(lengthSamples))
            if verbose:
                showProgress(index + 1, len(samples))
        if verbose:
            print(" done")
    else:
        results = Parallel(n_jobs=nJobs)(delayed(run)(lengthSamples) for lengthSamples in samples)
    return SweepResult(dataset.condition, tuple(results))


def evaluateConditions(dataset: Dataset, lengthSamples: int, ridge: float = DEFAULT_RIDGE, k: int = 4,
                       nPermutations: int = 1000, rngSeed: int = 0, nJobs: int = 1) -> Dict[str, EvalResult]:
    """
    Cross-validates every condition of a mixed dataset at one response length

    Returns:
        dict: condition -> result, overt first
    """
    present = [c for c in ("overt", "covert") if c in dataset.conditions]
    return {
        condition: crossValidate(dataset.selectCondition(condition), lengthSamples, ridge, k, nPermutations,
                                 [rngSeed, index], nJobs)
        for index, condition in enumerate(present)
    }


def fitOperatingPoint(dataset: Dataset, lengthSamples: int,
                      ridge: float = DEFAULT_RIDGE) -> Tuple[DecoderModel, SpatialPattern]:
    """
    Fits the decoder on all trials of one condition and returns it with its spatial pattern
    """
    clf = ReconvolutionCCA(dataset.pair, lengthSamples, ridge, dataset.rateHz)
    clf.fit(dataset.data, dataset.labels, dataset.channelNames, dataset.condition)
    return clf.model_, spatialPattern(clf.model_, dataset.toTrialSet())
