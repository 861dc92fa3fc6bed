"""
Reconvolution CCA decoder.

A spatial filter :code:`w` and a response vector :code:`r` are fitted jointly so that the filtered EEG :code:`w^T X`
correlates maximally with the predicted evoked response :code:`r^T M` of the attended code. A trial is classified by
correlating its filtered EEG with the templates of both codes.
"""
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh, svd
from sklearn.base import BaseEstimator, ClassifierMixin

from .codes import CodePair
from .reconvolution import EVENT_NAMES, EEG_RATE_HZ, EventMatrix, StructureMatrix, buildStructureMatrix, \
    predictResponse, structureMatricesForPair
from .utils import readJson, writeJson

#: float: Default ridge, relative to the mean eigenvalue of each auto-covariance
DEFAULT_RIDGE = 1e-9


@dataclass(frozen=True, eq=False)
class TrialSet:
    """
    Labelled single trials of one condition

    Args:
        data (numpy.ndarray): J x C x T array (volts)
        labels (numpy.ndarray): J labels, 0 for left and 1 for right
        condition (str): Condition tag of the trials
        channelNames (tuple): C channel names
        rateHz (float): Sampling rate
    """
    data: np.ndarray
    labels: np.ndarray
    condition: str = ""
    channelNames: Tuple[str, ...] = ()
    rateHz: float = EEG_RATE_HZ

    def __post_init__(self):
        data = np.asarray(self.data)
        labels = np.asarray(self.labels).astype(int)
        if data.ndim != 3:
            raise ValueError("Trial data must be J x C x T (supplied shape: {})".format(data.shape))
        if labels.shape != (data.shape[0],):
            raise ValueError("Got {} labels for {} trials".format(labels.shape, data.shape[0]))
        if np.any((labels != 0) & (labels != 1)):
            raise ValueError("Labels must be 0 (left) or 1 (right)")
        names = tuple(self.channelNames) or tuple("ch{}".format(c) for c in range(data.shape[1]))
        if len(names) != data.shape[1]:
            raise ValueError("Got {} channel names for {} channels".format(len(names), data.shape[1]))
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "channelNames", names)

    def __len__(self):
        return self.data.shape[0]

    @property
    def nChannels(self) -> int:
        return self.data.shape[1]

    @property
    def nSamples(self) -> int:
        return self.data.shape[2]

    def subset(self, indices) -> "TrialSet":
        indices = np.asarray(indices, dtype=int)
        return replace(self, data=self.data[indices], labels=self.labels[indices])


@dataclass(frozen=True, eq=False)
class DecoderModel:
    w: np.ndarray
    r: np.ndarray
    lengthSamples: int
    structures: Dict[int, StructureMatrix]
    rhoTrain: float
    ridge: float = DEFAULT_RIDGE
    channelNames: Tuple[str, ...] = ()

    @property
    def codeNames(self) -> Tuple[str, str]:
        return self.structures[0].codeName, self.structures[1].codeName

    def responses(self) -> np.ndarray:
        """
        Returns:
            numpy.ndarray: 3 x L array, one transient response per event type
        """
        return self.r.reshape(len(EVENT_NAMES), self.lengthSamples)

    def templates(self) -> np.ndarray:
        return np.vstack([predictResponse(self.structures[label], self.r) for label in (0, 1)])

    def toDict(self) -> dict:
        # event rows are stored as onset indices, the structure matrices are rebuilt from them
        events = {}
        for label in (0, 1):
            structure = self.structures[label]
            rows = structure.data[::self.lengthSamples]
            events[str(label)] = {
                "code_name": structure.codeName,
                "onsets": {name: np.flatnonzero(row).tolist() for name, row in zip(EVENT_NAMES, rows)},
            }
        return {
            "w": self.w.tolist(),
            "r": self.r.tolist(),
            "length_samples": self.lengthSamples,
            "ridge": self.ridge,
            "rho_train": self.rhoTrain,
            "channel_names": list(self.channelNames),
            "n_samples": self.structures[0].nSamples,
            "rate_hz": self.structures[0].rateHz,
            "events": events,
        }

    @classmethod
    def fromDict(cls, data: dict) -> "DecoderModel":
        structures = {}
        for label in (0, 1):
            entry = data["events"][str(label)]
            rows = np.zeros((len(EVENT_NAMES), int(data["n_samples"])), dtype=np.uint8)
            for index, name in enumerate(EVENT_NAMES):
                rows[index, entry["onsets"][name]] = 1
            events = EventMatrix(rows, data["rate_hz"], entry["code_name"])
            structures[label] = buildStructureMatrix(events, int(data["length_samples"]))
        return cls(
            np.asarray(data["w"], dtype=np.float64),
            np.asarray(data["r"], dtype=np.float64),
            int(data["length_samples"]),
            structures,
            float(data["rho_train"]),
            float(data["ridge"]),
            tuple(data["channel_names"]),
        )

    def save(self, path: Path):
        writeJson(path, self.toDict())

    @classmethod
    def load(cls, path: Path) -> "DecoderModel":
        return cls.fromDict(readJson(path))


@dataclass(frozen=True, eq=False)
class SpatialPattern:
    a: np.ndarray
    sigma: np.ndarray
    channelNames: Tuple[str, ...] = ()


def _inverseSqrt(matrix: np.ndarray, name: str) -> np.ndarray:
    values, vectors = eigh(matrix)
    limit = np.finfo(np.float64).eps * matrix.shape[0] * max(values[-1], 0.0)
    if values[0] <= limit:
        raise RuntimeError("{} covariance is singular after regularization (min eigenvalue {:.3e}); "
                           "increase the ridge".format(name, values[0]))
    return (vectors / np.sqrt(values)) @ vectors.T


def _regularize(matrix: np.ndarray, ridge: float) -> np.ndarray:
    dim = matrix.shape[0]
    return matrix + ridge * np.trace(matrix) / dim * np.eye(dim)


def _checkStructures(structures: Dict[int, StructureMatrix], lengthSamples: int, nSamples: int):
    for label in (0, 1):
        if label not in structures:
            raise ValueError("Missing structure matrix for label {}".format(label))
        structure = structures[label]
        if structure.lengthSamples != lengthSamples:
            raise ValueError("Structure matrix of label {} models {} samples, expected {}".format(
                label, structure.lengthSamples, lengthSamples))
        if structure.nSamples != nSamples:
            raise ValueError("Structure matrix of label {} spans {} samples but trials have {}".format(
                label, structure.nSamples, nSamples))


def _covariances(train: TrialSet, structures: Dict[int, StructureMatrix]):
    # covariances of the concatenated views S and D, accumulated per trial / class without building D
    X = train.data
    nTotal = X.shape[0] * X.shape[2]
    muX = X.mean(axis=(0, 2), dtype=np.float64)
    sXX = np.zeros((X.shape[1], X.shape[1]))
    for trial in X:
        trial = trial.astype(np.float64)
        sXX += trial @ trial.T
    sXD = 0.0
    sDD = 0.0
    sumD = 0.0
    for label in (0, 1):
        mask = train.labels == label
        D = structures[label].data
        count = int(mask.sum())
        sXD = sXD + X[mask].sum(axis=0, dtype=np.float64) @ D.T
        sDD = sDD + count * (D @ D.T)
        sumD = sumD + count * D.sum(axis=1)
    muD = sumD / nTotal
    cXX = sXX / nTotal - np.outer(muX, muX)
    cDD = sDD / nTotal - np.outer(muD, muD)
    cXD = sXD / nTotal - np.outer(muX, muD)
    return cXX, cDD, cXD


def fitReconvolutionCCA(train: TrialSet, structures: Dict[int, StructureMatrix], lengthSamples: int,
                        ridge: float = DEFAULT_RIDGE) -> DecoderModel:
    """
    Fits the first canonical pair between the concatenated trials and the concatenated structure matrices of their
    labels. Both views are centered with their global means, whitened with the symmetric inverse square root of their
    ridge-regularized auto-covariance, and the dominant singular pair of the whitened cross-covariance gives
    :code:`w` and :code:`r`.

    Args:
        train (TrialSet): Training trials, both labels present
        structures (dict): Structure matrix per label
        lengthSamples (int): Modeled response length L
        ridge (float): Regularization relative to the mean eigenvalue of each auto-covariance

    Returns:
        DecoderModel: fitted model, the largest-magnitude element of :code:`r` is positive

    Raises:
        ValueError: on too few trials, a missing class or mismatching dimensions
        RuntimeError: if an auto-covariance is singular after regularization
    """
    if len(train) < 2:
        raise ValueError("At least 2 training trials are required (supplied: {})".format(len(train)))
    missing = {0, 1} - set(np.unique(train.labels).tolist())
    if missing:
        raise ValueError("Training set of condition '{}' lacks trials of label {}".format(train.condition, sorted(missing)))
    if ridge < 0:
        raise ValueError("Ridge must be non-negative (supplied: {})".format(ridge))
    _checkStructures(structures, lengthSamples, train.nSamples)

    cXX, cDD, cXD = _covariances(train, structures)
    whiteX = _inverseSqrt(_regularize(cXX, ridge), "EEG")
    whiteD = _inverseSqrt(_regularize(cDD, ridge), "Structure")
    U, _, Vt = svd(whiteX @ cXD @ whiteD)
    w = whiteX @ U[:, 0]
    r = whiteD @ Vt[0]
    if r[np.argmax(np.abs(r))] < 0:
        w, r = -w, -r

    denom = np.sqrt((w @ cXX @ w) * (r @ cDD @ r))
    rho = float(np.clip((w @ cXD @ r) / denom, 0.0, 1.0)) if denom > 0 else 0.0
    return DecoderModel(w, r, int(lengthSamples), dict(structures), rho, float(ridge), train.channelNames)


def _rowCorrelation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Pearson correlation of every row of a with every row of b
    a = a - a.mean(axis=-1, keepdims=True)
    b = b - b.mean(axis=-1, keepdims=True)
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    nb = np.linalg.norm(b, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = (a @ b.T) / (na * nb.T)
    return np.nan_to_num(scores)


def predictTrials(model: DecoderModel, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Batch version of :func:`predictSide`

    Args:
        model (DecoderModel): Fitted model
        X (numpy.ndarray): J x C x T trials

    Returns:
        tuple: J labels and J x 2 correlation scores
    """
    X = np.asarray(X)
    expected = (len(model.w), model.structures[0].nSamples)
    if X.ndim != 3 or X.shape[1:] != expected:
        raise ValueError("Trials of shape {} do not match the model (C x T = {})".format(X.shape, expected))
    projected = np.einsum("c,jct->jt", model.w, X.astype(np.float64))
    scores = _rowCorrelation(projected, model.templates())
    return np.argmax(scores, axis=1), scores


def predictSide(model: DecoderModel, X: np.ndarray) -> Tuple[int, np.ndarray]:
    """
    Classifies one trial by correlating :code:`w^T X` with the template of each code; exact ties go to label 0

    Args:
        model (DecoderModel): Fitted model
        X (numpy.ndarray): C x T trial

    Returns:
        tuple: label and the two correlation scores
    """
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError("A single trial must be C x T (supplied shape: {})".format(X.shape))
    labels, scores = predictTrials(model, X[np.newaxis])
    return int(labels[0]), scores[0]


def spatialCovariance(train: TrialSet) -> np.ndarray:
    X = train.data
    nTotal = X.shape[0] * X.shape[2]
    mu = X.mean(axis=(0, 2), dtype=np.float64)
    sigma = np.zeros((X.shape[1], X.shape[1]))
    for trial in X:
        centered = trial.astype(np.float64) - mu[:, np.newaxis]
        sigma += centered @ centered.T
    return sigma / nTotal


def spatialPattern(model: DecoderModel, train: TrialSet, covariance: Optional[np.ndarray] = None) -> SpatialPattern:
    """
    Forward-model pattern :code:`a = Sigma w` of the spatial filter

    Args:
        model (DecoderModel): Fitted model
        train (TrialSet): Trials the model was fitted on
        covariance (numpy.ndarray, Optional): Precomputed spatial covariance, computed from :code:`train` if omitted

    Returns:
        SpatialPattern: pattern and covariance
    """
    sigma = spatialCovariance(train) if covariance is None else np.asarray(covariance, dtype=np.float64)
    if sigma.shape != (len(model.w), len(model.w)):
        raise ValueError("Covariance of shape {} does not match {} channels".format(sigma.shape, len(model.w)))
    return SpatialPattern(sigma @ model.w, sigma, train.channelNames)


class ReconvolutionCCA(BaseEstimator, ClassifierMixin):
    """
    Scikit-learn estimator around :func:`fitReconvolutionCCA` and :func:`predictTrials`. Structure matrices are built
    from the code pair for the trial duration of the data passed to :code:`fit`.

    .. code-block:: python

        clf = ReconvolutionCCA(pair, lengthSamples=36)
        accuracy = clf.fit(X[trainIdx], y[trainIdx]).score(X[testIdx], y[testIdx])
    """

    def __init__(self, pair: CodePair = None, lengthSamples: int = 36, ridge: float = DEFAULT_RIDGE,
                 eegRateHz: float = EEG_RATE_HZ):
        self.pair = pair
        self.lengthSamples = lengthSamples
        self.ridge = ridge
        self.eegRateHz = eegRateHz

    def fit(self, X, y, channelNames: Sequence[str] = (), condition: str = ""):
        if self.pair is None:
            raise ValueError("A code pair is required to build the structure matrices")
        train = TrialSet(X, y, condition, tuple(channelNames), self.eegRateHz)
        structures = structureMatricesForPair(self.pair, train.nSamples / self.eegRateHz, self.lengthSamples,
                                              self.eegRateHz)
        self.model_ = fitReconvolutionCCA(train, structures, self.lengthSamples, self.ridge)
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        _, scores = predictTrials(self.model_, X)
        return scores[:, 1] - scores[:, 0]

    def predictScores(self, X):
        return predictTrials(self.model_, X)

    def predict(self, X):
        labels, _ = predictTrials(self.model_, X)
        return labels
