"""
Synthetic EEG from a known forward model: the cued code's evoked response (reconvolution model with ground-truth
transient responses) projected through a spatial pattern, plus additive noise.
"""
from dataclasses import dataclass, field, replace
import math
from typing import Dict, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import signal

from .codes import CodePair
from .decoder import TrialSet
from .preprocess import RAW_RATE_HZ, LINE_FREQUENCY_HZ, TRIAL_S, RawRecording
from .reconvolution import EEG_RATE_HZ, EVENT_NAMES, StructureMatrix, predictResponse, structureMatricesForPair
from .stimulus import CONDITIONS, SIDES, SessionPlan, TrialSpec

NOISE_MODELS = ("white", "pink")
#: float: Noise standard deviation in volts
NOISE_STD = 1e-5
# (pole, zero) of each first-order shaping section, roughly -10 dB/decade
_PINK_SECTIONS = ((0.995, 0.97), (0.96, 0.80), (0.70, 0.30))
_FOCAL_WIDTH = 0.35
_LATERAL_WIDTH = 0.5
_LATERAL_OFFSET = 0.6


def channelPositions(channels: int) -> np.ndarray:
    """Channel positions on the left-right axis, from -1 (left) to 1 (right)"""
    return np.linspace(-1.0, 1.0, channels)


def _gaussian(x, center, width):
    return np.exp(-0.5 * ((x - center) / width) ** 2)


@dataclass(frozen=True, eq=False)
class ForwardModel:
    """
    Ground truth of the simulator

    Args:
        aTrue (numpy.ndarray): Overt spatial pattern, length C
        rTrue (numpy.ndarray): 3 x L_gen transient responses (onset, short flash, long flash)
        snr (float): Amplitude ratio of the evoked signal to the noise on the peak channel, :code:`inf` disables noise
        noiseModel (str): :code:`white` or :code:`pink`
        conditionGains (dict): Signal gain per condition
        lateralization (float): Weight of the contralateral component of covert patterns, in [0, 1]
        noiseStd (float): Noise standard deviation (volts)
        rateHz (float): Sampling rate of the responses
    """
    aTrue: np.ndarray
    rTrue: np.ndarray
    snr: float
    noiseModel: str = "white"
    conditionGains: Dict[str, float] = field(default_factory=lambda: {"overt": 1.0, "covert": 0.4})
    lateralization: float = 0.5
    noiseStd: float = NOISE_STD
    rateHz: float = EEG_RATE_HZ
    rngSeed: Optional[int] = None

    def __post_init__(self):
        if self.snr < 0:
            raise ValueError("SNR must be non-negative (supplied: {})".format(self.snr))
        if not np.linalg.norm(self.aTrue) > 0:
            raise ValueError("Spatial pattern must be non-zero")
        if self.noiseModel not in NOISE_MODELS:
            raise ValueError("Unknown noise model '{}' (expected one of {})".format(self.noiseModel, NOISE_MODELS))
        if not 0.0 <= self.lateralization <= 1.0:
            raise ValueError("Lateralization must lie within [0, 1] (supplied: {})".format(self.lateralization))
        if np.asarray(self.rTrue).shape[0] != len(EVENT_NAMES):
            raise ValueError("Expected {} transient responses, got {}".format(len(EVENT_NAMES), np.asarray(self.rTrue).shape[0]))
        for condition in CONDITIONS:
            if not 0.0 <= self.conditionGains.get(condition, -1.0) <= 1.0:
                raise ValueError("Gain of condition '{}' must lie within [0, 1]".format(condition))

    @property
    def channels(self) -> int:
        return len(self.aTrue)

    @property
    def lengthSamples(self) -> int:
        return self.rTrue.shape[1]

    @property
    def rVector(self) -> np.ndarray:
        """numpy.ndarray: concatenated responses, matching the structure matrix row order"""
        return self.rTrue.reshape(-1)

    def patternFor(self, condition: str, side: str) -> np.ndarray:
        """
        Spatial pattern of a trial. Overt trials use :code:`aTrue`; covert trials mix it with a broader component over
        the hemisphere contralateral to the cued side
        """
        if condition not in CONDITIONS:
            raise ValueError("Unknown condition '{}'".format(condition))
        if side not in SIDES:
            raise ValueError("Unknown side '{}'".format(side))
        if condition == "overt":
            return self.aTrue
        x = channelPositions(self.channels)
        center = _LATERAL_OFFSET if side == "left" else -_LATERAL_OFFSET
        contra = _gaussian(x, center, _LATERAL_WIDTH) * np.max(np.abs(self.aTrue))
        return (1.0 - self.lateralization) * self.aTrue + self.lateralization * contra

    def withSnr(self, snr: float) -> "ForwardModel":
        return replace(self, snr=snr)

    def toDict(self) -> dict:
        return {
            "a_true": self.aTrue.tolist(),
            "r_true": self.rTrue.tolist(),
            "snr": self.snr if math.isfinite(self.snr) else "inf",
            "noise_model": self.noiseModel,
            "condition_gains": dict(self.conditionGains),
            "lateralization": self.lateralization,
            "noise_std": self.noiseStd,
            "rate_hz": self.rateHz,
            "rng_seed": self.rngSeed,
        }

    @classmethod
    def fromDict(cls, data: dict) -> "ForwardModel":
        return cls(
            np.asarray(data["a_true"], dtype=np.float64),
            np.asarray(data["r_true"], dtype=np.float64),
            float(data["snr"]),
            data["noise_model"],
            dict(data["condition_gains"]),
            float(data["lateralization"]),
            float(data["noise_std"]),
            float(data["rate_hz"]),
            data.get("rng_seed"),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Simulated trials in chronological order with their provenance
    """
    data: np.ndarray
    labels: np.ndarray
    conditions: Tuple[str, ...]
    pair: CodePair
    channelNames: Tuple[str, ...] = ()
    rateHz: float = EEG_RATE_HZ
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.asarray(self.data)
        labels = np.asarray(self.labels).astype(int)
        if data.ndim != 3 or labels.shape != (data.shape[0],) or len(self.conditions) != data.shape[0]:
            raise ValueError("Dataset of shape {} has {} labels and {} conditions".format(
                data.shape, labels.shape, len(self.conditions)))
        names = tuple(self.channelNames) or tuple("ch{}".format(c) for c in range(data.shape[1]))
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "conditions", tuple(self.conditions))
        object.__setattr__(self, "channelNames", names)

    def __len__(self):
        return self.data.shape[0]

    @property
    def nChannels(self) -> int:
        return self.data.shape[1]

    @property
    def nSamples(self) -> int:
        return self.data.shape[2]

    @property
    def condition(self) -> str:
        """str: the single condition of the dataset, or :code:`mixed`"""
        unique = set(self.conditions)
        return unique.pop() if len(unique) == 1 else "mixed"

    def selectCondition(self, condition: str) -> "Dataset":
        indices = np.array([i for i, c in enumerate(self.conditions) if c == condition], dtype=int)
        if indices.size == 0:
            raise ValueError("Dataset holds no trials of condition '{}'".format(condition))
        return replace(self, data=self.data[indices], labels=self.labels[indices],
                       conditions=tuple(self.conditions[i] for i in indices))

    def toTrialSet(self) -> TrialSet:
        return TrialSet(self.data, self.labels, self.condition, self.channelNames, self.rateHz)


def _dampedSinusoids(rng: np.random.Generator, lengthSamples: int, rateHz: float) -> np.ndarray:
    t = np.arange(lengthSamples) / rateHz
    response = np.zeros(lengthSamples)
    for _ in range(int(rng.integers(2, 4))):
        frequency = rng.uniform(5.0, 15.0)
        tau = rng.uniform(0.05, 0.15)
        phase = rng.uniform(0.0, 2 * np.pi)
        amplitude = rng.uniform(0.5, 1.0)
        response += amplitude * np.exp(-t / tau) * np.sin(2 * np.pi * frequency * t + phase)
    return response


def defaultForwardModel(channels: int, lengthS: float = 0.3, rngSeed: int = 0, snr: float = 0.07,
                        noiseModel: str = "white", conditionGains: Dict[str, float] = None,
                        lateralization: float = 0.5, rateHz: float = EEG_RATE_HZ) -> ForwardModel:
    """
    Draws a forward model: a midline-focal pattern with small seeded jitter and one response per event type built
    from 2-3 damped sinusoids (5-15 Hz, decay 0.05-0.15 s)

    Args:
        channels (int): Number of channels, at least 2
        lengthS (float): Length of the generating responses in seconds
        rngSeed (int): Seed of the model
        snr (float): Peak-channel amplitude SNR

    Returns:
        ForwardModel: the model
    """
    if channels < 2:
        raise ValueError("At least 2 channels are required (supplied: {})".format(channels))
    lengthSamples = int(round(lengthS * rateHz))
    if lengthSamples < 1:
        raise ValueError("Response length {} s yields no samples".format(lengthS))
    rng = np.random.default_rng(rngSeed)
    x = channelPositions(channels)
    aTrue = _gaussian(x, 0.0, _FOCAL_WIDTH) + 0.05 * rng.standard_normal(channels)
    rTrue = np.vstack([_dampedSinusoids(rng, lengthSamples, rateHz) for _ in EVENT_NAMES])
    return ForwardModel(aTrue, rTrue, float(snr), noiseModel,
                        dict(conditionGains or {"overt": 1.0, "covert": 0.4}), lateralization, NOISE_STD, rateHz,
                        rngSeed)


def generateNoise(noiseModel: str, shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """
    Unit-variance noise per channel; pink noise is white noise through cascaded first-order sections
    """
    noise = rng.standard_normal(shape)
    if noiseModel == "pink":
        for pole, zero in _PINK_SECTIONS:
            noise = signal.lfilter([1.0, -zero], [1.0, -pole], noise, axis=-1)
        noise /= noise.std(axis=-1, keepdims=True)
    elif noiseModel != "white":
        raise ValueError("Unknown noise model '{}'".format(noiseModel))
    return noise


def evokedSignal(fm: ForwardModel, trial: TrialSpec, structure: StructureMatrix) -> np.ndarray:
    """
    Noise-free C x T signal of a trial, scaled so that the peak channel's RMS equals
    :code:`snr * noiseStd * gain` (:code:`noiseStd * gain` when noise is disabled)

    Args:
        fm (ForwardModel): Forward model
        trial (TrialSpec): Trial to render
        structure (StructureMatrix): Structure matrix of the cued code at the generating length

    Returns:
        numpy.ndarray: C x T signal
    """
    if structure.lengthSamples != fm.lengthSamples:
        raise ValueError("Structure matrix models {} samples, the forward model {}".format(
            structure.lengthSamples, fm.lengthSamples))
    s = predictResponse(structure, fm.rVector)
    pattern = fm.patternFor(trial.condition, trial.cuedSide)
    level = fm.snr if math.isfinite(fm.snr) else 1.0
    norm = np.max(np.abs(pattern)) * np.std(s)
    scale = level * fm.noiseStd * fm.conditionGains[trial.condition] / norm if norm > 0 else 0.0
    return scale * np.outer(pattern, s)


def simulateTrial(fm: ForwardModel, trial: TrialSpec, pair: CodePair, rng: np.random.Generator,
                  durationS: float = TRIAL_S, structures: Dict[int, StructureMatrix] = None) -> np.ndarray:
    """
    Simulates one trial: only the cued side's code contributes an evoked response

    Args:
        fm (ForwardModel): Forward model
        trial (TrialSpec): Trial to simulate
        pair (CodePair): Left and right codes
        rng (numpy.random.Generator): Noise generator
        durationS (float): Trial duration
        structures (dict, Optional): Cached structure matrices per label at the generating length

    Returns:
        numpy.ndarray: C x T float32 trial
    """
    if structures is None:
        structures = structureMatricesForPair(pair, durationS, fm.lengthSamples, fm.rateHz)
    X = evokedSignal(fm, trial, structures[trial.label])
    if math.isfinite(fm.snr):
        X = X + fm.noiseStd * generateNoise(fm.noiseModel, X.shape, rng)
    return X.astype(np.float32)


def simulateDataset(plan: SessionPlan, fm: ForwardModel, pair: CodePair, rngSeed: int = 0,
                    durationS: float = TRIAL_S, nJobs: int = 1) -> Dataset:
    """
    Simulates every trial of the plan in chronological order. Trial :code:`i` draws its noise from
    :code:`default_rng([rngSeed, i])`, so results do not depend on :code:`nJobs`

    Returns:
        Dataset: J trials with labels, conditions and provenance
    """
    trials = [trial for _, _, trial in plan.trials()]
    structures = structureMatricesForPair(pair, durationS, fm.lengthSamples, fm.rateHz)
    data = Parallel(n_jobs=nJobs)(
        delayed(simulateTrial)(fm, trial, pair, np.random.default_rng([rngSeed, index]), durationS, structures)
        for index, trial in enumerate(trials)
    )
    names = tuple("ch{}".format(c) for c in range(fm.channels))
    provenance = {
        "forward_model": fm.toDict(),
        "simulation_seed": rngSeed,
        "plan_seed": plan.rngSeed,
        "runs": [[r, t] for r, t, _ in plan.trials()],
    }
    return Dataset(np.stack(data) if data else np.zeros((0, fm.channels, int(round(durationS * fm.rateHz))), np.float32),
                   np.array([trial.label for trial in trials], dtype=int), tuple(trial.condition for trial in trials),
                   pair, names, fm.rateHz, provenance)


def simulateRawRecording(plan: SessionPlan, fm: ForwardModel, pair: CodePair, rngSeed: int = 0,
                         rawRateHz: float = RAW_RATE_HZ, gapS: float = 2.0, lineNoise: float = 2.0,
                         drift: float = 5.0) -> RawRecording:
    """
    Continuous recording at :code:`rawRateHz`: evoked trial signals (upsampled from the model rate) separated by
    :code:`gapS` seconds, plus noise, 50 Hz line interference and a slow drift. Line and drift amplitudes are given
    in units of :code:`noiseStd`

    Returns:
        RawRecording: recording with onsets, labels and conditions
    """
    ratio = np.gcd(int(rawRateHz), int(fm.rateHz))
    up, down = int(rawRateHz) // ratio, int(fm.rateHz) // ratio
    trials = [trial for _, _, trial in plan.trials()]
    structures = structureMatricesForPair(pair, TRIAL_S, fm.lengthSamples, fm.rateHz)
    trialSamples = int(round(TRIAL_S * rawRateHz))
    gap = int(round(gapS * rawRateHz))
    total = gap + len(trials) * (trialSamples + gap)
    data = np.zeros((fm.channels, total))
    onsets = []
    for index, trial in enumerate(trials):
        onset = gap + index * (trialSamples + gap)
        evoked = signal.resample_poly(evokedSignal(fm, trial, structures[trial.label]), up, down, axis=-1)
        data[:, onset:onset + trialSamples] += evoked[:, :trialSamples]
        onsets.append(onset)

    rng = np.random.default_rng(rngSeed)
    t = np.arange(total) / rawRateHz
    if math.isfinite(fm.snr):
        data += fm.noiseStd * generateNoise(fm.noiseModel, data.shape, rng)
    phases = rng.uniform(0, 2 * np.pi, size=(fm.channels, 2))
    data += lineNoise * fm.noiseStd * np.sin(2 * np.pi * LINE_FREQUENCY_HZ * t + phases[:, :1])
    data += drift * fm.noiseStd * np.sin(2 * np.pi * 0.05 * t + phases[:, 1:])
    return RawRecording(data.astype(np.float32), rawRateHz, tuple(onsets),
                        tuple("ch{}".format(c) for c in range(fm.channels)),
                        tuple(trial.label for trial in trials), tuple(trial.condition for trial in trials))
