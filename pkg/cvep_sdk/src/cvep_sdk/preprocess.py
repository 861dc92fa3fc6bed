"""
EEG conditioning of raw 512 Hz recordings: notch and bandpass filtering, epoching around stimulus onsets, polyphase
resampling to the decoder rate and removal of the pre-stimulus interval.
"""
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np
from scipy import signal

RAW_RATE_HZ = 512
PRE_STIMULUS_S = 0.5
TRIAL_S = 20.0
LINE_FREQUENCY_HZ = 50.0


@dataclass(frozen=True, eq=False)
class RawRecording:
    """
    Continuous multichannel recording with stimulus onsets

    Args:
        data (numpy.ndarray): C x N samples (volts)
        rateHz (float): Sampling rate
        onsets (tuple): Sample index of every trial onset, strictly increasing
        channelNames (tuple): C channel names
        labels (tuple, Optional): Cued side label of every onset
        conditions (tuple, Optional): Condition tag of every onset
    """
    data: np.ndarray
    rateHz: float = RAW_RATE_HZ
    onsets: Tuple[int, ...] = ()
    channelNames: Tuple[str, ...] = ()
    labels: Tuple[int, ...] = ()
    conditions: Tuple[str, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError("Recording must be C x N (supplied shape: {})".format(data.shape))
        onsets = tuple(int(o) for o in self.onsets)
        if any(b <= a for a, b in zip(onsets, onsets[1:])):
            raise ValueError("Stimulus onsets must be strictly increasing")
        trialSamples = int(round(TRIAL_S * self.rateHz))
        if onsets and (onsets[0] < 0 or onsets[-1] + trialSamples > data.shape[1]):
            raise ValueError("Stimulus onsets must leave {} s of recording after every onset".format(TRIAL_S))
        for name, values in (("labels", self.labels), ("conditions", self.conditions)):
            if values and len(values) != len(onsets):
                raise ValueError("Got {} {} for {} onsets".format(len(values), name, len(onsets)))
        names = tuple(self.channelNames) or tuple("ch{}".format(c) for c in range(data.shape[0]))
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "onsets", onsets)
        object.__setattr__(self, "channelNames", names)
        object.__setattr__(self, "labels", tuple(int(label) for label in self.labels))
        object.__setattr__(self, "conditions", tuple(self.conditions))

    @property
    def nyquist(self) -> float:
        return self.rateHz / 2


@dataclass(frozen=True)
class FilterSpec:
    """
    IIR filter definition. :code:`notch` uses :code:`frequencies[0]` and :code:`quality`, :code:`bandpass` uses the
    two cutoffs of :code:`frequencies` and :code:`order`
    """
    kind: str
    frequencies: Tuple[float, ...]
    order: int = 4
    quality: float = 30.0
    family: str = "butterworth"

    def design(self, rateHz: float) -> np.ndarray:
        """
        Designs second-order sections for the given sampling rate

        Returns:
            numpy.ndarray: sos coefficients

        Raises:
            ValueError: on unknown kinds or frequencies outside :code:`(0, rateHz / 2)`
        """
        nyquist = rateHz / 2
        if any(f <= 0 or f >= nyquist for f in self.frequencies):
            raise ValueError("Filter frequencies {} must lie within (0, {}) Hz".format(self.frequencies, nyquist))
        if self.kind == "notch":
            b, a = signal.iirnotch(self.frequencies[0], self.quality, fs=rateHz)
            return signal.tf2sos(b, a)
        if self.kind == "bandpass":
            if len(self.frequencies) != 2 or self.frequencies[0] >= self.frequencies[1]:
                raise ValueError("Bandpass needs increasing low and high cutoffs (supplied: {})".format(self.frequencies))
            if self.family != "butterworth":
                raise ValueError("Unsupported filter family '{}'".format(self.family))
            return signal.butter(self.order, list(self.frequencies), btype="bandpass", output="sos", fs=rateHz)
        raise ValueError("Unknown filter kind '{}'".format(self.kind))

    def toDict(self) -> dict:
        return {"kind": self.kind, "frequencies": list(self.frequencies), "order": self.order,
                "quality": self.quality, "family": self.family}


NOTCH_50 = FilterSpec("notch", (LINE_FREQUENCY_HZ,))
BANDPASS_1_40 = FilterSpec("bandpass", (1.0, 40.0))


def _checkStable(sos: np.ndarray, spec: FilterSpec):
    _, poles, _ = signal.sos2zpk(sos)
    if poles.size and np.max(np.abs(poles)) >= 1.0:
        raise RuntimeError("Filter {} is unstable (max pole radius {:.6f})".format(spec, np.max(np.abs(poles))))


def applyFilter(x: RawRecording, spec: FilterSpec) -> RawRecording:
    """
    Zero-phase (forward-backward) filtering of every channel

    Args:
        x (RawRecording): Input recording
        spec (FilterSpec): Filter to apply

    Returns:
        RawRecording: filtered copy of the same length

    Raises:
        RuntimeError: if the designed filter has poles on or outside the unit circle
    """
    sos = spec.design(x.rateHz)
    _checkStable(sos, spec)
    filtered = signal.sosfiltfilt(sos, np.asarray(x.data, dtype=np.float64), axis=-1)
    return replace(x, data=filtered)


def epochTrials(x: RawRecording, preS: float = PRE_STIMULUS_S, postS: float = TRIAL_S) -> List[np.ndarray]:
    pre = int(round(preS * x.rateHz))
    post = int(round(postS * x.rateHz))
    epochs = []
    for onset in x.onsets:
        if onset - pre < 0 or onset + post > x.data.shape[1]:
            raise ValueError("Onset at sample {} is too close to the recording edge ({} pre / {} post samples needed)".format(
                onset, pre, post))
        epochs.append(x.data[:, onset - pre:onset + post])
    return epochs


def resampleAndTrim(epoch: np.ndarray, rateHz: float = RAW_RATE_HZ, targetRateHz: float = 120,
                    preS: float = PRE_STIMULUS_S, postS: float = TRIAL_S) -> np.ndarray:
    """
    Polyphase resampling of one epoch by the reduced ratio :code:`targetRateHz / rateHz` (15/64 by default), then
    removal of the pre-stimulus samples

    Args:
        epoch (numpy.ndarray): C x samples epoch starting :code:`preS` before the onset
        rateHz (float): Rate of the epoch
        targetRateHz (float): Output rate
        preS (float): Pre-stimulus duration contained in the epoch
        postS (float): Post-stimulus duration contained in the epoch

    Returns:
        numpy.ndarray: C x :code:`postS * targetRateHz` array
    """
    epoch = np.asarray(epoch, dtype=np.float64)
    expected = int(round((preS + postS) * rateHz))
    if epoch.ndim != 2 or epoch.shape[1] != expected:
        raise ValueError("Epoch of shape {} does not span {} samples".format(epoch.shape, expected))
    ratio = Fraction(targetRateHz).limit_denominator() / Fraction(rateHz).limit_denominator()
    resampled = signal.resample_poly(epoch, ratio.numerator, ratio.denominator, axis=-1, padtype="line")
    trim = int(round(preS * targetRateHz))
    out = resampled[:, trim:trim + int(round(postS * targetRateHz))]
    if out.shape[1] != int(round(postS * targetRateHz)):
        raise ValueError("Resampled epoch has {} samples after trimming, expected {}".format(
            out.shape[1], int(round(postS * targetRateHz))))
    return out


def preprocessRecording(raw: RawRecording, filters: Sequence[FilterSpec] = (NOTCH_50, BANDPASS_1_40),
                        targetRateHz: float = 120) -> np.ndarray:
    """
    Notch, bandpass, epoch and resample a whole recording

    Returns:
        numpy.ndarray: J x C x T epochs at :code:`targetRateHz`
    """
    for spec in filters:
        raw = applyFilter(raw, spec)
    epochs = [resampleAndTrim(epoch, raw.rateHz, targetRateHz) for epoch in epochTrials(raw)]
    if not epochs:
        return np.zeros((0, raw.data.shape[0], int(round(TRIAL_S * targetRateHz))))
    return np.stack(epochs)
