"""
Event time-series of a modulated code and the lag-expanded structure matrices of the reconvolution model.

The evoked response to a trial is modeled as :code:`r^T M`, the superposition of one transient response per event
type (trial onset, short flash, long flash) placed at every event occurrence.
"""
from dataclasses import dataclass
import math
from pathlib import Path
from typing import Dict

import numpy as np
from scipy.linalg import toeplitz

from .codes import BitSequence, CodePair, maxFlashLength
from .utils import writeCsv

EVENT_NAMES = ("trial_onset", "short_flash", "long_flash")
EEG_RATE_HZ = 120


@dataclass(frozen=True, eq=False)
class EventMatrix:
    """
    Binary onset series, one row per event type in :data:`EVENT_NAMES`
    """
    rows: np.ndarray
    rateHz: float
    codeName: str

    @property
    def nSamples(self) -> int:
        return self.rows.shape[1]

    def row(self, event) -> np.ndarray:
        index = EVENT_NAMES.index(event) if isinstance(event, str) else int(event)
        return self.rows[index]


@dataclass(frozen=True, eq=False)
class StructureMatrix:
    """
    Row :code:`e * lengthSamples + l` is event row :code:`e` delayed by :code:`l` samples
    """
    data: np.ndarray
    lengthSamples: int
    rateHz: float
    codeName: str

    @property
    def nEvents(self) -> int:
        return self.data.shape[0] // self.lengthSamples

    @property
    def nSamples(self) -> int:
        return self.data.shape[1]


def deriveEvents(code: BitSequence, durationS: float, eegRateHz: float = EEG_RATE_HZ) -> EventMatrix:
    """
    Converts a modulated code into event onsets at the EEG rate. The code repeats cyclically for the trial duration;
    every run of ones is time-stamped at its first sample and classified by its length (1 bit: short, 2 bits: long).
    A run cut by the end of the trial is classified by its full length, a run in progress at the first sample starts
    there.

    Args:
        code (BitSequence): Modulated code
        durationS (float): Trial duration in seconds
        eegRateHz (float): Sampling rate of the EEG

    Returns:
        EventMatrix: 3 x T binary matrix

    Raises:
        ValueError: if the code has runs longer than 2 bits or the rates are incompatible
    """
    samplesPerBit = eegRateHz / code.rateHz
    if samplesPerBit < 1 or not float(samplesPerBit).is_integer():
        raise ValueError("EEG rate {} Hz is not an integer multiple of the code rate {} Hz".format(eegRateHz, code.rateHz))
    samplesPerBit = int(samplesPerBit)
    nSamples = int(round(durationS * eegRateHz))
    if nSamples < 1:
        raise ValueError("Trial duration {} s yields no samples".format(durationS))

    longest = maxFlashLength(code)
    if longest > 2:
        raise ValueError("Code '{}' contains a flash of {} bits".format(code.name, longest))
    bits = code.array
    nBits = math.ceil(nSamples / samplesPerBit)
    # one extra code period so that runs cut by the trial end keep their full length
    stream = np.resize(bits, nBits + len(bits)).astype(int)
    edges = np.diff(np.concatenate(([0], stream, [0])))
    starts = np.flatnonzero(edges == 1)
    lengths = np.flatnonzero(edges == -1) - starts

    rows = np.zeros((len(EVENT_NAMES), nSamples), dtype=np.uint8)
    rows[0, 0] = 1
    for start, length in zip(starts, lengths):
        if start >= nBits:
            break
        column = start * samplesPerBit
        if column < nSamples:
            rows[length, column] = 1
    return EventMatrix(rows, eegRateHz, code.name)


def buildStructureMatrix(events: EventMatrix, lengthSamples: int) -> StructureMatrix:
    """
    Stacks every event row at lags :code:`0..lengthSamples-1` (entries delayed past the trial end are dropped)

    Args:
        events (EventMatrix): Event onsets
        lengthSamples (int): Modeled transient response length L

    Returns:
        StructureMatrix: :code:`3L x T` matrix
    """
    nSamples = events.nSamples
    if not 1 <= lengthSamples <= nSamples:
        raise ValueError("Response length {} samples out of range 1..{}".format(lengthSamples, nSamples))
    blocks = []
    for row in events.rows.astype(np.float64):
        firstColumn = np.zeros(lengthSamples)
        firstColumn[0] = row[0]
        blocks.append(toeplitz(firstColumn, row))
    return StructureMatrix(np.vstack(blocks), int(lengthSamples), events.rateHz, events.codeName)


def structureMatricesForPair(pair: CodePair, durationS: float, lengthSamples: int,
                             eegRateHz: float = EEG_RATE_HZ) -> Dict[int, StructureMatrix]:
    """
    Returns:
        dict: structure matrix of the left (0) and right (1) code
    """
    return {
        label: buildStructureMatrix(deriveEvents(pair.byLabel(label), durationS, eegRateHz), lengthSamples)
        for label in (0, 1)
    }


def predictResponse(structure: StructureMatrix, r: np.ndarray) -> np.ndarray:
    """
    Template :code:`r^T M` of a response vector

    Args:
        structure (StructureMatrix): Structure matrix of the code
        r (numpy.ndarray): Concatenated per-event responses, length :code:`3L`

    Returns:
        numpy.ndarray: time series of length T
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (structure.data.shape[0],):
        raise ValueError("Response vector of shape {} does not match {} structure rows".format(r.shape, structure.data.shape[0]))
    return r @ structure.data


def writeEventsCsv(events: EventMatrix, path: Path):
    writeCsv(path, ("sample",) + EVENT_NAMES, ((t,) + tuple(events.rows[:, t]) for t in range(events.nSamples)))


def writeStructureCsv(structure: StructureMatrix, path: Path):
    """
    One row per structure matrix row, labelled :code:`<event>@<lag>`
    """
    rows = []
    for index, values in enumerate(structure.data.astype(np.uint8)):
        event, lag = divmod(index, structure.lengthSamples)
        rows.append(("{}@{}".format(EVENT_NAMES[event], lag),) + tuple(values))
    writeCsv(path, ["row"] + [str(t) for t in range(structure.nSamples)], rows)
