from pathlib import Path

import numpy as np

from ..codes import CodePair
from ..preprocess import RawRecording
from ..simulator import Dataset
from ..utils import readJson, writeJson

_DTYPE = np.dtype("<f4")


class DatasetManager:
    """
    Manager class that handles dataset directories. A dataset directory contains :code:`metadata.json` and a binary
    file of little-endian 32-bit floats: :code:`trials.bin` (trial-major, then channel-major, then sample) for epoched
    datasets, :code:`samples.bin` (channel-major) for raw recordings
    """

    METADATA = "metadata.json"
    TRIALS = "trials.bin"
    SAMPLES = "samples.bin"

    def __init__(self, path: Path):
        """
        Args:
            path (pathlib.Path): Dataset directory
        """
        self.path = Path(path)

    @property
    def kind(self):
        """
        Returns:
            str: :code:`epochs` or :code:`raw`, as stored in the metadata
        """
        return self._readMetadata().get("kind", "epochs")

    def _readMetadata(self):
        metadataPath = self.path / self.METADATA
        if not metadataPath.exists():
            raise ValueError("{} is not a dataset directory (missing {})".format(self.path, self.METADATA))
        return readJson(metadataPath)

    def _readValues(self, name, count):
        binPath = self.path / name
        if not binPath.exists():
            raise ValueError("Dataset {} is missing {}".format(self.path, name))
        values = np.fromfile(binPath, dtype=_DTYPE)
        if values.size != count:
            raise ValueError("{} holds {} values, metadata expects {}".format(binPath, values.size, count))
        return values

    def save(self, dataset: Dataset):
        """
        Writes an epoched dataset; values are stored as float32 so saving a float32 dataset round-trips exactly

        Args:
            dataset (cvep_sdk.simulator.Dataset): Dataset to store
        """
        self.path.mkdir(parents=True, exist_ok=True)
        J, C, T = dataset.data.shape
        writeJson(self.path / self.METADATA, {
            "kind": "epochs",
            "rate_hz": dataset.rateHz,
            "trials": J,
            "channels": C,
            "samples": T,
            "channel_names": list(dataset.channelNames),
            "labels": dataset.labels.tolist(),
            "conditions": list(dataset.conditions),
            "code_names": list(dataset.pair.names),
            "pair": dataset.pair.toDict(),
            "provenance": dataset.provenance,
        })
        np.ascontiguousarray(dataset.data, dtype=_DTYPE).tofile(self.path / self.TRIALS)

    def load(self) -> Dataset:
        metadata = self._readMetadata()
        if metadata.get("kind", "epochs") != "epochs":
            raise ValueError("{} holds a raw recording, preprocess it first".format(self.path))
        shape = (int(metadata["trials"]), int(metadata["channels"]), int(metadata["samples"]))
        data = self._readValues(self.TRIALS, int(np.prod(shape))).reshape(shape)
        return Dataset(data.astype(np.float32), np.asarray(metadata["labels"], dtype=int),
                       tuple(metadata["conditions"]), CodePair.fromDict(metadata["pair"]),
                       tuple(metadata["channel_names"]), float(metadata["rate_hz"]), metadata.get("provenance", {}))

    def saveRaw(self, raw: RawRecording, pair: CodePair, provenance: dict = None):
        """
        Writes a continuous recording together with the code pair needed to decode it later

        Args:
            raw (cvep_sdk.preprocess.RawRecording): Recording to store
            pair (cvep_sdk.codes.CodePair): Codes flashed during the recording
            provenance (dict, Optional): Simulation parameters
        """
        self.path.mkdir(parents=True, exist_ok=True)
        C, N = raw.data.shape
        writeJson(self.path / self.METADATA, {
            "kind": "raw",
            "rate_hz": raw.rateHz,
            "channels": C,
            "samples": N,
            "channel_names": list(raw.channelNames),
            "onsets": list(raw.onsets),
            "labels": list(raw.labels),
            "conditions": list(raw.conditions),
            "pair": pair.toDict(),
            "provenance": provenance or {},
        })
        np.ascontiguousarray(raw.data, dtype=_DTYPE).tofile(self.path / self.SAMPLES)

    def loadRaw(self):
        """
        Returns:
            tuple: :class:`RawRecording`, :class:`CodePair` and the provenance dict
        """
        metadata = self._readMetadata()
        if metadata.get("kind") != "raw":
            raise ValueError("{} does not hold a raw recording".format(self.path))
        shape = (int(metadata["channels"]), int(metadata["samples"]))
        data = self._readValues(self.SAMPLES, shape[0] * shape[1]).reshape(shape)
        raw = RawRecording(data.astype(np.float32), float(metadata["rate_hz"]), tuple(metadata["onsets"]),
                           tuple(metadata["channel_names"]), tuple(metadata["labels"]), tuple(metadata["conditions"]))
        return raw, CodePair.fromDict(metadata["pair"]), metadata.get("provenance", {})
