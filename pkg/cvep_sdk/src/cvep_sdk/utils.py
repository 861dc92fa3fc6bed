import copy
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np


def pearson(a, b):
    """
    Pearson correlation of two vectors - https://en.wikipedia.org/wiki/Pearson_correlation_coefficient

    Returns :code:`0.0` if either vector is constant
    """
    a = np.asarray(a, dtype=np.float64) - np.mean(a)
    b = np.asarray(b, dtype=np.float64) - np.mean(b)
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    return float(np.dot(a, b) / denom) if denom > 0 else 0.0


def mergeLayers(*layers: dict) -> dict:
    """
    Layers configuration documents, later layers win. Nested dictionaries are merged key by key, every other value
    is replaced. Inputs are left untouched.

    .. code-block:: python

        mergeLayers({'condition_gains': {'overt': 1.0, 'covert': 0.4}}, {'condition_gains': {'covert': 0.6}})
        # {'condition_gains': {'overt': 1.0, 'covert': 0.6}}

    Returns:
        dict: new merged document
    """
    result = {}
    for layer in layers:
        for key, value in layer.items():
            if isinstance(value, dict) and isinstance(result.get(key), dict):
                result[key] = mergeLayers(result[key], value)
            elif isinstance(value, dict):
                result[key] = mergeLayers(value)
            else:
                result[key] = copy.deepcopy(value)
    return result


def showProgress(done: int, total: int, label: str = ""):
    """
    Redraws a single-line progress indicator on stdout, the caller ends the line once the loop finishes

    Args:
        done (int): Finished steps
        total (int): Number of steps
        label (str): Text in front of the bar
    """
    width = 40
    filled = int(width * done / total) if total else width
    sys.stdout.write("\r{}{:>4}/{:<4} |{}{}|".format(label + " " if label else "", done, total, "#" * filled,
                                                     "." * (width - filled)))
    sys.stdout.flush()


def writeCsv(path: Path, header, rows):
    """
    Writes comma separated rows, numbers printed with :code:`repr` precision so the file is byte-stable for identical
    inputs

    Args:
        path (pathlib.Path): Output file
        header (list): Column names
        rows (list): Iterable of row sequences
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_formatCell(value) for value in row] for row in rows)


def _formatCell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def readCsv(path: Path):
    """
    Reads a file written by :func:`writeCsv`

    Returns:
        tuple: header list and list of row lists (strings)
    """
    with Path(path).open(newline="") as f:
        lines = [row for row in csv.reader(f) if row]
    if not lines:
        raise ValueError("CSV file {} is empty".format(path))
    return lines[0], lines[1:]


def sha256File(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256Json(data) -> str:
    """Hash of a JSON-serializable document, independent of key order"""
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()


def writeJson(path: Path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(data, f, indent=2)


def readJson(path: Path):
    path = Path(path)
    if not path.exists():
        raise ValueError("Path {} does not exist!".format(path))
    with path.open() as f:
        return json.load(f)
