"""
Pseudo-random noise-codes: m-sequences, Gold codes, the run-length limiting modulation and the left/right code pair.

All correlations use the +-1 encoding (0 -> -1, 1 -> +1).
"""
from dataclasses import dataclass
import json
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

#: dict: Preferred pairs of feedback tap sets per LFSR degree. Each pair is re-verified by :func:`goldCodeSet`
PREFERRED_PAIRS = {
    5: ((5, 2), (5, 4, 3, 2)),
    6: ((6, 1), (6, 5, 2, 1)),
    7: ((7, 3), (7, 3, 2, 1)),
}
#: int: Presentation rate of the modulated codes (one bit per 60 Hz frame)
PRESENTATION_RATE = 60
#: int: Circular shift between the left and the right code, in bits
DEFAULT_SHIFT = 61


@dataclass(frozen=True)
class BitSequence:
    """
    Ordered binary sequence with its presentation rate.

    Args:
        bits (tuple): Sequence of 0/1 integers
        rateHz (float): Presentation rate of the bits
        name (str): Identifier of the sequence
    """
    bits: Tuple[int, ...]
    rateHz: float
    name: str = ""

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) == 0:
            raise ValueError("Bit sequence '{}' is empty".format(self.name))
        if any(b not in (0, 1) for b in bits):
            raise ValueError("Bit sequence '{}' contains values other than 0 and 1".format(self.name))
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return len(self.bits)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.uint8)

    @property
    def bipolar(self) -> np.ndarray:
        """numpy.ndarray: bits in +-1 encoding"""
        return 2.0 * self.array - 1.0

    def toString(self) -> str:
        return "".join(map(str, self.bits))

    def rolled(self, shift: int, name: str = None) -> "BitSequence":
        """
        Circularly shifts the sequence to the right (:code:`out[i] = bits[i - shift]`)
        """
        return BitSequence(tuple(np.roll(self.array, shift)), self.rateHz, name if name is not None else self.name)

    def toDict(self) -> dict:
        return {"name": self.name, "rate_hz": self.rateHz, "bits": self.toString()}

    @classmethod
    def fromString(cls, bits: str, rateHz: float, name: str = "") -> "BitSequence":
        return cls(tuple(int(c) for c in bits), rateHz, name)

    @classmethod
    def fromDict(cls, data: dict) -> "BitSequence":
        return cls.fromString(data["bits"], data["rate_hz"], data.get("name", ""))


@dataclass(frozen=True)
class LfsrSpec:
    """
    Fibonacci linear feedback shift register. The feedback bit is the XOR of the register cells listed in :code:`taps`
    (1-indexed), the output is the last cell.

    Args:
        degree (int): Register length, at least 2
        taps (tuple): Tap positions, must contain :code:`degree`
        seed (tuple, Optional): Initial register content, defaults to all ones
    """
    degree: int
    taps: Tuple[int, ...]
    seed: Tuple[int, ...] = None

    def __post_init__(self):
        if self.degree < 2:
            raise ValueError("LFSR degree must be at least 2 (supplied: {})".format(self.degree))
        taps = tuple(sorted(set(int(t) for t in self.taps), reverse=True))
        if any(t < 1 or t > self.degree for t in taps):
            raise ValueError("Taps {} must lie within 1..{}".format(taps, self.degree))
        if self.degree not in taps:
            raise ValueError("Taps {} must include the register degree {}".format(taps, self.degree))
        seed = (1,) * self.degree if self.seed is None else tuple(int(s) for s in self.seed)
        if len(seed) != self.degree or any(s not in (0, 1) for s in seed):
            raise ValueError("Seed {} must be {} binary values".format(seed, self.degree))
        if not any(seed):
            raise ValueError("LFSR seed must not be all zeros (the all-zero state is a fixed point)")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "seed", seed)


@dataclass(frozen=True)
class CodePair:
    """
    Left code and its circularly shifted copy used on the right side.
    """
    left: BitSequence
    right: BitSequence
    shiftBits: int = DEFAULT_SHIFT

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise ValueError("Left and right code lengths differ ({} vs {})".format(len(self.left), len(self.right)))
        if self.right.bits != self.left.rolled(self.shiftBits).bits:
            raise ValueError("Right code is not the left code shifted by {} bits".format(self.shiftBits))
        for code in (self.left, self.right):
            if maxFlashLength(code) > 2:
                raise ValueError("Code '{}' contains a flash longer than 2 bits".format(code.name))

    def byLabel(self, label: int) -> BitSequence:
        """Returns the code of label 0 (left) or 1 (right)"""
        return self.left if int(label) == 0 else self.right

    @property
    def names(self) -> Tuple[str, str]:
        return self.left.name, self.right.name

    def toDict(self) -> dict:
        return {"left": self.left.toDict(), "right": self.right.toDict(), "shift_bits": self.shiftBits}

    @classmethod
    def fromDict(cls, data: dict) -> "CodePair":
        return cls(BitSequence.fromDict(data["left"]), BitSequence.fromDict(data["right"]), int(data["shift_bits"]))


def lfsrMSequence(spec: LfsrSpec, name: str = None) -> BitSequence:
    """
    Runs the shift register over one full period and returns the maximal-length sequence

    Args:
        spec (LfsrSpec): Register definition
        name (str, Optional): Name of the produced sequence

    Returns:
        BitSequence: m-sequence of length :code:`2^degree - 1`

    Raises:
        RuntimeError: if the register state repeats early, i.e. the feedback polynomial is not primitive
    """
    n = spec.degree
    period = 2 ** n - 1
    taps = [t - 1 for t in spec.taps]
    register = list(spec.seed)
    out = []
    for k in range(period):
        if k > 0 and tuple(register) == spec.seed:
            raise RuntimeError("Taps {} are not primitive: register period is {} instead of {}".format(spec.taps, k, period))
        out.append(register[-1])
        feedback = sum(register[t] for t in taps) % 2
        register = [feedback] + register[:-1]
    if tuple(register) != spec.seed:
        raise RuntimeError("Taps {} do not produce a periodic sequence of length {}".format(spec.taps, period))
    return BitSequence(tuple(out), PRESENTATION_RATE / 2, name or "mseq_{}".format("_".join(map(str, spec.taps))))


def crossCorrelationSpectrum(a: BitSequence, b: BitSequence) -> np.ndarray:
    """
    Unnormalized circular cross-correlation of two +-1 encoded sequences at every lag (FFT based)

    Returns:
        numpy.ndarray: integer valued array, element :code:`k` equals :code:`sum_i a[i] * b[i + k]`
    """
    if len(a) != len(b):
        raise ValueError("Sequence lengths differ ({} vs {})".format(len(a), len(b)))
    fa = np.fft.fft(a.bipolar)
    fb = np.fft.fft(b.bipolar)
    return np.rint(np.real(np.fft.ifft(np.conj(fa) * fb))).astype(int)


def goldBound(degree: int) -> int:
    """Peak cross-correlation :code:`t(n)` of a Gold family of the given degree"""
    return 2 ** ((degree + 2) // 2) + 1


def goldCodeSet(specA: LfsrSpec, specB: LfsrSpec) -> List[BitSequence]:
    """
    Builds the Gold family of a preferred pair: both m-sequences followed by :code:`a XOR roll(b, k)` for every shift
    :code:`k`

    Args:
        specA (LfsrSpec): First register of the preferred pair
        specB (LfsrSpec): Second register of the preferred pair

    Returns:
        list: :code:`2^n + 1` codes of length :code:`2^n - 1`

    Raises:
        ValueError: if the registers are identical or of different degree
        RuntimeError: if the cross-correlation of the pair is not three-valued
    """
    if specA.degree != specB.degree:
        raise ValueError("Preferred pair registers must share the degree ({} vs {})".format(specA.degree, specB.degree))
    if specA.taps == specB.taps:
        raise ValueError("Degenerate pair: both registers use taps {}".format(specA.taps))
    a = lfsrMSequence(specA)
    b = lfsrMSequence(specB)
    n = specA.degree
    t = goldBound(n)
    spectrum = set(crossCorrelationSpectrum(a, b).tolist())
    if not spectrum <= {-t, -1, t - 2}:
        raise RuntimeError("Taps {} and {} are not a preferred pair: cross-correlation values {} are not within {}".format(
            specA.taps, specB.taps, sorted(spectrum), [-t, -1, t - 2]))
    codes = [BitSequence(a.bits, a.rateHz, "gold00"), BitSequence(b.bits, b.rateHz, "gold01")]
    for k in range(len(a)):
        bits = np.bitwise_xor(a.array, np.roll(b.array, k))
        codes.append(BitSequence(tuple(bits), a.rateHz, "gold{:02d}".format(k + 2)))
    return codes


def defaultGoldCodeSet(degree: int = 6) -> List[BitSequence]:
    if degree not in PREFERRED_PAIRS:
        raise ValueError("No preferred pair known for degree {} (available: {})".format(degree, sorted(PREFERRED_PAIRS)))
    tapsA, tapsB = PREFERRED_PAIRS[degree]
    return goldCodeSet(LfsrSpec(degree, tapsA), LfsrSpec(degree, tapsB))


def modulate(code: BitSequence) -> BitSequence:
    """
    Repeats every bit twice and XORs the stream with the clock 0,1,0,1,... so that 0 -> '01' and 1 -> '10'. The result
    only contains short ('010') and long ('0110') flashes.

    Args:
        code (BitSequence): Source code

    Returns:
        BitSequence: Code of twice the length, at twice the rate
    """
    if len(code) == 0:
        raise ValueError("Cannot modulate an empty code")
    doubled = np.repeat(code.array, 2)
    clock = np.tile(np.array([0, 1], dtype=np.uint8), len(code))
    return BitSequence(tuple(np.bitwise_xor(doubled, clock)), code.rateHz * 2, code.name)


def demodulate(code: BitSequence) -> BitSequence:
    """
    Inverse of :func:`modulate`

    Raises:
        ValueError: if the stream has odd length or a bit pair other than '01' / '10'
    """
    bits = code.array
    if len(bits) % 2:
        raise ValueError("Modulated code '{}' has odd length {}".format(code.name, len(bits)))
    pairs = bits.reshape(-1, 2)
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise ValueError("Code '{}' is not a modulated code".format(code.name))
    return BitSequence(tuple(pairs[:, 0]), code.rateHz / 2, code.name)


def flashRuns(code: BitSequence, cyclic: bool = True) -> List[Tuple[int, int]]:
    """
    Lists the runs of ones as :code:`(start, length)` tuples. With :code:`cyclic`, a run wrapping around the end of the
    code is reported once, starting at its position near the end.
    """
    bits = code.array
    n = len(bits)
    if not bits.any():
        return []
    if bits.all():
        return [(0, n)]
    offset = 0
    if cyclic:
        # start scanning right after a zero so no run is split by the boundary
        offset = int(np.flatnonzero(bits == 0)[-1]) + 1
    rotated = np.roll(bits, -offset)
    edges = np.diff(np.concatenate(([0], rotated.astype(int), [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return sorted(((int(s) + offset) % n, int(e - s)) for s, e in zip(starts, stops))


def maxFlashLength(code: BitSequence) -> int:
    runs = flashRuns(code)
    return max((length for _, length in runs), default=0)


def circularCorrelation(a: BitSequence, b: BitSequence, lag: int) -> float:
    """
    Correlation of +-1 encoded :code:`a` with :code:`b` rotated by :code:`lag`, i.e. :code:`mean_i a[i] * b[i + lag]`.
    For +-1 sequences this is the normalized correlation used for m-sequences and Gold codes (autocorrelation 1 at lag
    0, -1/N off-peak for an m-sequence).

    Args:
        a (BitSequence): First sequence
        b (BitSequence): Second sequence, same length
        lag (int): Rotation of :code:`b`

    Returns:
        float: value in [-1, 1]
    """
    if len(a) != len(b):
        raise ValueError("Sequence lengths differ ({} vs {})".format(len(a), len(b)))
    return float(np.mean(a.bipolar * np.roll(b.bipolar, -lag)))


def selectCodePair(codes: Sequence[BitSequence], shiftBits: int = DEFAULT_SHIFT) -> CodePair:
    """
    Picks the left code as the candidate whose autocorrelation at :code:`shiftBits` is closest to zero (lowest index on
    ties); the right code is the left code shifted by :code:`shiftBits`

    Args:
        codes (list): Modulated candidate codes
        shiftBits (int): Phase shift between the sides

    Returns:
        CodePair: Selected pair

    Raises:
        ValueError: if no candidates are given or the shift is degenerate
    """
    if len(codes) == 0:
        raise ValueError("No candidate codes to select from")
    length = len(codes[0])
    if not 0 < shiftBits < length:
        raise ValueError("Shift of {} bits is degenerate for codes of length {} (must be within 1..{})".format(
            shiftBits, length, length - 1))
    magnitudes = np.array([abs(circularCorrelation(code, code, shiftBits)) for code in codes])
    best = int(np.argmin(magnitudes))
    left = codes[best]
    right = left.rolled(shiftBits, name="{}_shift{}".format(left.name, shiftBits))
    return CodePair(left, right, shiftBits)


def defaultCodePair(degree: int = 6, shiftBits: int = DEFAULT_SHIFT) -> CodePair:
    """
    Convenience helper: modulated default Gold family of the given degree and its selected pair
    """
    return selectCodePair([modulate(code) for code in defaultGoldCodeSet(degree)], shiftBits)


def verifyCodes(gold: Sequence[BitSequence], modulated: Sequence[BitSequence] = (), pair: CodePair = None) -> Dict:
    """
    Checks a code document and returns a report with one boolean per property and an overall :code:`ok` flag

    Args:
        gold (list): Unmodulated Gold family
        modulated (list, Optional): Modulated codes, expected to demodulate to :code:`gold`
        pair (CodePair, Optional): Selected pair

    Returns:
        dict: verification report
    """
    report = {}
    length = len(gold[0]) if gold else 0
    degree = int(round(np.log2(length + 1))) if length else 0
    report["family_size"] = len(gold)
    report["family_size_ok"] = length > 0 and len(gold) == 2 ** degree + 1 and all(len(c) == length for c in gold)
    t = goldBound(degree)
    allowed = {-t, -1, t - 2}
    values = set()
    for i in range(len(gold)):
        for j in range(i + 1, len(gold)):
            values |= set(crossCorrelationSpectrum(gold[i], gold[j]).tolist())
    report["cross_correlation_values"] = sorted(values)
    report["three_valued"] = bool(values) and values <= allowed
    cyclicKeys = {np.roll(c.array, -k).tobytes() for c in gold for k in range(length)} if gold else set()
    report["cyclically_distinct"] = len(cyclicKeys) == len(gold) * length
    if modulated:
        report["modulated_lengths_ok"] = all(len(m) == 2 * length for m in modulated)
        report["no_long_runs"] = all(maxFlashLength(m) <= 2 for m in modulated)
        try:
            report["demodulates_to_gold"] = [demodulate(m).bits for m in modulated] == [g.bits for g in gold]
        except ValueError:
            report["demodulates_to_gold"] = False
    if pair is not None:
        report["pair_shift_ok"] = pair.right.bits == pair.left.rolled(pair.shiftBits).bits
        report["pair_correlation"] = circularCorrelation(pair.left, pair.right, 0)
    report["ok"] = all(v for k, v in report.items() if k.endswith("_ok") or k in (
        "three_valued", "cyclically_distinct", "no_long_runs", "demodulates_to_gold"))
    return report


def saveCodes(path: Path, gold: Iterable[BitSequence], modulated: Iterable[BitSequence], pair: CodePair, degree: int):
    document = {
        "degree": degree,
        "gold": [code.toDict() for code in gold],
        "modulated": [code.toDict() for code in modulated],
        "pair": pair.toDict(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(document, f, indent=2)


def loadCodes(path: Path) -> dict:
    """
    Reads a code document written by :func:`saveCodes`

    Returns:
        dict: with keys :code:`degree`, :code:`gold`, :code:`modulated` (lists of :class:`BitSequence`) and
        :code:`pair` (:class:`CodePair` or None)
    """
    path = Path(path)
    if not path.exists():
        raise ValueError("Path {} does not exist!".format(path))
    with path.open() as f:
        document = json.load(f)
    return {
        "degree": document.get("degree"),
        "gold": [BitSequence.fromDict(c) for c in document.get("gold", [])],
        "modulated": [BitSequence.fromDict(c) for c in document.get("modulated", [])],
        "pair": CodePair.fromDict(document["pair"]) if "pair" in document else None,
    }
