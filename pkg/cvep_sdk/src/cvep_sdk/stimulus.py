"""
Shape timelines, trials and the session schedule of the counting-task experiment
"""
from dataclasses import dataclass, field, asdict
import json
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

TARGET_SHAPE = "magenta_hourglass"
NON_TARGET_SHAPES = ("green_circle", "cyan_triangle", "red_rectangle", "yellow_triangle")
SHAPES = (NON_TARGET_SHAPES[0], TARGET_SHAPE) + NON_TARGET_SHAPES[1:]
SIDES = ("left", "right")
CONDITIONS = ("overt", "covert")

SLOT_RATE_HZ = 4
TRIAL_DURATION_S = 20
TARGET_COUNT_CHOICES = (2, 3, 4, 5)
_MAX_PLACEMENT_ATTEMPTS = 10000


@dataclass(frozen=True)
class ProtocolTiming:
    """Durations (in seconds) of the protocol phases around each trial; recorded only, never simulated"""
    runPreparationS: float = 5.0
    cueS: float = 1.0
    trialS: float = float(TRIAL_DURATION_S)
    responseS: float = 5.0
    feedbackS: float = 1.0
    interTrialS: float = 1.0


@dataclass(frozen=True)
class ShapeTimeline:
    slots: Tuple[str, ...]
    slotRateHz: int = SLOT_RATE_HZ
    durationS: int = TRIAL_DURATION_S

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        if len(self.slots) != self.durationS * self.slotRateHz:
            raise ValueError("Timeline has {} slots, expected {}".format(len(self.slots), self.durationS * self.slotRateHz))
        unknown = set(self.slots) - set(SHAPES)
        if unknown:
            raise ValueError("Unknown shapes in timeline: {}".format(sorted(unknown)))
        targets = self.targetSlots
        if any(b - a < self.slotRateHz for a, b in zip(targets, targets[1:])):
            raise ValueError("Target shapes closer than {} slots in timeline".format(self.slotRateHz))

    @property
    def targetSlots(self) -> Tuple[int, ...]:
        return tuple(i for i, shape in enumerate(self.slots) if shape == TARGET_SHAPE)

    @property
    def targetCount(self) -> int:
        return len(self.targetSlots)

    def toDict(self) -> dict:
        return {"slots": list(self.slots), "slot_rate_hz": self.slotRateHz, "duration_s": self.durationS}

    @classmethod
    def fromDict(cls, data: dict) -> "ShapeTimeline":
        return cls(tuple(data["slots"]), int(data["slot_rate_hz"]), int(data["duration_s"]))


@dataclass(frozen=True)
class TrialSpec:
    """
    One 20 s trial: the cued side flashes its code while both sides show their shape streams.

    Args:
        cuedSide (str): :code:`left` or :code:`right`
        leftTimeline (ShapeTimeline): Shapes shown in the left circle
        rightTimeline (ShapeTimeline): Shapes shown in the right circle
        condition (str): :code:`overt` or :code:`covert`
        codeName (str): Name of the code flashing on the cued side
    """
    cuedSide: str
    leftTimeline: ShapeTimeline
    rightTimeline: ShapeTimeline
    condition: str
    codeName: str

    def __post_init__(self):
        if self.cuedSide not in SIDES:
            raise ValueError("Unknown side '{}' (expected one of {})".format(self.cuedSide, SIDES))
        if self.condition not in CONDITIONS:
            raise ValueError("Unknown condition '{}' (expected one of {})".format(self.condition, CONDITIONS))
        if set(self.leftTimeline.targetSlots) & set(self.rightTimeline.targetSlots):
            raise ValueError("Target shape presented on both sides simultaneously")
        if self.leftTimeline.targetCount == self.rightTimeline.targetCount:
            raise ValueError("Target counts of both sides are equal ({})".format(self.leftTimeline.targetCount))

    @property
    def label(self) -> int:
        """int: 0 for left, 1 for right"""
        return SIDES.index(self.cuedSide)

    @property
    def targetCounts(self) -> Tuple[int, int]:
        return self.leftTimeline.targetCount, self.rightTimeline.targetCount

    def toDict(self) -> dict:
        return {
            "cued_side": self.cuedSide,
            "condition": self.condition,
            "code_name": self.codeName,
            "left_timeline": self.leftTimeline.toDict(),
            "right_timeline": self.rightTimeline.toDict(),
        }

    @classmethod
    def fromDict(cls, data: dict) -> "TrialSpec":
        return cls(
            data["cued_side"],
            ShapeTimeline.fromDict(data["left_timeline"]),
            ShapeTimeline.fromDict(data["right_timeline"]),
            data["condition"],
            data["code_name"],
        )


@dataclass(frozen=True)
class RunSpec:
    condition: str
    trials: Tuple[TrialSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))
        if any(trial.condition != self.condition for trial in self.trials):
            raise ValueError("Run '{}' contains trials of another condition".format(self.condition))

    def toDict(self) -> dict:
        return {"condition": self.condition, "trials": [trial.toDict() for trial in self.trials]}

    @classmethod
    def fromDict(cls, data: dict) -> "RunSpec":
        return cls(data["condition"], tuple(TrialSpec.fromDict(t) for t in data["trials"]))


@dataclass(frozen=True)
class SessionPlan:
    """
    Ordered runs of one session, reproducible from :code:`rngSeed`
    """
    runs: Tuple[RunSpec, ...]
    rngSeed: int
    codeNames: Tuple[str, str] = ("left", "right")
    timing: ProtocolTiming = field(default_factory=ProtocolTiming)

    def __post_init__(self):
        object.__setattr__(self, "runs", tuple(self.runs))
        object.__setattr__(self, "codeNames", tuple(self.codeNames))

    def trials(self) -> List[Tuple[int, int, TrialSpec]]:
        """
        Flattens the plan in chronological order

        Returns:
            list: :code:`(runIndex, trialIndex, trial)` tuples
        """
        return [(r, t, trial) for r, run in enumerate(self.runs) for t, trial in enumerate(run.trials)]

    @property
    def conditions(self) -> Tuple[str, ...]:
        return tuple(run.condition for run in self.runs)

    def countByCondition(self) -> dict:
        counts = {condition: 0 for condition in CONDITIONS}
        for _, _, trial in self.trials():
            counts[trial.condition] += 1
        return counts

    def toDict(self) -> dict:
        return {
            "rng_seed": self.rngSeed,
            "code_names": list(self.codeNames),
            "timing": asdict(self.timing),
            "runs": [run.toDict() for run in self.runs],
        }

    @classmethod
    def fromDict(cls, data: dict) -> "SessionPlan":
        return cls(
            tuple(RunSpec.fromDict(r) for r in data["runs"]),
            int(data["rng_seed"]),
            tuple(data.get("code_names", ("left", "right"))),
            ProtocolTiming(**data.get("timing", {})),
        )


def _placeTargets(rng: np.random.Generator, nTargets: int, nSlots: int, spacing: int) -> List[int]:
    # sorted draw from a compressed range, then re-expanded so that consecutive gaps are >= spacing
    free = nSlots - (spacing - 1) * (nTargets - 1) if nTargets > 0 else nSlots
    offsets = np.sort(rng.choice(free, size=nTargets, replace=False))
    return [int(q) + (spacing - 1) * i for i, q in enumerate(offsets)]


def maxTargets(nSlots: int = TRIAL_DURATION_S * SLOT_RATE_HZ, spacing: int = SLOT_RATE_HZ) -> int:
    return (nSlots - 1) // spacing + 1


def makeShapeTimeline(rngSeed, nTargets: int, forbiddenSlots: Sequence[int] = ()) -> ShapeTimeline:
    """
    Draws one side's shape stream

    Args:
        rngSeed: Seed (int or :class:`numpy.random.SeedSequence`)
        nTargets (int): Number of target shapes to place
        forbiddenSlots (list, Optional): Slots that must not hold a target (targets of the other side)

    Returns:
        ShapeTimeline: 80 slots with :code:`nTargets` targets at least 1 s apart

    Raises:
        ValueError: if the targets cannot be placed
    """
    nSlots = TRIAL_DURATION_S * SLOT_RATE_HZ
    if nTargets < 0 or nTargets > maxTargets(nSlots):
        raise ValueError("Cannot place {} targets in {} slots with a spacing of {} slots (maximum {})".format(
            nTargets, nSlots, SLOT_RATE_HZ, maxTargets(nSlots)))
    rng = np.random.default_rng(rngSeed)
    forbidden = set(int(s) for s in forbiddenSlots)
    for _ in range(_MAX_PLACEMENT_ATTEMPTS):
        targets = _placeTargets(rng, nTargets, nSlots, SLOT_RATE_HZ)
        if not forbidden.intersection(targets):
            break
    else:
        raise ValueError("Cannot place {} targets avoiding slots {}".format(nTargets, sorted(forbidden)))

    targets = set(targets)
    slots = []
    previous = None
    for i in range(nSlots):
        if i in targets:
            shape = TARGET_SHAPE
        else:
            choices = [s for s in NON_TARGET_SHAPES if s != previous]
            shape = choices[int(rng.integers(len(choices)))]
        slots.append(shape)
        previous = shape
    return ShapeTimeline(tuple(slots))


def makeTrialSpec(rngSeed, cuedSide: str, condition: str, codeNames: Tuple[str, str] = ("left", "right")) -> TrialSpec:
    """
    Draws differing target counts for both sides and builds their timelines without simultaneous targets
    """
    if cuedSide not in SIDES:
        raise ValueError("Unknown side '{}' (expected one of {})".format(cuedSide, SIDES))
    if condition not in CONDITIONS:
        raise ValueError("Unknown condition '{}' (expected one of {})".format(condition, CONDITIONS))
    seeds = np.random.SeedSequence(rngSeed).spawn(3)
    rng = np.random.default_rng(seeds[0])
    nLeft, nRight = rng.choice(TARGET_COUNT_CHOICES, size=2)
    while nLeft == nRight:
        nRight = rng.choice(TARGET_COUNT_CHOICES)
    left = makeShapeTimeline(seeds[1], int(nLeft))
    right = makeShapeTimeline(seeds[2], int(nRight), forbiddenSlots=left.targetSlots)
    return TrialSpec(cuedSide, left, right, condition, codeNames[SIDES.index(cuedSide)])


def makeSessionPlan(rngSeed: int, codeNames: Tuple[str, str] = ("left", "right"), nRuns: int = 5,
                    trialsPerRun: int = 20, overtRuns: int = 1) -> SessionPlan:
    """
    Builds the session: :code:`overtRuns` overt and the remaining covert runs in seeded random order, each run with
    a shuffled balanced list of left and right cues

    Args:
        rngSeed (int): Session seed
        codeNames (tuple): Names of the left and right codes
        nRuns (int): Number of runs
        trialsPerRun (int): Trials per run, must be even
        overtRuns (int): Number of overt runs

    Returns:
        SessionPlan: the schedule
    """
    if trialsPerRun < 2 or trialsPerRun % 2:
        raise ValueError("Trials per run must be a positive even number (supplied: {})".format(trialsPerRun))
    if not 0 <= overtRuns <= nRuns:
        raise ValueError("Number of overt runs {} must be within 0..{}".format(overtRuns, nRuns))
    rng = np.random.default_rng(rngSeed)
    conditions = np.array(["overt"] * overtRuns + ["covert"] * (nRuns - overtRuns))
    rng.shuffle(conditions)
    runs = []
    for condition in conditions:
        sides = np.array(["left", "right"] * (trialsPerRun // 2))
        rng.shuffle(sides)
        trialSeeds = rng.integers(0, 2 ** 32, size=trialsPerRun)
        trials = tuple(
            makeTrialSpec(int(seed), str(side), str(condition), codeNames) for side, seed in zip(sides, trialSeeds)
        )
        runs.append(RunSpec(str(condition), trials))
    return SessionPlan(tuple(runs), int(rngSeed), tuple(codeNames))


def savePlan(plan: SessionPlan, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(plan.toDict(), f, indent=2)


def loadPlan(path: Path) -> SessionPlan:
    path = Path(path)
    if not path.exists():
        raise ValueError("Path {} does not exist!".format(path))
    with path.open() as f:
        return SessionPlan.fromDict(json.load(f))
