import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent.absolute()
sys.path.append(str(ROOT))
sys.path.append(str(ROOT / "cvep_sdk" / "src"))

from cvep_sdk.codes import defaultCodePair
from cvep_sdk.simulator import defaultForwardModel, simulateDataset
from cvep_sdk.stimulus import makeSessionPlan


@pytest.fixture(scope="session")
def pair():
    return defaultCodePair()


@pytest.fixture(scope="session")
def forwardModel():
    return defaultForwardModel(8, lengthS=0.3, rngSeed=5, snr=0.5)


def simulate(pair, fm, nRuns=1, trialsPerRun=40, overtRuns=1, planSeed=3, rngSeed=11):
    plan = makeSessionPlan(planSeed, pair.names, nRuns, trialsPerRun, overtRuns)
    return simulateDataset(plan, fm, pair, rngSeed)


@pytest.fixture(scope="session")
def overtDataset(pair, forwardModel):
    return simulate(pair, forwardModel)


@pytest.fixture(scope="session")
def mixedDataset(pair, forwardModel):
    # one overt and one covert run of 16 trials each
    return simulate(pair, forwardModel, nRuns=2, trialsPerRun=16, overtRuns=1, planSeed=8, rngSeed=21)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
