import numpy as np
import pytest

from cvep_sdk.codes import BitSequence
from cvep_sdk.reconvolution import EVENT_NAMES, EventMatrix, buildStructureMatrix, deriveEvents, predictResponse, \
    structureMatricesForPair, writeEventsCsv, writeStructureCsv
from cvep_sdk.utils import readCsv


def test_events_of_a_short_code():
    code = BitSequence((0, 1, 0, 1, 1, 0), 60, "toy")
    events = deriveEvents(code, 0.1)
    assert events.rows.shape == (3, 12)
    assert np.flatnonzero(events.row("trial_onset")).tolist() == [0]
    assert np.flatnonzero(events.row("short_flash")).tolist() == [2]
    assert np.flatnonzero(events.row("long_flash")).tolist() == [6]


def test_flash_cut_by_trial_end_keeps_its_length():
    code = BitSequence((0, 0, 0, 0, 1, 1), 60, "toy")
    events = deriveEvents(code, 10 / 120)
    assert events.nSamples == 10
    assert np.flatnonzero(events.row(2)).tolist() == [8]
    assert not events.row(1).any()


def test_events_of_the_pair(pair):
    events = deriveEvents(pair.left, 20)
    assert events.rows.shape == (3, 2400)
    assert events.codeName == pair.left.name
    flashes = events.rows[1:]
    # one event per flash, flashes start on bit boundaries
    assert flashes.sum(axis=0).max() == 1
    assert np.all(np.flatnonzero(flashes.any(axis=0)) % 2 == 0)
    assert flashes[0].sum() > 0 and flashes[1].sum() > 0


def test_event_derivation_errors():
    with pytest.raises(ValueError):
        deriveEvents(BitSequence((0, 1, 0), 50), 1.0)
    with pytest.raises(ValueError):
        deriveEvents(BitSequence((0, 1, 1, 1, 0), 60), 1.0)
    with pytest.raises(ValueError):
        deriveEvents(BitSequence((0, 1), 60), 0.0)


def test_structure_matrix_rows_are_delayed_events(pair):
    events = deriveEvents(pair.left, 20)
    L = 36
    structure = buildStructureMatrix(events, L)
    assert structure.data.shape == (3 * L, 2400)
    assert structure.nEvents == 3
    for event in range(3):
        for lag in (0, 1, 17, L - 1):
            row = structure.data[event * L + lag]
            assert not row[:lag].any()
            np.testing.assert_array_equal(row[lag:], events.rows[event, :events.nSamples - lag])


def test_structure_matrix_length_bounds():
    events = deriveEvents(BitSequence((0, 1, 0, 1, 1, 0), 60), 0.1)
    assert buildStructureMatrix(events, 12).data.shape == (36, 12)
    with pytest.raises(ValueError):
        buildStructureMatrix(events, 0)
    with pytest.raises(ValueError):
        buildStructureMatrix(events, 13)


def test_predicted_response(pair):
    structures = structureMatricesForPair(pair, 20, 12)
    assert structures[0].codeName == pair.left.name
    assert structures[1].codeName == pair.right.name
    r = np.zeros(36)
    r[12] = 1.0
    np.testing.assert_array_equal(predictResponse(structures[0], r), structures[0].data[12])
    with pytest.raises(ValueError):
        predictResponse(structures[0], np.zeros(35))


def test_csv_dumps(tmp_path):
    events = deriveEvents(BitSequence((0, 1, 0, 1, 1, 0), 60, "toy"), 0.1)
    writeEventsCsv(events, tmp_path / "events.csv")
    header, rows = readCsv(tmp_path / "events.csv")
    assert header == ["sample"] + list(EVENT_NAMES)
    assert rows[6] == ["6", "0", "0", "1"]

    writeStructureCsv(buildStructureMatrix(events, 4), tmp_path / "structure.csv")
    header, rows = readCsv(tmp_path / "structure.csv")
    assert len(header) == 13
    assert [row[0] for row in rows[:5]] == ["trial_onset@0", "trial_onset@1", "trial_onset@2", "trial_onset@3",
                                           "short_flash@0"]
    assert rows[5][1:] == ["0", "0", "0", "1"] + ["0"] * 8


def test_template_equals_direct_convolution(rng):
    for _ in range(100):
        nSamples = int(rng.integers(5, 60))
        L = int(rng.integers(1, nSamples + 1))
        rows = (rng.random((3, nSamples)) < 0.2).astype(np.uint8)
        structure = buildStructureMatrix(EventMatrix(rows, 120, "random"), L)
        r = rng.standard_normal(3 * L)
        direct = sum(np.convolve(rows[e].astype(float), r[e * L:(e + 1) * L])[:nSamples] for e in range(3))
        np.testing.assert_allclose(predictResponse(structure, r), direct, atol=1e-10)


def _toyEvents(onsets, nSamples=20, event="short_flash"):
    rows = np.zeros((3, nSamples), dtype=np.uint8)
    rows[EVENT_NAMES.index(event), list(onsets)] = 1
    return EventMatrix(rows, 120, "toy")


def test_overlapping_responses_share_a_column():
    structure = buildStructureMatrix(_toyEvents((4, 7)), 5)
    block = structure.data[5:10]
    assert np.flatnonzero(block[:, 7]).tolist() == [0, 3]
    assert np.count_nonzero(structure.data[:, 7]) == 2


def test_structure_columns_count_onsets_in_the_response_window(pair):
    L = 36
    events = deriveEvents(pair.byLabel(0), 20)
    structure = buildStructureMatrix(events, L)
    for e in range(3):
        block = structure.data[e * L:(e + 1) * L]
        window = np.convolve(events.rows[e].astype(float), np.ones(L))[:events.nSamples]
        np.testing.assert_array_equal(block.sum(axis=0), window)
        assert block.sum(axis=0).max() <= L
    assert structure.data.sum(axis=0).max() <= 3 * L


def test_structure_lag_zero_rows_are_the_events(pair):
    L = 12
    events = deriveEvents(pair.byLabel(1), 20)
    structure = buildStructureMatrix(events, L)
    np.testing.assert_array_equal(structure.data[::L], events.rows)
    for lag in range(L):
        np.testing.assert_array_equal(structure.data[L + lag, lag:], events.rows[1, :events.nSamples - lag])
