# tests/test_eol.py
import numpy as np
import pytest

from conftest import simple_history
from core.eol import detect_eol, filter_usable, first_crossing, labelled, resolve_eol
from core.exceptions import UnresolvedEolError


def test_detects_first_cycle_strictly_below_threshold():
    history = simple_history([1.0, 0.9, 0.8, 0.79, 0.7], nominal=1.0)
    # 0.8 itself is not strictly below the threshold
    assert detect_eol(history) == 4


def test_first_raw_crossing_wins_over_later_recovery():
    history = simple_history([1.0, 0.79, 0.85, 0.70], nominal=1.0)
    assert detect_eol(history) == 2


def test_never_crossing_returns_none():
    assert detect_eol(simple_history([1.0, 0.99, 0.98], nominal=1.0)) is None


def test_threshold_fraction_must_be_a_fraction():
    with pytest.raises(ValueError):
        detect_eol(simple_history([1.0]), threshold_fraction=1.2)


def test_first_crossing_positions():
    assert first_crossing(np.array([3.0, 2.0, 1.0]), 2.5) == 2
    assert first_crossing(np.array([3.0, 2.0]), 1.0) is None


def test_recorded_label_takes_precedence():
    history = simple_history([1.0, 0.7, 0.6], nominal=1.0, eol_cycle=3)
    assert resolve_eol(history) == 3


def test_unresolved_eol_raises():
    with pytest.raises(UnresolvedEolError) as excinfo:
        resolve_eol(simple_history([1.0, 0.99], nominal=1.0, cell_id='young'))
    assert excinfo.value.cell_id == 'young'


def test_labelled_drops_censored_cells_and_attaches_labels():
    crossing = simple_history([1.0, 0.9, 0.7], nominal=1.0, cell_id='old')
    censored = simple_history([1.0, 0.99], nominal=1.0, cell_id='young')
    kept = labelled([crossing, censored])
    assert [h.cell_id for h in kept] == ['old']
    assert kept[0].eol_cycle == 3


def test_filter_usable_keeps_order_and_boundary():
    cells = [
        simple_history([1.0, 0.7], nominal=1.0, cell_id='a'),
        simple_history([1.0, 0.95, 0.7], nominal=1.0, cell_id='b'),
        simple_history([1.0, 0.95, 0.9, 0.7], nominal=1.0, cell_id='c'),
    ]
    assert [h.cell_id for h in filter_usable(cells, min_eol=3)] == ['b', 'c']
    assert filter_usable(cells, min_eol=5) == []


def test_higher_threshold_never_detects_later(small_fleet, rng):
    random_walk = simple_history(list(1.0 - np.cumsum(rng.uniform(0.0, 0.01, size=80))), nominal=1.0)
    for history in [*small_fleet, random_walk]:
        detected = [detect_eol(history, fraction) for fraction in (0.85, 0.8, 0.75, 0.6)]
        for higher, lower in zip(detected, detected[1:]):
            if lower is not None:
                assert higher is not None and higher <= lower


def test_lower_min_eol_keeps_a_superset(small_fleet):
    fleet = labelled(small_fleet)
    kept = [{h.cell_id for h in filter_usable(fleet, min_eol=m)} for m in (0, 550, 600, 650, 700, 800)]
    for looser, stricter in zip(kept, kept[1:]):
        assert stricter <= looser
    assert kept[0] == {h.cell_id for h in fleet}
    assert kept[-1] == set()
