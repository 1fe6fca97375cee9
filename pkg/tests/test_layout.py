"""Geometry: stabilizer supports, schedules, logical strings."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtqec.layout import CodeLayout, build_layout, N_INTERACTION_LAYERS

DISTANCE3_SUPPORTS = {
    "A1": ("X", ("D1", "D2")),
    "A2": ("Z", ("D1", "D2", "D4", "D5")),
    "A3": ("X", ("D2", "D3", "D5", "D6")),
    "A4": ("Z", ("D3", "D6")),
    "A5": ("Z", ("D4", "D7")),
    "A6": ("X", ("D4", "D5", "D7", "D8")),
    "A7": ("Z", ("D5", "D6", "D8", "D9")),
    "A8": ("X", ("D8", "D9")),
}


def support_vec(layout: CodeLayout, labels) -> np.ndarray:
    v = np.zeros(layout.n_data, np.uint8)
    for lbl in labels:
        v[layout.data_index(lbl)] = 1
    return v


def test_distance3_supports_exact():
    lay = build_layout(3)
    assert lay.n_data == 9
    assert lay.n_ancilla == 8
    got = {s.ancilla: (s.kind, s.support) for s in lay.stabilizers}
    assert got == DISTANCE3_SUPPORTS


def test_distance3_logical_strings():
    lay = build_layout(3)
    assert lay.logical_z_support == ("D1", "D2", "D3")
    assert lay.logical_x_support == ("D3", "D6", "D9")


def test_distance5_counts():
    lay = build_layout(5)
    assert lay.n_data == 25
    assert lay.n_ancilla == 24
    kinds = [s.kind for s in lay.stabilizers]
    assert kinds.count("Z") == 12
    assert kinds.count("X") == 12


@pytest.mark.parametrize("bad", [1, 2, 4, 6, 0, -3])
def test_rejects_non_odd_or_small(bad):
    with pytest.raises(ValueError):
        build_layout(bad)


@given(st.sampled_from([3, 5, 7, 9, 11]))
@settings(max_examples=5, deadline=None)
def test_stabilizers_commute_and_fix_logicals(d):
    lay = build_layout(d)
    zl = support_vec(lay, lay.logical_z_support)
    xl = support_vec(lay, lay.logical_x_support)
    z_rows = [support_vec(lay, s.support) for s in lay.stabilizers if s.kind == "Z"]
    x_rows = [support_vec(lay, s.support) for s in lay.stabilizers if s.kind == "X"]
    # opposite-kind stabilizers overlap on an even number of qubits
    for zr in z_rows:
        for xr in x_rows:
            assert int((zr & xr).sum()) % 2 == 0
    # logical strings commute with every stabilizer of the opposite kind
    for xr in x_rows:
        assert int((xr & zl).sum()) % 2 == 0
    for zr in z_rows:
        assert int((zr & xl).sum()) % 2 == 0
    # and anticommute with each other exactly once
    assert int((zl & xl).sum()) % 2 == 1
    # counts and weights
    assert len(z_rows) == len(x_rows) == (d * d - 1) // 2
    for s in lay.stabilizers:
        assert s.weight in (2, 4)
    assert zl.sum() == d and xl.sum() == d


@given(st.sampled_from([3, 5, 7, 9]))
@settings(max_examples=4, deadline=None)
def test_schedule_layers_conflict_free(d):
    lay = build_layout(d)
    for k in range(N_INTERACTION_LAYERS):
        touched_data = []
        for s in lay.stabilizers:
            lbl = s.schedule[k]
            if lbl is not None:
                touched_data.append(lbl)
                assert lbl in s.support
        assert len(touched_data) == len(set(touched_data))
    # every support qubit appears exactly once across the schedule
    for s in lay.stabilizers:
        slots = [lbl for lbl in s.schedule if lbl is not None]
        assert sorted(slots) == sorted(s.support)


def test_hook_safe_slot_orders_distance3():
    lay = build_layout(3)
    sched = {s.ancilla: s.schedule for s in lay.stabilizers}
    # full X plaquette visits row-major (late pair horizontal)
    assert sched["A3"] == ("D2", "D3", "D5", "D6")
    assert sched["A6"] == ("D4", "D5", "D7", "D8")
    # full Z plaquette visits column-major (late pair vertical)
    assert sched["A2"] == ("D1", "D4", "D2", "D5")
    assert sched["A7"] == ("D5", "D8", "D6", "D9")


def test_json_round_trip_and_determinism():
    lay = build_layout(3)
    blob = lay.to_json()
    assert blob == build_layout(3).to_json()
    doc = json.loads(blob)
    assert doc["distance"] == 3
    assert len(doc["stabilizers"]) == 8
    assert doc["logical_z_support"] == ["D1", "D2", "D3"]


def test_index_helpers():
    lay = build_layout(3)
    assert lay.data_index("D1") == 0
    assert lay.data_index("D9") == 8
    assert lay.ancilla_index("A1") == 0
    assert lay.ancilla_index("A8") == 7
    with pytest.raises(ValueError):
        lay.data_index("D10")
    with pytest.raises(ValueError):
        lay.ancilla_index("D1")
    kinds = [k for _lbl, k in lay.ancilla_qubits]
    assert kinds == ["X", "Z", "X", "Z", "Z", "X", "Z", "X"]
