"""Resource-projection tests: published-table anchoring, closed-form model
relations, monotonicity, and capacity readings."""

from __future__ import annotations

import json
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtqec.scaling import (
    PUBLISHED_ROWS,
    REFERENCE_DSP_CAPACITY,
    CapacityReport,
    ScalingRow,
    hidden_width,
    max_supported_distance,
    project,
    table,
)

# frozen oracle: the eight published projection rows
PUBLISHED_P = (4736, 13992, 29700, 52224, 83304, 123212, 172160, 230364)
PUBLISHED_DSP = (399, 1094, 2191, 3591, 5337, 7533, 9975, 12757)
PUBLISHED_LATENCY = (124, 205, 291, 372, 453, 538, 620, 701)
DISTANCES = (3, 5, 7, 9, 11, 13, 15, 17)


def test_published_parameter_counts_exact() -> None:
    rows = table()
    assert tuple(r.p_lstm for r in rows) == PUBLISHED_P


def test_dsp_within_ten_slices_of_published() -> None:
    for d, want in zip(DISTANCES, PUBLISHED_DSP):
        got = project(d).dsp
        assert abs(got - want) <= 10, (d, got, want)


def test_latency_within_one_ns_of_published() -> None:
    for d, want in zip(DISTANCES, PUBLISHED_LATENCY):
        got = project(d).latency_ns
        assert abs(got - want) <= 1, (d, got, want)


def test_input_and_hidden_widths() -> None:
    for d, row in PUBLISHED_ROWS.items():
        got = project(d)
        assert got.dim_x == row[0] == (d * d - 1) // 2
        assert got.h == row[1] == hidden_width(d)


def test_model_parameter_count_formula() -> None:
    # independent arithmetic: 4 gates x (input + recurrent + bias)
    for d in range(3, 41, 2):
        row = project(d)
        assert row.p_lstm_model == 4 * (row.dim_x * row.h + row.h**2 + row.h)


def test_model_matches_published_only_at_anchored_distances() -> None:
    # the published table and the closed-form model coincide at 3, 5, 11
    # and deviate elsewhere; the published column wins for p_lstm.
    exact = {d for d in DISTANCES if project(d).p_lstm_model == project(d).p_lstm}
    assert exact == {3, 5, 11}
    off = project(7)
    assert off.p_lstm == 29700 and off.p_lstm_model != 29700


def test_anchor_row_is_the_measured_implementation() -> None:
    row = project(3)
    assert (row.dim_x, row.h) == (4, 32)
    assert row.p_lstm == 4736
    assert row.dsp == 399
    assert row.latency_ns == 124


def test_utilization_percent() -> None:
    assert project(15).utilization == pytest.approx(100 * 9975 / 12288, abs=0.5)
    assert project(13).utilization == pytest.approx(61.0, abs=0.8)
    assert REFERENCE_DSP_CAPACITY == 12288


def test_monotone_growth() -> None:
    rows = [project(d) for d in range(3, 61, 2)]
    for a, b in zip(rows, rows[1:]):
        assert b.dsp > a.dsp
        assert b.latency_ns > a.latency_ns
        assert b.p_lstm_model > a.p_lstm_model
        assert b.h > a.h


def test_asymptotically_cubic_parameter_count() -> None:
    # P_model ~ 4*(d^2/2)*(32d/3) = (64/3) d^3 at leading order, with a
    # 4*(32/3)^2 d^2 recurrent term one power down.
    d = 1001
    expected = 4 * 0.5 * (32 / 3) + 4 * (32 / 3) ** 2 / d
    assert project(d).p_lstm_model / d**3 == pytest.approx(expected, rel=0.01)


def test_capacity_reference_device() -> None:
    report = max_supported_distance(12288)
    assert report.single == 15
    assert report.dual == 11


def test_capacity_exact_anchor() -> None:
    report = max_supported_distance(399)
    assert report.single == 3
    assert report.dual is None  # two decoders need 798 slices


def test_capacity_below_minimum_is_empty() -> None:
    for cap in (0, 10, 398):
        report = max_supported_distance(cap)
        assert report.single is None
        assert report.dual is None


def test_capacity_large() -> None:
    report = max_supported_distance(4 * 12288)
    assert report.single >= 29
    assert report.dual >= 21
    assert project(report.single).dsp <= 4 * 12288
    assert project(report.single + 2).dsp > 4 * 12288
    assert 2 * project(report.dual).dsp <= 4 * 12288
    assert 2 * project(report.dual + 2).dsp > 4 * 12288


@given(st.integers(min_value=399, max_value=200_000))
def test_capacity_readings_consistent(cap: int) -> None:
    report = max_supported_distance(cap)
    assert report.single is not None
    assert report.dual is None or report.dual <= report.single
    assert project(report.single).dsp <= cap


def test_invalid_distances_rejected() -> None:
    for bad in (0, 1, 2, 4, -3, 16):
        with pytest.raises(ValueError):
            project(bad)


def test_row_serialization() -> None:
    payload = project(5).to_dict()
    assert payload["d"] == 5
    assert payload["p_lstm"] == 13992
    json.dumps(payload)  # must be JSON-clean
    report = max_supported_distance(12288)
    parsed = json.loads(report.to_json())
    assert parsed == {"capacity": 12288, "single": 15, "dual": 11}
    assert isinstance(report, CapacityReport)
    assert isinstance(project(3), ScalingRow)


def test_full_table_under_one_second() -> None:
    start = time.perf_counter()
    rows = table()
    max_supported_distance(12288)
    elapsed = time.perf_counter() - start
    assert len(rows) == 8
    assert elapsed < 1.0
