import copy

import pytest
from hypothesis import given, strategies as st

from animtx.chart import apply_transforms, chart_from_doc, chart_to_doc, parse_chart, serialize_chart
from animtx.errors import ChartError, DocumentError, ScaleOverflow
from animtx.fixtures import ALL_FIXTURES, fixture_docs, load_fixture
from animtx.scales import in_domain
from animtx.scene import render_scene, serialize_scene

from conftest import bar_doc


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_fixture_round_trip(name):
    start, end, _ = load_fixture(name)
    for chart in (start, end):
        again = chart_from_doc(chart_to_doc(chart))
        assert serialize_chart(again) == serialize_chart(chart)


def test_schema_tag_required():
    doc = bar_doc([1, 2], 5)
    del doc["schema"]
    with pytest.raises(DocumentError, match="schema"):
        chart_from_doc(doc)
    doc["schema"] = "animtx.chart/9"
    with pytest.raises(DocumentError, match="version"):
        chart_from_doc(doc)


def test_syntax_error_reports_byte_offset():
    with pytest.raises(DocumentError) as info:
        parse_chart(b'{"schema": "animtx.chart/1", }')
    assert info.value.offset == 29


def test_unknown_scale_reference_rejected():
    doc = bar_doc([1, 2], 5)
    doc["marks"][0]["encode"]["y"]["scale"] = "nope"
    with pytest.raises(ChartError):
        chart_from_doc(doc)


def test_illegal_channel_for_mark_type():
    doc = bar_doc([1, 2], 5)
    doc["marks"][0]["type"] = "symbol"
    with pytest.raises(ChartError, match="illegal"):
        chart_from_doc(doc)


def test_strict_render_rejects_overflow():
    with pytest.raises((ScaleOverflow, ChartError)):
        render_scene(chart_from_doc(bar_doc([1, 9], 5)))


def test_render_is_deterministic():
    start, _, _ = load_fixture("zoom_lines")
    assert serialize_scene(render_scene(start)) == serialize_scene(render_scene(start))


def test_filter_and_aggregate_transforms():
    docs = fixture_docs("aggregation")
    end = chart_from_doc(docs["end"])
    rows = apply_transforms(end.datasets[0])
    means = {r["group"]: r["value"] for r in rows}
    assert means == {"a": 4, "b": 6, "c": 4}
    zoom = chart_from_doc(fixture_docs("zoom_lines")["start"])
    assert max(r["year"] for r in apply_transforms(zoom.datasets[0])) == 2005


def test_bars_render_inside_view():
    chart = chart_from_doc(bar_doc([10, 40, 25], 50))
    bars = [el for el in render_scene(chart).elements if el.component == ("mark", "bars")]
    assert len(bars) == 3
    for el in bars:
        a = el.attrs
        assert 0 <= a["x"] and a["x"] + a["width"] <= 400
        assert 0 <= a["y"] and a["y"] + a["height"] <= 300 + 1e-9


@given(st.lists(st.integers(0, 100), min_size=1, max_size=10), st.integers(0, 50))
def test_linear_domain_membership(values, slack):
    chart = chart_from_doc(bar_doc(values, max(values) + slack))
    y = chart.scale("y")
    assert all(in_domain(y, v) for v in values)
    assert not in_domain(y, max(values) + slack + 1)


def test_docs_are_not_mutated():
    doc = bar_doc([1, 2], 5)
    before = copy.deepcopy(doc)
    chart_from_doc(doc)
    assert doc == before
