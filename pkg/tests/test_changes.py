import pytest
from hypothesis import given, strategies as st

from animtx.changes import (apply_change, change_spec_for, check_state, detect_changes,
                            diff_guide_data, join_aggregate, join_data, scale_dimension)
from animtx.chart import chart_from_doc
from animtx.errors import JoinError
from animtx.fixtures import fixture_docs, load_fixture
from animtx.state import endpoint_states

from conftest import bar_chart, bar_doc

row = st.fixed_dictionaries({"k": st.integers(0, 6), "v": st.integers(-5, 5)})


def _unique(rows):
    return list({r["k"]: r for r in rows}.values())


@given(st.lists(row, max_size=8).map(_unique), st.lists(row, max_size=8).map(_unique))
def test_join_partition_is_disjoint_and_covering(a, b):
    j = join_data(a, b, ["k"])
    en, up, ex = j.key_sets()
    assert not (en & up) and not (en & ex) and not (up & ex)
    assert en | up | ex == {(r["k"],) for r in a + b}
    assert all(r0["k"] == r1["k"] for _, r0, r1 in j.update)


@given(st.lists(row, max_size=8), st.lists(row, max_size=8))
def test_index_join_matches_positions(a, b):
    en, up, ex = join_data(a, b).key_sets()
    n = min(len(a), len(b))
    assert up == set(range(n))
    assert en == set(range(n, len(b))) and ex == set(range(n, len(a)))


def test_duplicate_keys_are_rejected():
    with pytest.raises(JoinError):
        join_data([{"k": 1}, {"k": 1}], [], ["k"])


def test_aggregate_join_pairs_rows_with_groups():
    docs = fixture_docs("aggregation")
    raw = docs["start"]["datasets"][0]["rows"]
    agg = [{"group": "a", "value": 4}, {"group": "b", "value": 6}, {"group": "c", "value": 4}]
    pairs = join_aggregate(raw, agg, ["group"])
    assert [j for _, j in pairs] == [0, 0, 0, 1, 1, 2, 2, 2, 2]


def test_zoom_detected_changes(zoom):
    start, end, _ = zoom
    cs = detect_changes(start, end)
    assert sorted(c.uid for c in cs.all()) == [
        "axis:x-axis:scale.x", "axis:y-axis:scale.y", "mark:lines:data",
        "mark:lines:scale.x", "mark:lines:scale.y"]
    data = next(c for c in cs.all() if c.kind == "data")
    assert data.op == "filter"


def test_aggregate_and_mark_type_detected():
    s, e, _ = load_fixture("aggregation")
    kinds = {c.kind: c for c in detect_changes(s, e).all()}
    assert kinds["data"].op == "aggregate"
    assert kinds["markType"].initial == "symbol" and kinds["markType"].final == "rect"


def test_dimension_detection_and_override():
    s, e, _ = load_fixture("dot_to_scatter")
    sx = next(c for c in detect_changes(s, e).all() if c.uid == "mark:homes:scale.x")
    assert sx.dimension == "different"
    sx = next(c for c in detect_changes(s, e, {"dimension": {"x": "same"}}).all()
              if c.uid == "mark:homes:scale.x")
    assert sx.dimension == "same"
    assert scale_dimension(s.scale("y"), e.scale("y")) == "same"


def test_view_shrink_size_effect():
    s, e, _ = load_fixture("sort_filter")
    view = next(c for c in detect_changes(s, e).all() if c.component[0] == "view")
    assert view.kind == "view.height" and view.size_effect["height"] == "shrinks"


def test_identical_charts_have_no_changes(zoom):
    start, _, _ = zoom
    assert len(detect_changes(start, start)) == 0


def _state_after(start, end, comp, kinds):
    s, e = endpoint_states(start, end, *comp)
    return apply_change(s, e, change_spec_for(comp[0], kinds))


def test_unavailable_scale_rule():
    doc0 = bar_doc([10, 20], 50)
    doc1 = bar_doc([10, 20], 50)
    doc1["scales"].append({"name": "c", "type": "ordinal-color", "domain": ["A", "B"],
                           "range": ["#ff0000", "#0000ff"]})
    doc1["marks"][0]["encode"]["color"] = {"field": "cat", "scale": "c"}
    s, e = chart_from_doc(doc0), chart_from_doc(doc1)
    st_ = _state_after(s, e, ("mark", "bars"), {"encode.color"})
    assert [v.rule for v in check_state(st_)] == ["Unavailable Scale"]
    assert check_state(_state_after(s, e, ("mark", "bars"), {"encode.color", "scale.c"})) == []


def test_unavailable_data_field_rule():
    s, e, _ = load_fixture("aggregation")
    docs = fixture_docs("aggregation")
    docs["end"]["datasets"][0]["transforms"][0]["aggregate"]["measures"][0]["as"] = "avg"
    docs["end"]["marks"][0]["encode"]["y"]["field"] = "avg"
    docs["end"]["scales"][1]["domainSource"]["field"] = "avg"
    e = chart_from_doc(docs["end"])
    st_ = _state_after(s, e, ("mark", "marks"), {"data"})
    assert "Unavailable Data Field" in [v.rule for v in check_state(st_)]


def test_unavailable_encoding_rule():
    s, e, _ = load_fixture("aggregation")
    st_ = _state_after(s, e, ("mark", "marks"), {"markType"})
    assert "Unavailable Encoding" in [v.rule for v in check_state(st_)]


def test_overflow_rule():
    s, e = bar_chart([80, 90], 100), bar_chart([40, 45], 50)
    st_ = _state_after(s, e, ("mark", "bars"), {"scale.y"})
    assert [v.rule for v in check_state(st_)] == ["Overflow"]
    assert check_state(_state_after(s, e, ("mark", "bars"), {"data"})) == []


def test_guide_join_same_and_different_dimension():
    s, e, _ = load_fixture("zoom_lines")
    axis = s.axis("y-axis")
    same = diff_guide_data(axis, s.scale("y"), e.scale("y"))
    assert not same.cross_fade and 0 in same.update
    ds, de, _ = load_fixture("dot_to_scatter")
    diff = diff_guide_data(ds.axis("x-axis"), ds.scale("x"), de.scale("x"))
    assert diff.cross_fade and not diff.update
