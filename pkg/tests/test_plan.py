import pytest
from hypothesis import given, strategies as st

from animtx.easing import EASES, ease_value
from animtx.errors import CompileError
from animtx.fixtures import ALL_FIXTURES, load_fixture
from animtx.grammar import StaggeringSpec
from animtx.plan import (blend_color, check_plan, compile_plan, interpolate_attrs, pair_vertices,
                         parse_plan, sample, serialize_plan)
from animtx.stagger import group_windows, order_values, resolve_stagger

from conftest import attrs_close, scene_attrs

unit = st.floats(0, 1, allow_nan=False)


@pytest.fixture(scope="module")
def plans():
    out = {}
    for name in ALL_FIXTURES:
        s, e, spec = load_fixture(name)
        out[name] = (s, e, compile_plan(s, e, spec))
    return out


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_endpoints_match_static_renders(plans, name):
    s, e, plan = plans[name]
    assert attrs_close(sample(plan, 0), scene_attrs(s, plan.keys))
    assert attrs_close(sample(plan, plan.total_ms), scene_attrs(e, plan.keys))


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_plans_are_well_formed(plans, name):
    assert check_plan(plans[name][2]) == []


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_plan_file_round_trip(plans, name):
    plan = plans[name][2]
    text = serialize_plan(plan)
    again = parse_plan(text)
    assert serialize_plan(again) == text
    for t in (0, plan.total_ms // 3, plan.total_ms):
        assert sample(again, t) == sample(plan, t)


def test_compile_is_deterministic():
    s, e, spec = load_fixture("dot_to_scatter")
    assert serialize_plan(compile_plan(s, e, spec)) == serialize_plan(compile_plan(s, e, spec))


def test_zoom_midpoint_has_final_scales_and_start_data(plans):
    s, e, plan = plans["zoom_lines"]
    frame = sample(plan, 1100)
    lines = {k: v for k, v in frame.items() if k.startswith("lines/mark/")}
    assert lines and all(len(v["points"]) == 6 for v in lines.values())
    # the 2005 vertex already sits where the 2005 year maps on the final x scale
    x2005 = (2005 - 2000) / (2010 - 2000) * 400
    assert all(abs(v["points"][-1][0] - x2005) < 1e-9 for v in lines.values())


def test_stagger_windows_in_plan(plans):
    _, _, plan = plans["dot_to_scatter"]
    marks = [tr for eid, tr in plan.tracks.items() if eid.startswith("homes/mark/")]
    starts = sorted({tr.segments[0].t0 for tr in marks})
    assert len(starts) > 1 and starts[0] == 0
    assert max(tr.segments[0].t1 for tr in marks) == 1000


def test_bar_rescale_picks_safe_order(plans):
    _, _, plan = plans["bar_rescale"]
    assert not plan.warnings
    first = [s for s in plan.schedule if s["startMs"] == 0]
    assert any(s["component"] == {"mark": "bars"} for s in first)


@given(st.dictionaries(st.sampled_from("abcxy"), st.floats(-1e6, 1e6), min_size=1),
       st.floats(-1e6, 1e6), unit)
def test_numeric_interpolation_is_linear(a0, shift, u):
    a1 = {k: v + shift for k, v in a0.items()}
    out = interpolate_attrs(a0, a1, u)
    for k in a0:
        assert abs(out[k] - (a0[k] + shift * u)) <= 1e-6 * (1 + abs(a0[k]) + abs(shift))


@given(st.dictionaries(st.sampled_from("abc"), st.floats(-1e6, 1e6), min_size=1),
       st.dictionaries(st.sampled_from("abc"), st.floats(-1e6, 1e6), min_size=1))
def test_interpolation_endpoints_exact(a0, a1):
    a1 = {k: a1.get(k, 0.0) for k in a0}
    assert interpolate_attrs(a0, a1, 0) == a0
    assert interpolate_attrs(a0, a1, 1) == a1


def test_mismatched_attribute_sets_rejected():
    with pytest.raises(CompileError):
        interpolate_attrs({"x": 1}, {"y": 1}, 0.5)


@given(st.from_regex(r"#[0-9a-f]{6}", fullmatch=True), st.from_regex(r"#[0-9a-f]{6}", fullmatch=True),
       unit)
def test_color_blend_stays_between(c0, c1, u):
    out = blend_color(c0, c1, u)
    for i in (1, 3, 5):
        lo, hi = sorted((int(c0[i:i + 2], 16), int(c1[i:i + 2], 16)))
        assert lo <= int(out[i:i + 2], 16) <= hi
    assert blend_color(c0, c1, 0) == c0 and blend_color(c0, c1, 1) == c1


def test_strings_snap_at_half():
    assert interpolate_attrs({"t": "a"}, {"t": "b"}, 0.49)["t"] == "a"
    assert interpolate_attrs({"t": "a"}, {"t": "b"}, 0.5)["t"] == "b"


def test_vertex_pairing_maps_missing_to_lower_neighbour():
    assert pair_vertices([1, 2, 3], [1, 2, 3, 4, 5]) == ((0, 0), (1, 1), (2, 2), (2, 3), (2, 4))
    assert pair_vertices([2, 3], [1, 2, 3]) == ((0, 0), (0, 1), (1, 2))


@pytest.mark.parametrize("name", sorted(EASES))
def test_eases_fix_endpoints_and_are_monotone(name):
    assert ease_value(name, 0) == 0 and ease_value(name, 1) == 1
    vals = [ease_value(name, i / 100) for i in range(101)]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


@given(st.integers(1, 50), unit, st.floats(1, 10000), st.sampled_from(sorted(EASES)))
def test_windows_stay_in_step(n, o, dur, ease):
    wins = group_windows(n, o, ease, 0, dur)
    assert len(wins) == n
    assert all(0 <= a <= b <= dur * (1 + 1e-12) for a, b in wins)
    assert abs(max(b for _, b in wins) - dur) <= 1e-9 * dur
    assert all(wins[i][0] <= wins[i + 1][0] for i in range(n - 1))


def test_order_values_explicit_then_rest():
    assert order_values(["b", "c", "a", "d"], ("c", "a")) == ["c", "a", "b", "d"]
    assert order_values([3, 1, 2], "descending") == [3, 2, 1]


def test_nested_staggering_stays_in_outer_window():
    inner = StaggeringSpec("inner", "j", overlap=0.0)
    outer = StaggeringSpec("outer", "i", overlap=0.0, staggering="inner")
    data = [{"i": i, "j": j} for i in range(3) for j in range(2)]
    wins = resolve_stagger(data, outer, 0, 600, {"inner": inner})
    by = {(d["i"], d["j"]): w for d, w in zip(data, wins)}
    assert by[(0, 0)] == (0.0, 100.0) and by[(0, 1)] == (100.0, 200.0)
    assert by[(2, 1)] == (500.0, 600.0)


def test_missing_stagger_field_is_an_error():
    with pytest.raises(CompileError):
        resolve_stagger([{"a": 1}], StaggeringSpec("s", "b"), 0, 100)
