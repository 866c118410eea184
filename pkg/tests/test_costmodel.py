import json

import pytest
from hypothesis import given, strategies as st

from animtx.changes import AtomicChange
from animtx.costmodel import (PRESETS, bundling_adjustment, capacity, complexity,
                              cost_model_from_doc, load_cost_model, stage_complexity, weight_key)
from animtx.errors import DocumentError

ms = st.floats(0, 10000, allow_nan=False)


def _doc(name="tuned"):
    return load_cost_model(name).to_doc()


@pytest.mark.parametrize("name", PRESETS)
@given(a=ms, b=ms)
def test_capacity_is_monotone_and_bounded(name, a, b):
    cap = load_cost_model(name).capacity
    lo, hi = sorted((a, b))
    assert capacity(lo, cap) <= capacity(hi, cap)
    assert cap.intercept <= capacity(lo, cap) <= cap.intercept + cap.ceiling


@pytest.mark.parametrize("name", PRESETS)
def test_preset_round_trip(name):
    model = load_cost_model(name)
    again = cost_model_from_doc(json.loads(json.dumps(model.to_doc())))
    assert again == model


def test_model_file_path_loads(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(_doc()), encoding="utf-8")
    assert load_cost_model(str(p)).weights == load_cost_model("tuned").weights


@pytest.mark.parametrize("mutate", [
    lambda d: d["weights"].pop("scale"),
    lambda d: d["weights"].update(encode=0),
    lambda d: d["weights"].update(markType=0.9),
    lambda d: d["capacity"].update(slopeMs=0),
    lambda d: d["capacity"].update(ceiling="big"),
    lambda d: d["bundling"].pop("mark-axis-scale"),
    lambda d: d.update(schema="animtx.costmodel/2"),
])
def test_invalid_configs_rejected(mutate):
    doc = _doc()
    mutate(doc)
    with pytest.raises(DocumentError):
        cost_model_from_doc(doc)


def test_weight_keys():
    assert weight_key(AtomicChange(("mark", "m"), "data", op="aggregate")) == "data.aggregate"
    assert weight_key(AtomicChange(("mark", "m"), "data", op="filter")) == "data.filter"
    assert weight_key(AtomicChange(("axis", "a"), "scale.x")) == "guide"
    assert weight_key(AtomicChange(("view", "view"), "view.width")) == "view"
    assert weight_key(AtomicChange(("mark", "m"), "encode.color")) == "encode"
    assert weight_key(AtomicChange(("mark", "m"), "markType")) == "markType"


def test_mark_and_axis_bundle_lowers_cost():
    model = load_cost_model("tuned")
    m = AtomicChange(("mark", "m"), "scale.x", dimension="same", channels=("x",))
    a = AtomicChange(("axis", "ax"), "scale.x")
    assert bundling_adjustment([m, a], model) == pytest.approx(-0.2)
    assert bundling_adjustment([m], model) == 0


def test_dimension_change_without_encode_costs_extra():
    model = load_cost_model("tuned")
    m = AtomicChange(("mark", "m"), "scale.x", dimension="different", channels=("x",))
    e = AtomicChange(("mark", "m"), "encode.x")
    assert bundling_adjustment([m], model) == pytest.approx(0.4)
    assert bundling_adjustment([m, e], model) == 0


@given(st.floats(0.01, 100), st.integers(1, 5000))
def test_scaling_scales_complexity(c, dur):
    model = load_cost_model("tuned")
    stage = [AtomicChange(("mark", "m"), "data", op="aggregate"),
             AtomicChange(("mark", "m"), "scale.y", dimension="same", channels=("y",))]
    want = stage_complexity(stage, dur, model) * c
    assert stage_complexity(stage, dur, model.scaled(c)) == pytest.approx(want, rel=1e-9, abs=1e-12)


@given(st.integers(1, 5000), st.integers(0, 3000))
def test_longer_stage_never_costs_more(dur, extra):
    model = load_cost_model("tuned")
    stages = [[AtomicChange(("mark", "m"), "data", op="filter")]]
    assert complexity(stages, [dur + extra], model) <= complexity(stages, [dur], model)
