"""The complexity cost model used to rank candidate timelines.

A stage costs ``max(0, W - C(duration) + B)``: W sums per-change weights, C is
a sigmoid capacity of the stage duration and B sums the bundling effects the
stage's change set triggers. Weights, capacity and bundling magnitudes come
from a JSON config; two presets ship with the package.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from . import docio
from .errors import DocumentError

COST_SCHEMA = ("costmodel", 1)
PRESETS = ("initial", "tuned")
WEIGHT_KEYS = ("signal", "view", "encode", "guide", "markType", "scale", "data.filter",
               "data.aggregate")
SPATIAL = ("x", "y", "x2", "y2", "width", "height")
NON_SPATIAL = ("color", "size", "shape", "opacity")


@dataclass(frozen=True)
class Capacity:
    ceiling: float
    midpoint_ms: float
    slope_ms: float
    intercept: float

    def __call__(self, t_ms: float) -> float:
        return capacity(t_ms, self)


def capacity(t_ms: float, params: Capacity) -> float:
    """``intercept + ceiling / (1 + exp(-(t - midpoint) / slope))``."""
    z = -(t_ms - params.midpoint_ms) / params.slope_ms
    if z > 700:  # exp overflow; the logistic term is 0 to double precision
        return float(params.intercept)
    return params.intercept + params.ceiling / (1 + math.exp(z))


# --------------------------------------------------------------------------
# bundling rules

def _mark_scales(stage):
    return [c for c in stage if c.component[0] == "mark" and c.kind.startswith("scale.")]


def _dimension_without_encode(stage) -> bool:
    kinds = {(c.component, c.kind) for c in stage}
    for c in _mark_scales(stage):
        if c.dimension == "different" and not any(
                (c.component, f"encode.{ch}") in kinds for ch in c.channels):
            return True
    return False


def _mark_axis_scale(stage) -> bool:
    axis = {c.kind for c in stage if c.component[0] == "axis" and c.kind.startswith("scale.")}
    return any(c.kind in axis and set(c.channels) & set(SPATIAL) for c in _mark_scales(stage))


def _mark_legend_scale(stage) -> bool:
    legend = {c.kind for c in stage if c.component[0] == "legend" and c.kind.startswith("scale.")}
    return any(c.kind in legend and set(c.channels) & set(NON_SPATIAL) for c in _mark_scales(stage))


def _xy_same_dimension(stage) -> bool:
    scales = _mark_scales(stage)
    xs = [c for c in scales if {"x", "x2", "width"} & set(c.channels)]
    ys = [c for c in scales if {"y", "y2", "height"} & set(c.channels)]
    return bool(xs) and bool(ys) and all(c.dimension != "different" for c in xs + ys)


def _non_spatial_together(stage) -> bool:
    names = {c.kind for c in _mark_scales(stage) if set(c.channels) & set(NON_SPATIAL)}
    return len(names) >= 2


@dataclass(frozen=True)
class BundlingRule:
    rule_id: str
    description: str
    effect: float

    def matches(self, stage) -> bool:
        return _MATCHERS[self.rule_id](stage)


_MATCHERS = {
    "dimension-without-encode": _dimension_without_encode,
    "mark-axis-scale": _mark_axis_scale,
    "mark-legend-scale": _mark_legend_scale,
    "xy-scales-same-dimension": _xy_same_dimension,
    "non-spatial-scales": _non_spatial_together,
}

RULE_TEXT = {
    "dimension-without-encode": "a scale changes its domain dimension while the encodings "
                                "using it stay unchanged",
    "mark-axis-scale": "a mark's spatial scale changes together with the axis on that scale",
    "mark-legend-scale": "a mark's non-spatial scale changes together with its legend",
    "xy-scales-same-dimension": "x and y scales of marks change together without a dimension change",
    "non-spatial-scales": "several non-spatial scales of marks change together",
}


@dataclass(frozen=True)
class CostModel:
    name: str
    weights: Mapping[str, float]
    capacity: Capacity
    bundling: tuple[BundlingRule, ...]

    def scaled(self, c: float) -> "CostModel":
        """Every magnitude multiplied by ``c`` (ranking is invariant for c > 0)."""
        cap = replace(self.capacity, ceiling=self.capacity.ceiling * c,
                      intercept=self.capacity.intercept * c)
        return CostModel(f"{self.name}*{c:g}", {k: v * c for k, v in self.weights.items()}, cap,
                         tuple(replace(r, effect=r.effect * c) for r in self.bundling))

    def to_doc(self) -> dict:
        cap = self.capacity
        return {"schema": docio.schema_tag(*COST_SCHEMA), "name": self.name,
                "weights": dict(self.weights),
                "bundling": {r.rule_id: r.effect for r in self.bundling},
                "capacity": {"ceiling": cap.ceiling, "midpointMs": cap.midpoint_ms,
                             "slopeMs": cap.slope_ms, "intercept": cap.intercept}}


def cost_model_from_doc(doc: Mapping, path: str | None = None) -> CostModel:
    docio.check_schema(doc, *COST_SCHEMA, path=path)
    try:
        weights = {k: float(doc["weights"][k]) for k in WEIGHT_KEYS}
        cap_doc = doc["capacity"]
        cap = Capacity(float(cap_doc["ceiling"]), float(cap_doc["midpointMs"]),
                       float(cap_doc["slopeMs"]), float(cap_doc["intercept"]))
        rules = tuple(BundlingRule(rid, RULE_TEXT[rid], float(doc["bundling"][rid]))
                      for rid in _MATCHERS)
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"incomplete cost model ({exc!r})", path=path) from None
    bad = [k for k, v in weights.items() if not v > 0]
    if bad:
        raise DocumentError(f"weights must be > 0: {bad}", path=path)
    if cap.ceiling <= 0 or cap.slope_ms <= 0:
        raise DocumentError("capacity ceiling and slope must be > 0", path=path)
    if not weights["markType"] < min(weights["data.filter"], weights["data.aggregate"]):
        raise DocumentError("the markType weight must stay below the data weights", path=path)
    return CostModel(doc.get("name", "custom"), weights, cap, rules)


def load_cost_model(name_or_path: str = "tuned") -> CostModel:
    """A preset by name (``initial``/``tuned``) or a cost model JSON file."""
    if name_or_path in PRESETS:
        text = resources.files(__package__).joinpath("costmodels").joinpath(f"{name_or_path}.json") \
            .read_text(encoding="utf-8")
        return cost_model_from_doc(json.loads(text), name_or_path)
    path = Path(name_or_path)
    return cost_model_from_doc(docio.loads(docio.read_text(path), str(path)), str(path))


# --------------------------------------------------------------------------
# scoring

def weight_key(change) -> str:
    kind, _ = change.component
    if kind == "view":
        return "view"
    if kind in ("axis", "legend"):
        return "guide"
    if change.kind == "data":
        return "data.aggregate" if change.op == "aggregate" else "data.filter"
    if change.kind == "markType":
        return "markType"
    return change.kind.split(".", 1)[0]


def stage_cost(stage, model: CostModel) -> float:
    """W: the summed weights of a stage's changes."""
    return math.fsum(model.weights[weight_key(c)] for c in stage)


def bundling_adjustment(stage, model: CostModel) -> float:
    """B: the summed effects of every bundling rule the stage matches."""
    return math.fsum(r.effect for r in model.bundling if r.matches(stage))


def stage_complexity(stage, duration_ms: float, model: CostModel) -> float:
    return max(0.0, stage_cost(stage, model) - capacity(duration_ms, model.capacity)
               + bundling_adjustment(stage, model))


def complexity(stages, durations, model: CostModel) -> float:
    """Sum over stages of ``max(0, W - C(duration) + B)``."""
    return math.fsum(stage_complexity(s, d, model) for s, d in zip(stages, durations))


def crossover_ms(a: Capacity, b: Capacity, lo: float = 0.0, hi: float = 5000.0) -> float:
    """Where two capacity curves cross (root of their difference in [lo, hi])."""
    from scipy.optimize import brentq
    return brentq(lambda t: capacity(t, a) - capacity(t, b), lo, hi, xtol=1e-9)
