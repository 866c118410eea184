"""Static rendering of charts and component states into flat scene graphs.

Every scene element has an id ``component/role/joinKey`` and a flat attribute
map. Symbol and rect marks share one attribute set (``x y width height size
shape fill opacity``) so mark-type changes between them interpolate; for
``shape == "rect"`` the position is the top-left corner, otherwise the centre.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from . import docio
from .chart import ChartSpec
from .errors import ChartError, JoinError, ScaleOverflow
from .scales import bandwidth, position, scale_apply, scale_ticks
from .state import ComponentState, KeyPolicy, chart_components, state_from_chart

ROLES = ("mark", "axis-tick", "axis-label", "axis-grid", "axis-title", "axis-domain",
         "legend-symbol", "legend-label", "legend-title", "view-frame")

DEFAULT_FILL = "#4c78a8"
GUIDE_STROKE = "#888888"
GRID_STROKE = "#dddddd"
TEXT_FILL = "#000000"
DEFAULT_SIZE = 64
TICK_LEN = 5
LEGEND_ROW = 16

_AXIS_PART_ROLE = {"domain": "axis-domain", "ticks": "axis-tick", "labels": "axis-label",
                   "grid": "axis-grid", "title": "axis-title"}
_LEGEND_PART_ROLE = {"symbols": "legend-symbol", "labels": "legend-label", "title": "legend-title"}


@dataclass
class SceneElement:
    element_id: str
    role: str
    attrs: dict
    datum: Mapping[str, Any] | None = None
    vertex_keys: tuple | None = None
    component: tuple[str, str] = ("", "")

    def to_doc(self) -> dict:
        return {"id": self.element_id, "role": self.role, "attrs": self.attrs}


@dataclass
class SceneGraph:
    elements: list[SceneElement] = field(default_factory=list)

    def __post_init__(self):
        self._index = {}
        for el in self.elements:
            if el.element_id in self._index:
                raise ChartError(f"duplicate element id {el.element_id!r}")
            self._index[el.element_id] = el

    def __getitem__(self, element_id: str) -> SceneElement:
        return self._index[element_id]

    def __contains__(self, element_id: str) -> bool:
        return element_id in self._index

    def __len__(self) -> int:
        return len(self.elements)

    def ids(self) -> list[str]:
        return [e.element_id for e in self.elements]

    def attrs(self) -> dict[str, dict]:
        return {e.element_id: e.attrs for e in self.elements}

    def by_role(self, role: str) -> list[SceneElement]:
        return [e for e in self.elements if e.role == role]


def fmt_value(v: Any) -> str:
    """Stable text for a datum value (labels and join keys)."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v))
        return f"{v:.12g}"
    return str(v)


def _eid(component: str, role: str, key: Any) -> str:
    return f"{component}/{role}/{key}"


# --------------------------------------------------------------------------
# marks

class _Channels:
    """Evaluates a state's encodings for single rows."""

    def __init__(self, state: ComponentState, strict: bool):
        self.state = state
        self.strict = strict

    def scale(self, name: str):
        sc = self.state.scales.get(name)
        if sc is None:
            raise ChartError(f"mark {self.state.name!r}: scale {name!r} is unavailable")
        return sc

    def has(self, ch: str) -> bool:
        return ch in self.state.encodings

    def get(self, ch: str, row: Mapping, default=None):
        enc = self.state.encodings.get(ch)
        if enc is None:
            return default
        if enc.band:
            return bandwidth(self.scale(enc.scale))
        if enc.field is not None:
            if enc.field not in row:
                raise ChartError(f"mark {self.state.name!r}: field {enc.field!r} is unavailable")
            v = row[enc.field]
            if enc.scale is None:
                return v
        else:
            v = enc.value
            if enc.scale is None:
                return v
        sc = self.scale(enc.scale)
        out, overflow = scale_apply(sc, v)
        if overflow and self.strict:
            raise ScaleOverflow(
                f"mark {self.state.name!r}: {ch}={v!r} overflows scale {sc.name!r} domain")
        return out


def _row_keys(state: ComponentState, policy: KeyPolicy | None) -> list[str]:
    rows = state.rows
    fields = (policy or KeyPolicy()).fields_for(state.mark, state.dataset, rows)
    if fields is None:
        return [f"#{i}" for i in range(len(rows))]
    keys = ["|".join(fmt_value(r[f]) for f in fields) for r in rows]
    seen = set()
    for k in keys:
        if k in seen:
            raise JoinError(f"mark {state.name!r}: duplicate join key {k!r} on fields {list(fields)}")
        seen.add(k)
    return keys


def _area_attrs(ch: _Channels, mtype: str, row: Mapping) -> dict:
    fill = ch.get("color", row, DEFAULT_FILL)
    opacity = ch.get("opacity", row, 1)
    if mtype == "symbol":
        size = ch.get("size", row, DEFAULT_SIZE)
        side = math.sqrt(size) if size > 0 else 0.0
        return {"x": ch.get("x", row, 0), "y": ch.get("y", row, 0), "width": side,
                "height": side, "size": size, "shape": ch.get("shape", row, "circle"),
                "fill": fill, "opacity": opacity}
    x = ch.get("x", row, 0)
    if ch.has("x2"):
        x2 = ch.get("x2", row)
        left, w = min(x, x2), abs(x2 - x)
    elif ch.has("width"):
        left, w = x, ch.get("width", row)
    else:
        raise ChartError(f"mark {ch.state.name!r}: rect needs a width or x2 encoding")
    y = ch.get("y", row, 0)
    if ch.has("y2"):
        y2 = ch.get("y2", row)
        top, h = min(y, y2), abs(y2 - y)
    elif ch.has("height"):
        top, h = y, ch.get("height", row)
    else:
        raise ChartError(f"mark {ch.state.name!r}: rect needs a height or y2 encoding")
    return {"x": left, "y": top, "width": w, "height": h, "size": w * h, "shape": "rect",
            "fill": fill, "opacity": opacity}


def _line_elements(state: ComponentState, ch: _Channels) -> list[SceneElement]:
    enc = state.encodings
    if "x" not in enc or "y" not in enc:
        raise ChartError(f"mark {state.name!r}: line needs x and y encodings")
    color = enc.get("color")
    group_field = color.field if color is not None and color.field is not None else None
    order_field = state.mark.order or enc["x"].field
    groups: dict[str, list[Mapping]] = {}
    for row in state.rows:
        gkey = fmt_value(row[group_field]) if group_field else "all"
        groups.setdefault(gkey, []).append(row)
    out = []
    for gkey, rows in groups.items():
        if order_field is not None:
            rows = sorted(rows, key=lambda r: r[order_field])
            vkeys = tuple(r[order_field] for r in rows)
            if len(set(vkeys)) != len(vkeys):
                raise JoinError(f"mark {state.name!r}: duplicate vertex key in group {gkey!r}")
        else:
            vkeys = tuple(range(len(rows)))
        points = [[ch.get("x", r), ch.get("y", r)] for r in rows]
        attrs = {"points": points, "stroke": ch.get("color", rows[0], DEFAULT_FILL),
                 "opacity": ch.get("opacity", rows[0], 1)}
        datum = dict(rows[0])
        out.append(SceneElement(_eid(state.name, "mark", gkey), "mark", attrs, datum, vkeys,
                                state.key))
    return out


def mark_elements(state: ComponentState, policy: KeyPolicy | None = None,
                  strict: bool = True) -> list[SceneElement]:
    if not state.present:
        return []
    ch = _Channels(state, strict)
    mtype = state.mark_type
    if mtype == "line":
        return _line_elements(state, ch)
    out = []
    for key, row in zip(_row_keys(state, policy), state.rows):
        if mtype == "text":
            attrs = {"x": ch.get("x", row, 0), "y": ch.get("y", row, 0),
                     "text": fmt_value(ch.get("text", row, "")),
                     "fill": ch.get("color", row, TEXT_FILL), "opacity": ch.get("opacity", row, 1)}
        else:
            attrs = _area_attrs(ch, mtype, row)
        out.append(SceneElement(_eid(state.name, "mark", key), "mark", attrs, dict(row), None,
                                state.key))
    return out


# --------------------------------------------------------------------------
# guides

def _apply_overrides(state: ComponentState, part: str, attrs: dict) -> dict:
    extra = state.overrides.get(part)
    if extra:
        attrs = {**attrs, **{k: v for k, v in extra.items() if k in attrs}}
    return attrs


def guide_scale(state: ComponentState):
    sc = state.scales.get(state.guide.scale)
    if sc is None:
        raise ChartError(f"{state.kind} {state.name!r}: scale {state.guide.scale!r} is unavailable")
    return sc


def guide_values(state: ComponentState) -> list:
    """Domain values the guide shows (ticks for axes, entries for legends)."""
    sc = guide_scale(state)
    count = state.guide.tick_count if state.kind == "axis" else 5
    return scale_ticks(sc, count)


def axis_elements(state: ComponentState) -> list[SceneElement]:
    if not state.present:
        return []
    axis = state.guide
    sc = guide_scale(state)
    W, H = state.signals["width"], state.signals["height"]
    name = state.name
    values = guide_values(state)
    src_field = sc.domain_source[1] if sc.domain_source else None
    r0, r1 = sc.range
    lo, hi = min(r0, r1), max(r0, r1)
    out: list[SceneElement] = []

    def add(part, key, attrs, datum=None):
        role = _AXIS_PART_ROLE[part]
        out.append(SceneElement(_eid(name, role, key), role, _apply_overrides(state, part, attrs),
                                datum, None, state.key))

    horizontal = axis.orient == "x"
    mid = (lo + hi) / 2
    if "domain" in axis.parts:
        if horizontal:
            add("domain", 0, {"x": lo, "y": H, "width": hi - lo, "height": 0,
                              "stroke": GUIDE_STROKE, "opacity": 1})
        else:
            add("domain", 0, {"x": 0, "y": lo, "width": 0, "height": hi - lo,
                              "stroke": GUIDE_STROKE, "opacity": 1})
    for part in ("grid", "ticks", "labels"):
        if part not in axis.parts:
            continue
        for v in values:
            pos, _ = position(sc, v)
            key = fmt_value(v)
            datum = {"value": v}
            if src_field:
                datum[src_field] = v
            if part == "ticks":
                attrs = ({"x": pos, "y": H, "width": 0, "height": TICK_LEN} if horizontal else
                         {"x": -TICK_LEN, "y": pos, "width": TICK_LEN, "height": 0})
                attrs.update(stroke=GUIDE_STROKE, opacity=1)
            elif part == "grid":
                attrs = ({"x": pos, "y": 0, "width": 0, "height": H} if horizontal else
                         {"x": 0, "y": pos, "width": W, "height": 0})
                attrs.update(stroke=GRID_STROKE, opacity=1)
            else:
                attrs = ({"x": pos, "y": H + 15} if horizontal else {"x": -8, "y": pos})
                attrs.update(text=key, fill=TEXT_FILL, opacity=1)
            add(part, key, attrs, datum)
    if "title" in axis.parts:
        attrs = ({"x": mid, "y": H + 30} if horizontal else {"x": -35, "y": mid})
        attrs.update(text=axis.title, fill=TEXT_FILL, opacity=1)
        add("title", 0, attrs)
    return out


def legend_elements(state: ComponentState) -> list[SceneElement]:
    if not state.present:
        return []
    legend = state.guide
    sc = guide_scale(state)
    W = state.signals["width"]
    x0 = W + 20
    name = state.name
    out: list[SceneElement] = []

    def add(part, key, attrs, datum=None):
        role = _LEGEND_PART_ROLE[part]
        out.append(SceneElement(_eid(name, role, key), role, _apply_overrides(state, part, attrs),
                                datum, None, state.key))

    if "title" in legend.parts:
        add("title", 0, {"x": x0, "y": 0, "text": legend.title, "fill": TEXT_FILL, "opacity": 1})
    for i, v in enumerate(guide_values(state)):
        y = LEGEND_ROW * (i + 1)
        key = fmt_value(v)
        datum = {"value": v}
        if "symbols" in legend.parts:
            mapped, _ = scale_apply(sc, v)
            attrs = {"x": x0, "y": y, "fill": DEFAULT_FILL, "size": DEFAULT_SIZE,
                     "shape": "circle", "opacity": 1}
            if legend.channel == "color":
                attrs["fill"] = mapped
            elif legend.channel == "size":
                attrs["size"] = mapped
            else:
                attrs["shape"] = mapped
            add("symbols", key, attrs, datum)
        if "labels" in legend.parts:
            add("labels", key, {"x": x0 + 12, "y": y, "text": key, "fill": TEXT_FILL,
                                "opacity": 1}, datum)
    return out


def view_elements(state: ComponentState) -> list[SceneElement]:
    attrs = {"x": 0, "y": 0, "width": state.signals["width"], "height": state.signals["height"],
             "fill": "#ffffff", "stroke": "#cccccc", "opacity": 1}
    attrs = _apply_overrides(state, "frame", attrs)
    return [SceneElement(_eid(state.name, "view-frame", 0), "view-frame", attrs, None, None,
                         state.key)]


def render_component(state: ComponentState, policy: KeyPolicy | None = None,
                     strict: bool = True) -> list[SceneElement]:
    """Scene elements of one component state."""
    if state.kind == "mark":
        return mark_elements(state, policy, strict)
    if state.kind == "axis":
        return axis_elements(state)
    if state.kind == "legend":
        return legend_elements(state)
    return view_elements(state)


def render_scene(chart: ChartSpec, keys: Mapping[str, KeyPolicy] | None = None,
                 strict: bool = True) -> SceneGraph:
    """Render a whole chart. Overflow is an error unless ``strict`` is False."""
    elements: list[SceneElement] = []
    for kind, name in chart_components(chart):
        state = state_from_chart(chart, kind, name)
        policy = (keys or {}).get(name) if kind == "mark" else None
        elements.extend(render_component(state, policy, strict))
    _check_finite(elements)
    return SceneGraph(elements)


def _check_finite(elements) -> None:
    for el in elements:
        for k, v in el.attrs.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise ChartError(f"{el.element_id}: attribute {k} is not finite")


def serialize_scene(scene: SceneGraph) -> str:
    return docio.dumps([e.to_doc() for e in scene.elements])
