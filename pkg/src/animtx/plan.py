"""Animation plans: compilation, interpolation, sampling and the plan file.

A plan holds one track per scene element. A track has the element's attrs at
t=0 (or null when it is not on screen yet) and time-ordered segments; each
segment eases from ``attrs0`` to ``attrs1`` over ``[t0, t1]``. The rules in
:func:`interpolate_attrs` and :func:`sample_track` are the whole contract a
renderer has to implement.
"""

from __future__ import annotations

import bisect
import math
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

from . import docio
from .chart import ChartSpec, apply_transforms
from .changes import (bind_dataset, join_aggregate, overflows, scale_dimension,
                      thread_step_states)
from .easing import ease_value
from .errors import AnimtxError, CompileError, DocumentError
from .grammar import Concat, DataChange, TransitionSpec, iter_blocks
from .scene import render_component, render_scene
from .scheduler import (Schedule, expand_enumerators, reorder, resolve_auto_scale_order,
                        resolve_enumerator_values, schedule_timeline)
from .stagger import resolve_stagger
from .state import KeyPolicy, resolve_key_policy

PLAN_SCHEMA = ("plan", 1)
SEGMENT_ROLES = ("enter", "update", "exit")
GUIDE_VALUE_ROLES = ("axis-tick", "axis-label", "axis-grid", "legend-symbol", "legend-label")


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    attrs0: dict
    attrs1: dict
    ease: str
    role: str
    pairs: tuple | None = None

    def to_doc(self) -> dict:
        doc = {"t0": self.t0, "t1": self.t1, "attrs0": self.attrs0, "attrs1": self.attrs1,
               "ease": self.ease, "role": self.role}
        if self.pairs is not None:
            doc["pairs"] = [list(p) for p in self.pairs]
        return doc


@dataclass
class Track:
    element_id: str
    role: str
    initial: dict | None
    segments: list[Segment] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {"role": self.role, "initial": self.initial,
                "segments": [s.to_doc() for s in self.segments]}


@dataclass
class AnimationPlan:
    total_ms: int
    tracks: dict[str, Track]
    schedule: list = field(default_factory=list)
    keys: dict[str, KeyPolicy] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


# --------------------------------------------------------------------------
# interpolation

def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_color(v) -> bool:
    return isinstance(v, str) and len(v) == 7 and v[0] == "#"


def _blend(a: float, b: float, u: float) -> float:
    return a * (1 - u) + b * u


def blend_color(c0: str, c1: str, u: float) -> str:
    """Channel-wise RGB blend, rounding half up."""
    out = []
    for i in (1, 3, 5):
        x = _blend(int(c0[i:i + 2], 16), int(c1[i:i + 2], 16), u)
        out.append(min(255, max(0, math.floor(x + 0.5))))
    return "#" + "".join(f"{c:02x}" for c in out)


def interpolate_attrs(attrs0: Mapping, attrs1: Mapping, u: float, pairs=None) -> dict:
    """Attributes at eased progress ``u``: exactly ``attrs0`` at 0 and
    ``attrs1`` at 1; numbers blend linearly, colours per RGB channel, line
    points vertex-wise through ``pairs``, anything else snaps at 0.5."""
    if set(attrs0) != set(attrs1):
        raise CompileError(f"attribute sets differ: {sorted(attrs0)} vs {sorted(attrs1)}")
    if u <= 0:
        return dict(attrs0)
    if u >= 1:
        return dict(attrs1)
    out = {}
    for k, v0 in attrs0.items():
        v1 = attrs1[k]
        if k == "points":
            p = pairs if pairs is not None else [(i, i) for i in range(len(v0))]
            if pairs is None and len(v0) != len(v1):
                raise CompileError("point counts differ and no vertex pairing was given")
            out[k] = [[_blend(v0[i][0], v1[j][0], u), _blend(v0[i][1], v1[j][1], u)]
                      for i, j in p]
        elif _is_num(v0) and _is_num(v1):
            out[k] = _blend(v0, v1, u)
        elif _is_color(v0) and _is_color(v1):
            out[k] = blend_color(v0, v1, u)
        else:
            out[k] = v1 if u >= 0.5 else v0
    return out


def _vertex_key(v):
    return (0, v, "") if _is_num(v) else (1, 0, str(v))


def pair_vertices(keys0, keys1) -> tuple:
    """Index pairs over the union of two vertex key lists. A vertex missing
    on one side is paired with that side's neighbouring vertex (the lower
    one, or the first when it comes before all of them)."""
    idx0 = {k: i for i, k in enumerate(keys0)}
    idx1 = {k: i for i, k in enumerate(keys1)}
    union = sorted(set(keys0) | set(keys1), key=_vertex_key)

    def near(idx, keys, k):
        if k in idx:
            return idx[k]
        ordered = sorted(keys, key=_vertex_key)
        pos = bisect.bisect_left([_vertex_key(x) for x in ordered], _vertex_key(k))
        return idx[ordered[max(pos - 1, 0)]]

    return tuple((near(idx0, keys0, k), near(idx1, keys1, k)) for k in union)


# --------------------------------------------------------------------------
# sampling

def sample_track(track: Track, t: float) -> dict | None:
    """Attributes of one element at time ``t``; None when not on screen."""
    segs = track.segments
    i = bisect.bisect_right([s.t0 for s in segs], t) - 1
    if i < 0:
        return dict(track.initial) if track.initial is not None else None
    s = segs[i]
    if t >= s.t1:
        return None if s.role == "exit" else dict(s.attrs1)
    if s.role == "enter" and t <= s.t0:
        return None
    u = (t - s.t0) / (s.t1 - s.t0)
    return interpolate_attrs(s.attrs0, s.attrs1, ease_value(s.ease, u), s.pairs)


def sample(plan: AnimationPlan, t: float) -> dict[str, dict]:
    """Every on-screen element's attributes at time ``t``."""
    out = {}
    for eid, tr in plan.tracks.items():
        a = sample_track(tr, t)
        if a is not None:
            out[eid] = a
    return out


# --------------------------------------------------------------------------
# timeline preparation

@dataclass
class Prepared:
    block: Any
    schedule: Schedule
    thread: Any
    keys: dict[str, KeyPolicy]
    warnings: list[str]
    total: Any


def _replace_at(block, path, new):
    if not path:
        return new
    kids = list(block.blocks)
    kids[path[0]] = _replace_at(kids[path[0]], path[1:], new)
    return replace(block, blocks=tuple(kids))


def _get_at(block, path):
    for i in path:
        block = block.blocks[i]
    return block


def resolve_keys(spec: TransitionSpec, start: ChartSpec, end: ChartSpec) -> dict[str, KeyPolicy]:
    user = {}
    from .grammar import iter_steps
    for _, step in iter_steps(spec.timeline):
        data = step.change.data
        if step.component.kind == "mark" and isinstance(data, DataChange) and data.keys:
            user.setdefault(step.component.name, data.keys)
    names = [m.name for m in start.marks] + [m.name for m in end.marks if start.mark(m.name) is None]
    return {n: resolve_key_policy(start, end, n, user.get(n)) for n in names}


def prepare_timeline(spec: TransitionSpec, start: ChartSpec, end: ChartSpec,
                     total_duration=None) -> Prepared:
    """Expand enumerators, settle autoScaleOrder, schedule and thread states."""
    total = total_duration if total_duration is not None else spec.total_duration
    keys = resolve_keys(spec, start, end)
    block = expand_enumerators(spec.timeline, start, end)
    warnings: list[str] = []

    def run(b):
        sched = schedule_timeline(b, 0, total)
        return sched, thread_step_states(sched, start, end, keys)

    paths = [p for p, b in iter_blocks(block) if isinstance(b, Concat) and b.auto_scale_order]
    for path in paths:
        concat = _get_at(block, path)
        names = set(concat.auto_scale_order)

        def is_valid(order, path=path, concat=concat, names=names):
            trial = _replace_at(block, path, reorder(concat, order))
            try:
                _, th = run(trial)
            except AnimtxError:
                return False
            states = [st.final for st in th.steps] + list(th.initials.values())
            return not any(s.kind == "mark" and s.name in names and overflows(s) for s in states)

        order, warning = resolve_auto_scale_order(concat, is_valid)
        block = _replace_at(block, path, reorder(concat, order))
        if warning:
            warnings.append(warning)
    sched, thread = run(block)
    return Prepared(block, sched, thread, keys, warnings, total)


# --------------------------------------------------------------------------
# compilation

def _num(x):
    x = Fraction(x)
    return int(x) if x.denominator == 1 else float(x)


def _faded(attrs: Mapping) -> dict:
    return {**attrs, "opacity": 0}


def _sub_states(st, start: ChartSpec, end: ChartSpec):
    """Final states of each enumerator value inside one step."""
    step = st.scheduled.step
    enum = step.enumerator
    if enum is None or step.component.kind != "mark" or step.change.data is False:
        return [st.final]
    ds_name = st.final.dataset.name
    values = resolve_enumerator_values(enum, start, end, dataset=ds_name)
    states = []
    for v in values[:-1]:
        ds = bind_dataset(st.final.dataset, [(enum.field, enum.op, v)])
        states.append(replace(st.final, dataset=ds, rows=apply_transforms(ds)))
    states.append(st.final)
    return states


def _aggregate_targets(st, policy) -> tuple[dict, dict]:
    """Exit targets (raw -> aggregate) and enter sources (aggregate -> raw)."""
    exit_to, enter_from = {}, {}
    a, b = st.initial, st.final
    if a.kind != "mark" or a.mark_type == "line" or b.mark_type == "line" \
            or not (a.present and b.present):
        return exit_to, enter_from
    agg_a, agg_b = a.dataset.aggregate, b.dataset.aggregate
    if (agg_a is None) == (agg_b is None):
        return exit_to, enter_from
    raw, agg = (a, b) if agg_b is not None else (b, a)
    groupby = (agg_b or agg_a).groupby
    if not groupby or not raw.rows or not all(g in raw.rows[0] for g in groupby):
        return exit_to, enter_from
    try:
        pairs = join_aggregate(raw.rows, agg.rows, groupby)
    except AnimtxError:
        return exit_to, enter_from
    raw_els = render_component(raw, policy, strict=False)
    agg_els = render_component(agg, policy, strict=False)
    mapping = {raw_els[i].element_id: agg_els[j].attrs for i, j in pairs}
    return (mapping, {}) if raw is a else ({}, mapping)


def _cross_fade(st) -> bool:
    a, b = st.initial, st.final
    if a.kind not in ("axis", "legend") or not (a.present and b.present):
        return False
    s0, s1 = a.scales.get(a.guide.scale), b.scales.get(b.guide.scale)
    if s0 is None or s1 is None or s0 == s1:
        return False
    dim = st.scheduled.step.change.domain_dimension or scale_dimension(s0, s1)
    return dim == "different"


def _emit_step(st, tracks: dict[str, Track], spec: TransitionSpec, keys, start, end) -> None:
    ss = st.scheduled
    step = ss.step
    comp = step.component
    policy = keys.get(comp.name) if comp.kind == "mark" else None
    states = [st.initial] + _sub_states(st, start, end)
    try:
        renders = [render_component(s, policy, strict=False) for s in states]
    except AnimtxError as exc:
        raise CompileError(f"{comp} at {ss.start_ms}-{ss.end_ms} ms: {exc}") from None
    except (TypeError, KeyError, ValueError) as exc:
        raise CompileError(f"{comp} at {ss.start_ms}-{ss.end_ms} ms: cannot render ({exc})") from None
    index = [{el.element_id: el for el in r} for r in renders]
    ids = list(dict.fromkeys(eid for idx in index for eid in idx))
    for idx in index:
        for eid, el in idx.items():
            tracks.setdefault(eid, Track(eid, el.role, None))

    ease = step.timing.ease
    t0, t1 = ss.start_ms, ss.end_ms

    def push(eid, seg):
        tr = tracks[eid]
        if tr.segments and seg.t0 < tr.segments[-1].t1:
            raise CompileError(f"{eid}: overlapping segments")
        tr.segments.append(seg)

    if _cross_fade(st):
        mid = Fraction(t0 + t1, 2)
        a_idx, b_idx = index[0], index[-1]
        for eid in ids:
            a, b = a_idx.get(eid), b_idx.get(eid)
            swap = (a or b).role in GUIDE_VALUE_ROLES
            if a is not None and b is not None and not swap:
                push(eid, Segment(t0, t1, a.attrs, b.attrs, ease, "update"))
                continue
            if a is not None:
                push(eid, Segment(t0, _num(mid), a.attrs, _faded(a.attrs), ease, "exit"))
            if b is not None:
                push(eid, Segment(_num(mid), t1, _faded(b.attrs), b.attrs, ease, "enter"))
        return

    if step.timing.staggering is not None:
        stag = spec.staggerings[step.timing.staggering]
        data = []
        for eid in ids:
            el = next((idx[eid] for idx in reversed(index) if eid in idx), None)
            data.append(el.datum if el is not None else None)
        windows = dict(zip(ids, resolve_stagger(data, stag, t0, t1 - t0, spec.staggerings)))
    else:
        windows = {eid: (t0, t1) for eid in ids}

    exit_to, enter_from = ({}, {})
    if len(states) == 2:
        exit_to, enter_from = _aggregate_targets(st, policy)
    from_initial = isinstance(step.change.data, DataChange) and step.change.data.enter_from_initial
    initial_pos = {}
    if from_initial and comp.kind == "mark":
        probe = replace(st.initial, rows=st.final.rows, present=True)
        try:
            initial_pos = {e.element_id: e.attrs for e in render_component(probe, policy, strict=False)}
        except AnimtxError:
            initial_pos = {}

    k = len(states) - 1
    for eid in ids:
        w0, w1 = (Fraction(x) for x in windows[eid])
        for j in range(1, k + 1):
            s0 = _num(w0 + (w1 - w0) * (j - 1) / k)
            s1 = _num(w0 + (w1 - w0) * j / k)
            a, b = index[j - 1].get(eid), index[j].get(eid)
            if a is not None and b is not None:
                pairs = None
                if "points" in a.attrs and (a.vertex_keys != b.vertex_keys):
                    pairs = pair_vertices(a.vertex_keys, b.vertex_keys)
                if set(a.attrs) != set(b.attrs):
                    raise CompileError(f"{eid}: cannot interpolate {sorted(a.attrs)} to "
                                       f"{sorted(b.attrs)} (mark type change not supported)")
                push(eid, Segment(s0, s1, a.attrs, b.attrs, ease, "update", pairs))
            elif b is not None:
                src = enter_from.get(eid) or initial_pos.get(eid)
                src = src if src is not None and set(src) == set(b.attrs) else b.attrs
                push(eid, Segment(s0, s1, _faded(src), b.attrs, ease, "enter"))
            elif a is not None:
                dst = exit_to.get(eid)
                dst = dst if dst is not None and set(dst) == set(a.attrs) else a.attrs
                push(eid, Segment(s0, s1, a.attrs, _faded(dst), ease, "exit"))


def compile_plan(start: ChartSpec, end: ChartSpec, spec: TransitionSpec,
                 total_duration=None) -> AnimationPlan:
    """Compile a transition between two charts into an animation plan."""
    prep = prepare_timeline(spec, start, end, total_duration)
    scene = render_scene(start, prep.keys, strict=True)
    render_scene(end, prep.keys, strict=True)
    tracks = {el.element_id: Track(el.element_id, el.role, dict(el.attrs)) for el in scene.elements}
    for st in prep.thread.steps:
        _emit_step(st, tracks, spec, prep.keys, start, end)
    return AnimationPlan(prep.schedule.total_end_ms, tracks, prep.schedule.to_doc(), prep.keys,
                         prep.warnings)


# --------------------------------------------------------------------------
# plan file

def plan_to_doc(plan: AnimationPlan) -> dict:
    return {
        "schema": docio.schema_tag(*PLAN_SCHEMA),
        "totalDurationMs": plan.total_ms,
        "tracks": {eid: tr.to_doc() for eid, tr in plan.tracks.items()},
        "schedule": plan.schedule,
        "keys": {k: v.to_doc() for k, v in plan.keys.items()},
        "warnings": list(plan.warnings),
    }


def serialize_plan(plan: AnimationPlan, *, pretty: bool = False) -> str:
    return docio.dumps(plan_to_doc(plan), pretty=pretty)


def plan_from_doc(doc: Mapping, path: str | None = None) -> AnimationPlan:
    docio.check_schema(doc, *PLAN_SCHEMA, path=path)
    try:
        tracks = {}
        for eid, td in doc["tracks"].items():
            segs = []
            for sd in td["segments"]:
                if sd["role"] not in SEGMENT_ROLES:
                    raise DocumentError(f"track {eid!r}: bad segment role {sd['role']!r}", path=path)
                pairs = sd.get("pairs")
                segs.append(Segment(sd["t0"], sd["t1"], sd["attrs0"], sd["attrs1"], sd["ease"],
                                    sd["role"], tuple(tuple(p) for p in pairs) if pairs is not None
                                    else None))
            tracks[eid] = Track(eid, td["role"], td["initial"], segs)
        keys = {k: KeyPolicy.from_doc(v) for k, v in doc.get("keys", {}).items()}
        return AnimationPlan(doc["totalDurationMs"], tracks, doc.get("schedule", []), keys,
                             list(doc.get("warnings", [])))
    except (KeyError, TypeError, AttributeError) as exc:
        raise DocumentError(f"malformed plan document ({exc!r})", path=path) from None


def parse_plan(text: str | bytes, path: str | None = None) -> AnimationPlan:
    return plan_from_doc(docio.loads(text, path), path)


def check_plan(plan: AnimationPlan) -> list[str]:
    """Structural problems of a plan (empty when well formed)."""
    problems = []
    for eid, tr in plan.tracks.items():
        prev = None
        for s in tr.segments:
            if not (0 <= s.t0 <= s.t1 <= plan.total_ms):
                problems.append(f"{eid}: segment [{s.t0}, {s.t1}] outside [0, {plan.total_ms}]")
            if prev is not None:
                if s.t0 < prev.t1:
                    problems.append(f"{eid}: segments overlap at {s.t0}")
                if prev.role != "exit" and s.role != "enter" and s.attrs0 != prev.attrs1:
                    problems.append(f"{eid}: segment at {s.t0} does not continue the previous one")
            elif tr.initial is not None and s.role != "enter" and s.attrs0 != tr.initial:
                problems.append(f"{eid}: first segment does not start from the initial attrs")
            prev = s
    return problems
