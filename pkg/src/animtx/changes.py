"""Change fetching: data joins, change detection between two charts, and
threading of per-step component states through a schedule.

Each step turns an initial component state into a final one. The initial
state continues from the component's previous step (or the start chart);
the final state takes every aspect the step's change enables from the end
chart and keeps the rest.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any

from .chart import (CONTINUOUS_KINDS, MARK_CHANNELS, ChartSpec, DatasetDef, FilterTransform,
                    LEGEND_CHANNEL_KINDS, parse_encoding, scale_to_doc)
from .errors import ChartError, JoinError, ThreadingError
from .grammar import ChangeSpec, DataChange
from .scales import in_domain
from .scene import render_component
from .state import (ComponentState, KeyPolicy, endpoint_states, paired_components,
                    state_from_chart)

DIMS = ("width", "height")


# --------------------------------------------------------------------------
# joins

@dataclass(frozen=True)
class JoinResult:
    enter: tuple      # (key, end_row)
    update: tuple     # (key, start_row, end_row)
    exit: tuple       # (key, start_row)
    key_fields: tuple[str, ...] | None

    def key_sets(self) -> tuple[set, set, set]:
        return ({k for k, _ in self.enter}, {k for k, _, _ in self.update},
                {k for k, _ in self.exit})


def _keyed(rows, key_fields, side: str) -> dict:
    out = {}
    for i, row in enumerate(rows):
        if key_fields is None:
            k = i
        else:
            try:
                k = tuple(row[f] for f in key_fields)
            except KeyError as exc:
                raise JoinError(f"{side} row {i} lacks key field {exc.args[0]!r}") from None
        if k in out:
            raise JoinError(f"duplicate key {k!r} in {side} rows")
        out[k] = row
    return out


def join_data(start_rows, end_rows, key_fields=None) -> JoinResult:
    """Partition rows into enter (end only), update (both) and exit (start
    only) by key; without key fields rows are matched by index."""
    kf = tuple(key_fields) if key_fields else None
    a = _keyed(start_rows, kf, "start")
    b = _keyed(end_rows, kf, "end")
    enter = tuple((k, r) for k, r in b.items() if k not in a)
    update = tuple((k, a[k], r) for k, r in b.items() if k in a)
    exit_ = tuple((k, r) for k, r in a.items() if k not in b)
    return JoinResult(enter, update, exit_, kf)


def join_aggregate(raw_rows, agg_rows, groupby) -> list[tuple[int, int]]:
    """Pair each raw row (by index) with the aggregate row of its group."""
    groups = {}
    for j, row in enumerate(agg_rows):
        groups.setdefault(tuple(row[g] for g in groupby), j)
    pairs = []
    for i, row in enumerate(raw_rows):
        key = tuple(row.get(g) for g in groupby)
        if key not in groups:
            raise JoinError(f"raw row {i} has no aggregate group {key!r}")
        pairs.append((i, groups[key]))
    return pairs


# --------------------------------------------------------------------------
# binding enumerator values

def bind_dataset(ds: DatasetDef, bindings) -> DatasetDef:
    """Replace the right-hand side of filters matched by ``bindings``."""
    transforms = list(ds.transforms)
    changed = False
    for fld, op, value in bindings:
        for i, t in enumerate(transforms):
            if isinstance(t, FilterTransform) and t.field == fld and (op is None or t.op == op):
                transforms[i] = replace(t, value=value)
                changed = True
    return replace(ds, transforms=tuple(transforms)) if changed else ds


def bind_chart(chart: ChartSpec, bindings) -> ChartSpec:
    if not bindings:
        return chart
    return replace(chart, datasets=tuple(bind_dataset(d, bindings) for d in chart.datasets))


# --------------------------------------------------------------------------
# applying one step's change

def _pick(flag, names) -> set:
    if flag is True:
        return set(names)
    if flag is False:
        return set()
    return set(flag)


def _partial_rows(init: ComponentState, tgt: ComponentState, dc: DataChange,
                  policy: KeyPolicy) -> tuple[dict, ...]:
    fields = dc.keys or policy.fields_for(tgt.mark, tgt.dataset, tgt.rows)
    if fields and init.rows and not all(f in init.rows[0] for f in fields):
        fields = None
    j = join_data(init.rows if init.present else (), tgt.rows if tgt.present else (), fields)
    rows = []
    by_key = {k: (r0, r1) for k, r0, r1 in j.update}
    for k, r in ((k, r) for k, r in _keyed(tgt.rows if tgt.present else (), j.key_fields,
                                               "end").items()):
        if k in by_key:
            rows.append(r if dc.update else by_key[k][0])
        elif dc.enter:
            rows.append(r)
    if not dc.exit:
        rows.extend(r for _, r in j.exit)
    return tuple(dict(r) for r in rows)


def _apply_mark(init, tgt, ch: ChangeSpec, policy: KeyPolicy) -> ComponentState:
    data = ch.data
    if data is True or (isinstance(data, DataChange) and data.enter and data.exit
                        and data.update):
        rows, dataset, present = tgt.rows, tgt.dataset, tgt.present
    elif data is False:
        rows, dataset, present = init.rows, init.dataset, init.present
    else:
        rows = _partial_rows(init, tgt, data, policy)
        dataset = tgt.dataset if data.update else init.dataset
        present = init.present or (tgt.present and data.enter)
        if not tgt.present and data.exit:
            present = False

    enc = dict(init.encodings)
    explicit = ch.explicit_encode
    if explicit is not None:
        for chan, doc in explicit.items():
            if doc is None:
                enc.pop(chan, None)
                continue
            try:
                e = parse_encoding(doc, chan, f"mark {init.name!r} explicit encoding")
            except ChartError as exc:
                raise ThreadingError(str(exc)) from None
            enc[chan] = e
    else:
        for chan in _pick(ch.encode, set(init.encodings) | set(tgt.encodings)):
            if chan in tgt.encodings:
                enc[chan] = tgt.encodings[chan]
            else:
                enc.pop(chan, None)

    scales = dict(init.scales)
    for n in _pick(ch.scale, tgt.scales):
        if n in tgt.scales:
            scales[n] = tgt.scales[n]
    signals = dict(init.signals)
    for n in _pick(ch.signal, tgt.signals):
        signals[n] = tgt.signals[n]
    mark = replace(init.mark, encodings=enc, dataset=dataset.name,
                   mark_type=tgt.mark_type if ch.mark_type else init.mark_type,
                   key=tgt.mark.key, order=tgt.mark.order)
    state = replace(init, present=present, mark=mark, dataset=dataset, rows=tuple(rows),
                    scales=scales, signals=signals)
    if explicit is not None:
        for chan, e in enc.items():
            if chan not in explicit:
                continue
            if e.scale is not None and e.scale not in scales:
                raise ThreadingError(f"mark {init.name!r}: explicit {chan} encoding uses scale "
                                     f"{e.scale!r}, unavailable in this step")
            if e.field is not None and rows and e.field not in rows[0]:
                raise ThreadingError(f"mark {init.name!r}: explicit {chan} encoding uses field "
                                     f"{e.field!r}, absent from this step's data")
    return state


def _apply_guide(init, tgt, ch: ChangeSpec) -> ComponentState:
    g0, g1 = init.guide, tgt.guide
    parts, title, present = set(g0.parts), g0.title, init.present
    layout = {}
    overrides = dict(init.overrides)
    layout_fields = ("orient", "tick_count") if init.kind == "axis" else ("channel",)
    explicit = ch.explicit_encode
    if explicit is not None:
        for part, attrs in explicit.items():
            if attrs is None:
                overrides.pop(part, None)
            else:
                overrides[part] = dict(attrs)
    elif ch.encode is True:
        parts, title, present, overrides = set(g1.parts), g1.title, tgt.present, {}
        layout = {f: getattr(g1, f) for f in layout_fields}
    elif ch.encode:
        for t in ch.encode:
            if t == "presence":
                present = tgt.present
            elif t == "layout":
                layout = {f: getattr(g1, f) for f in layout_fields}
            else:
                if t == "title":
                    title = g1.title
                if t in g1.parts:
                    parts.add(t)
                else:
                    parts.discard(t)
                overrides.pop(t, None)
    scales = dict(init.scales)
    applied = _pick(ch.scale, tgt.scales)
    for n in applied:
        if n in tgt.scales:
            scales[n] = tgt.scales[n]
    ref = g1.scale if g1.scale in applied else g0.scale
    signals = dict(init.signals)
    for n in _pick(ch.signal, tgt.signals):
        signals[n] = tgt.signals[n]
    guide = replace(g0, parts=frozenset(parts), title=title, scale=ref, **layout)
    return replace(init, present=present, guide=guide, overrides=overrides, scales=scales,
                   signals=signals)


def _apply_view(init, tgt, ch: ChangeSpec) -> ComponentState:
    signals = dict(init.signals)
    for n in _pick(ch.signal, tgt.signals):
        signals[n] = tgt.signals[n]
    overrides = dict(init.overrides)
    explicit = ch.explicit_encode
    if explicit is not None:
        overrides.update({k: dict(v) for k, v in explicit.items() if v is not None})
    elif ch.encode is True:
        overrides = {}
    return replace(init, signals=signals, overrides=overrides)


def apply_change(init: ComponentState, tgt: ComponentState, ch: ChangeSpec,
                 policy: KeyPolicy | None = None) -> ComponentState:
    """Final state of a step: ``tgt`` for every enabled aspect, ``init`` for
    the suppressed ones, explicit encodings overwriting the initial ones."""
    if init.kind == "mark":
        return _apply_mark(init, tgt, ch, policy or KeyPolicy())
    if init.kind in ("axis", "legend"):
        return _apply_guide(init, tgt, ch)
    return _apply_view(init, tgt, ch)


# --------------------------------------------------------------------------
# threading

@dataclass(frozen=True)
class SteppedState:
    scheduled: Any          # ScheduledStep
    initial: ComponentState
    final: ComponentState
    target: ComponentState  # the (possibly enumerator-bound) end state of the step


@dataclass
class ThreadResult:
    steps: list[SteppedState]
    initials: dict
    finals: dict


def thread_step_states(schedule, start: ChartSpec, end: ChartSpec,
                       keys: Mapping[str, KeyPolicy] | None = None) -> ThreadResult:
    """Initial and final component state for every scheduled step."""
    keys = keys or {}
    current: dict = {}
    initials: dict = {}
    busy_until: dict = {}
    bound: dict = {}
    out = []
    for ss in schedule.steps:
        step = ss.step
        if step.is_pause:
            continue
        comp = (step.component.kind, step.component.name)
        if comp in busy_until and ss.start_ms < busy_until[comp]:
            raise ThreadingError(f"overlapping steps on {step.component} "
                                 f"({ss.start_ms} ms starts before {busy_until[comp]} ms)")
        if ss.bindings not in bound:
            bound[ss.bindings] = bind_chart(end, ss.bindings)
        try:
            s0, tgt = endpoint_states(start, bound[ss.bindings], *comp)
        except KeyError as exc:
            raise ThreadingError(str(exc.args[0])) from None
        if comp not in current:
            current[comp] = initials[comp] = s0
        init = current[comp]
        final = apply_change(init, tgt, step.change, keys.get(comp[1]))
        out.append(SteppedState(ss, init, final, tgt))
        current[comp] = final
        busy_until[comp] = ss.end_ms
    return ThreadResult(out, initials, current)


# --------------------------------------------------------------------------
# constraint checks on a single state

RULES = ("Unavailable Scale", "Unavailable Data Field", "Unavailable Encoding", "Overflow")


@dataclass(frozen=True)
class Violation:
    rule: str
    component: str
    detail: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.component}: {self.detail}"


_SCALE_KINDS_FOR = {"color": ("ordinal-color",), "shape": ("ordinal",)}


def check_state(state: ComponentState) -> list[Violation]:
    """Violations of the intermediate-state rules for one component state."""
    out: list[Violation] = []
    if not state.present:
        return out
    who = f"{state.kind} {state.name}"
    if state.kind in ("axis", "legend"):
        sc = state.scales.get(state.guide.scale)
        if sc is None:
            out.append(Violation("Unavailable Scale", who, f"scale {state.guide.scale!r} missing"))
        elif state.kind == "legend" and sc.kind not in LEGEND_CHANNEL_KINDS[state.guide.channel]:
            out.append(Violation("Unavailable Scale", who,
                                 f"{sc.kind} scale cannot drive a {state.guide.channel} legend"))
        return out
    if state.kind != "mark":
        return out
    mtype = state.mark_type
    enc = state.encodings
    fields = set(state.rows[0]) if state.rows else None
    for ch, e in enc.items():
        if ch not in MARK_CHANNELS[mtype]:
            out.append(Violation("Unavailable Encoding", who, f"{ch} is not a {mtype} channel"))
            continue
        sc = None
        if e.scale is not None:
            sc = state.scales.get(e.scale)
            if sc is None:
                out.append(Violation("Unavailable Scale", who, f"{ch} uses missing scale {e.scale!r}"))
                continue
            if (ch in _SCALE_KINDS_FOR and sc.kind not in _SCALE_KINDS_FOR[ch]) or \
                    (e.band and sc.kind != "band") or \
                    (ch not in _SCALE_KINDS_FOR and sc.kind in ("ordinal-color", "ordinal")):
                out.append(Violation("Unavailable Scale", who, f"{ch} cannot use {sc.kind} scale {sc.name!r}"))
                continue
        if e.field is not None and fields is not None and e.field not in fields:
            out.append(Violation("Unavailable Data Field", who, f"{ch} uses field {e.field!r}"))
            continue
        if sc is None or e.band:
            continue
        values = [r[e.field] for r in state.rows] if e.field is not None else [e.value]
        if sc.kind in CONTINUOUS_KINDS and any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
            out.append(Violation("Unavailable Scale", who,
                                 f"{ch}: non-numeric values through {sc.kind} scale {sc.name!r}"))
            continue
        bad = [v for v in values if not in_domain(sc, v)]
        if bad:
            out.append(Violation("Overflow", who, f"{ch}={bad[0]!r} outside scale {sc.name!r}"))
    if mtype == "rect":
        if not ({"x2", "width"} & set(enc)) or not ({"y2", "height"} & set(enc)):
            out.append(Violation("Unavailable Encoding", who, "rect needs width/x2 and height/y2"))
    elif mtype == "line" and not {"x", "y"} <= set(enc):
        out.append(Violation("Unavailable Encoding", who, "line needs x and y"))
    return out


def overflows(state: ComponentState) -> bool:
    return any(v.rule == "Overflow" for v in check_state(state))


# --------------------------------------------------------------------------
# change detection

@dataclass(frozen=True)
class AtomicChange:
    component: tuple[str, str]
    kind: str
    initial: Any = None
    final: Any = None
    size_effect: Mapping[str, str] = field(default_factory=lambda: {d: "neutral" for d in DIMS})
    op: str | None = None
    dimension: str | None = None
    channels: tuple[str, ...] = ()

    @property
    def uid(self) -> str:
        return f"{self.component[0]}:{self.component[1]}:{self.kind}"

    @property
    def target(self) -> str | None:
        return self.kind.split(".", 1)[1] if "." in self.kind else None

    def to_doc(self) -> dict:
        doc = {"component": list(self.component), "kind": self.kind, "initial": self.initial,
               "final": self.final, "sizeEffect": dict(self.size_effect)}
        if self.op:
            doc["op"] = self.op
        if self.dimension:
            doc["dimension"] = self.dimension
        if self.channels:
            doc["channels"] = list(self.channels)
        return doc


@dataclass(frozen=True)
class ChangeSet:
    components: Mapping[tuple[str, str], tuple[AtomicChange, ...]]

    def all(self) -> list[AtomicChange]:
        return [c for cs in self.components.values() for c in cs]

    def __len__(self) -> int:
        return sum(len(cs) for cs in self.components.values())

    def kinds(self, comp) -> set[str]:
        return {c.kind for c in self.components.get(comp, ())}

    def to_doc(self) -> list:
        return [c.to_doc() for c in self.all()]


def scale_dimension(old, new) -> str:
    """``different`` when the backing data field changes (or, lacking
    sources, when a scale switches between continuous and discrete)."""
    if old is None or new is None:
        return "same"
    if old.domain_source is not None and new.domain_source is not None:
        return "same" if old.domain_source[1] == new.domain_source[1] else "different"
    if (old.kind in CONTINUOUS_KINDS) != (new.kind in CONTINUOUS_KINDS):
        return "different"
    return "same"


def change_spec_for(kind: str, change_kinds) -> ChangeSpec:
    """The ChangeSpec applying exactly ``change_kinds`` to a component."""
    ks = set(change_kinds)
    targets = lambda prefix: tuple(sorted(k.split(".", 1)[1] for k in ks if k.startswith(prefix)))
    signals = targets("signal.") + targets("view.")
    return ChangeSpec(
        data="data" in ks,
        encode=targets("encode."),
        scale=targets("scale."),
        domain_dimension=None,
        signal=tuple(sorted(set(signals))),
        mark_type="markType" in ks,
    )


def _extent(elements) -> tuple[float, float]:
    xs, ys = [], []
    for el in elements:
        a = el.attrs
        if "points" in a:
            for x, y in a["points"]:
                xs.append(x)
                ys.append(y)
            continue
        x, y = a.get("x", 0), a.get("y", 0)
        xs += [x, x + a.get("width", 0)]
        ys += [y, y + a.get("height", 0)]
    if not xs:
        return 0.0, 0.0
    return max(xs) - min(xs), max(ys) - min(ys)


def _effect(a: float, b: float) -> str:
    if b > a + 1e-9:
        return "expands"
    if b < a - 1e-9:
        return "shrinks"
    return "neutral"


def _size_effect(s: ComponentState, e: ComponentState, kind: str, policy) -> dict:
    if s.kind == "view":
        dim = kind.split(".", 1)[1]
        out = {d: "neutral" for d in DIMS}
        out[dim] = _effect(s.signals[dim], e.signals[dim])
        return out
    try:
        before = _extent(render_component(s, policy, strict=False))
        after_state = apply_change(s, e, change_spec_for(s.kind, {kind}), policy)
        after = _extent(render_component(after_state, policy, strict=False))
    except (ChartError, JoinError, ThreadingError, TypeError, KeyError):
        return {d: "neutral" for d in DIMS}
    return {"width": _effect(before[0], after[0]), "height": _effect(before[1], after[1])}


def _mark_changes(start, end, name, s, e, dims) -> list[AtomicChange]:
    comp = ("mark", name)
    out = []
    if s is None:
        out.append(AtomicChange(comp, "data", None, len(e.rows), op="enter"))
    elif e is None:
        out.append(AtomicChange(comp, "data", len(s.rows), None, op="exit"))
    elif s.dataset != e.dataset:
        op = "aggregate" if s.dataset.aggregate != e.dataset.aggregate else "filter"
        out.append(AtomicChange(comp, "data", len(s.rows), len(e.rows), op=op))
    encs = [x.encodings for x in (s, e) if x is not None]
    names = sorted({enc.scale for m in encs for enc in m.values() if enc.scale is not None})
    for n in names:
        a, b = start.scale(n), end.scale(n)
        if a != b:
            channels = tuple(sorted({ch for m in encs for ch, enc in m.items() if enc.scale == n}))
            out.append(AtomicChange(comp, f"scale.{n}", scale_to_doc(a) if a else None,
                                    scale_to_doc(b) if b else None,
                                    dimension=dims.get(n) or scale_dimension(a, b),
                                    channels=channels))
    if s is not None and e is not None:
        for ch in sorted(set(s.encodings) | set(e.encodings)):
            a, b = s.encodings.get(ch), e.encodings.get(ch)
            if a != b:
                out.append(AtomicChange(comp, f"encode.{ch}", a.to_doc() if a else None,
                                        b.to_doc() if b else None))
        if s.mark_type != e.mark_type:
            out.append(AtomicChange(comp, "markType", s.mark_type, e.mark_type))
    return out


def _guide_changes(start, end, kind, name, s, e, dims) -> list[AtomicChange]:
    comp = (kind, name)
    out = []
    if s is None or e is None:
        out.append(AtomicChange(comp, "encode.presence", s is not None, e is not None))
    g0 = s.guide if s is not None else None
    g1 = e.guide if e is not None else None
    ref = (g1 or g0).scale
    a = start.scale(g0.scale if g0 else ref)
    b = end.scale(ref)
    if a != b or (g0 is not None and g0.scale != ref):
        out.append(AtomicChange(comp, f"scale.{ref}", scale_to_doc(a) if a else None,
                                scale_to_doc(b) if b else None,
                                dimension=dims.get(ref) or scale_dimension(a, b)))
    if g0 is None or g1 is None:
        return out
    for part in sorted(g0.parts ^ g1.parts):
        out.append(AtomicChange(comp, f"encode.{part}", part in g0.parts, part in g1.parts))
    if g0.title != g1.title and "title" not in (g0.parts ^ g1.parts):
        out.append(AtomicChange(comp, "encode.title", g0.title, g1.title))
    fields = ("orient", "tick_count") if kind == "axis" else ("channel",)
    if any(getattr(g0, f) != getattr(g1, f) for f in fields):
        out.append(AtomicChange(comp, "encode.layout", None, None))
    for sig in DIMS:
        if s.signals[sig] == e.signals[sig]:
            continue
        moved = replace(s, signals={**s.signals, sig: e.signals[sig]})
        try:
            differs = ([x.attrs for x in render_component(s, strict=False)] !=
                       [x.attrs for x in render_component(moved, strict=False)])
        except ChartError:
            differs = True
        if differs:
            out.append(AtomicChange(comp, f"signal.{sig}", s.signals[sig], e.signals[sig]))
    return out


def detect_changes(start: ChartSpec, end: ChartSpec, options: Mapping | None = None) -> ChangeSet:
    """Atomic differences between two charts, grouped per component.

    ``options`` may carry ``dimension`` (scale name to ``same``/``different``
    overriding detection) and ``keys`` (mark name to join key fields).
    """
    options = options or {}
    dims = dict(options.get("dimension", {}))
    user_keys = dict(options.get("keys", {}))
    from .state import resolve_key_policy
    comps = {}
    for kind, name in paired_components(start, end):
        s = state_from_chart(start, kind, name)
        e = state_from_chart(end, kind, name)
        if kind == "view":
            found = [AtomicChange(("view", name), f"view.{d}", s.signals[d], e.signals[d])
                     for d in DIMS if s.signals[d] != e.signals[d]]
        elif kind == "mark":
            found = _mark_changes(start, end, name, s, e, dims)
        else:
            found = _guide_changes(start, end, kind, name, s, e, dims)
        if not found:
            continue
        policy = resolve_key_policy(start, end, name, user_keys.get(name)) if kind == "mark" else None
        s0, e0 = endpoint_states(start, end, kind, name)
        found = [replace(c, size_effect=_size_effect(s0, e0, c.kind, policy)) for c in found]
        comps[(kind, name)] = tuple(found)
    return ChangeSet(comps)


# --------------------------------------------------------------------------
# guide sub-element joins

@dataclass(frozen=True)
class GuideJoin:
    enter: tuple
    update: tuple
    exit: tuple
    cross_fade: bool


def diff_guide_data(guide, old_scale, new_scale, dimension: str | None = None) -> GuideJoin:
    """Join a guide's tick (or legend entry) values across a scale change.

    Same-dimension changes join by value; a dimension change replaces every
    old value with every new one.
    """
    from .scales import scale_ticks
    count = getattr(guide, "tick_count", 5)
    old = scale_ticks(old_scale, count) if old_scale is not None else []
    new = scale_ticks(new_scale, count) if new_scale is not None else []
    dim = dimension or scale_dimension(old_scale, new_scale)
    if dim == "different":
        return GuideJoin(tuple(new), (), tuple(old), True)
    return GuideJoin(tuple(v for v in new if v not in old), tuple(v for v in new if v in old),
                     tuple(v for v in old if v not in new), False)
