"""Transition documents: steps, changes, timing, staggering, enumerators and
the sync/concat timeline algebra.

Parsing normalises every step so downstream stages never see absent fields:
all change aspects default to ``True`` (apply the end state), delay to 0 and
ease to cubic-in-out.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Union

from . import docio
from .chart import AXIS_PARTS, CHANNELS, LEGEND_PARTS, ChartSpec, parse_comparator
from .easing import DEFAULT_EASE, EASES
from .errors import ChartError, DocumentError, GrammarError

TRANSITION_SCHEMA = ("transition", 1)
STEP_KINDS = ("mark", "axis", "legend", "view", "pause")
GUIDE_ENCODE_TARGETS = tuple(AXIS_PARTS) + tuple(p for p in LEGEND_PARTS if p not in AXIS_PARTS) \
    + ("presence", "layout")


@dataclass(frozen=True)
class Ratio:
    """A fraction of the transition's total duration."""

    value: Fraction


TimeValue = Union[Fraction, Ratio]


@dataclass(frozen=True)
class ComponentRef:
    kind: str
    name: str | None = None

    def __str__(self) -> str:
        return self.kind if self.name is None else f"{self.kind} {self.name!r}"


@dataclass(frozen=True)
class DataChange:
    keys: tuple[str, ...] | None = None
    enter: bool = True
    exit: bool = True
    update: bool = True
    enter_from_initial: bool = False


@dataclass(frozen=True)
class ChangeSpec:
    """What a step changes. ``True`` applies the end state, ``False`` keeps the
    initial state, a tuple names the subset to apply, a mapping under
    ``encode`` gives explicit intermediate encodings."""

    data: bool | DataChange = True
    encode: bool | tuple[str, ...] | Mapping[str, Any] = True
    scale: bool | tuple[str, ...] = True
    domain_dimension: str | None = None
    signal: bool | tuple[str, ...] = True
    mark_type: bool = True

    @property
    def explicit_encode(self) -> Mapping[str, Any] | None:
        return self.encode if isinstance(self.encode, Mapping) else None


NO_CHANGE = ChangeSpec(False, False, False, None, False, False)


@dataclass(frozen=True)
class TimingSpec:
    duration: TimeValue
    delay: TimeValue = Fraction(0)
    ease: str = DEFAULT_EASE
    staggering: str | None = None


@dataclass(frozen=True)
class StaggeringSpec:
    name: str
    field: str
    order: str | tuple = "ascending"
    overlap: float = 0.0
    ease: str = "linear"
    staggering: str | None = None


@dataclass(frozen=True)
class EnumeratorSpec:
    field: str
    op: str | None = None
    values: tuple | None = None
    step_size: float | None = None


@dataclass(frozen=True)
class Step:
    component: ComponentRef
    change: ChangeSpec = ChangeSpec()
    timing: TimingSpec = TimingSpec(Fraction(0))
    enumerator: EnumeratorSpec | None = None

    @property
    def is_pause(self) -> bool:
        return self.component.kind == "pause"


@dataclass(frozen=True)
class Sync:
    blocks: tuple
    at: str = "start"


@dataclass(frozen=True)
class Concat:
    blocks: tuple
    enumerator: EnumeratorSpec | None = None
    auto_scale_order: tuple[str, ...] | None = None
    # set only by enumerator expansion: the (enumerator, value) this copy is bound to
    binding: tuple | None = None


Block = Union[Step, Sync, Concat]


@dataclass(frozen=True)
class TransitionSpec:
    timeline: Block
    total_duration: Fraction | None = None
    staggerings: Mapping[str, StaggeringSpec] = field(default_factory=dict)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    path: str = ""

    def __str__(self) -> str:
        return f"[{self.code}] {self.path + ': ' if self.path else ''}{self.message}"

    def to_doc(self) -> dict:
        return {"code": self.code, "message": self.message, "path": self.path}


# --------------------------------------------------------------------------
# parsing

def _num(v: Any, where: str) -> Fraction:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise GrammarError(f"{where}: expected a number, got {v!r}")
    return Fraction(v) if isinstance(v, int) else Fraction(str(v))


def _time(v: Any, where: str, *, positive: bool) -> TimeValue:
    if isinstance(v, Mapping):
        if set(v) != {"ratio"}:
            raise GrammarError(f"{where}: a ratio time is {{'ratio': r}}")
        r = _num(v["ratio"], where)
        if not 0 < r <= 1 and not (r == 0 and not positive):
            raise GrammarError(f"{where}: ratio must be in (0, 1]")
        return Ratio(r)
    t = _num(v, where)
    if t < 0 or (positive and t <= 0):
        raise GrammarError(f"{where}: must be {'> 0' if positive else '>= 0'} ms")
    return t


def _ease(name: Any, where: str) -> str:
    if name not in EASES:
        raise GrammarError(f"{where}: unknown ease {name!r}")
    return name


def _flag_or_list(v: Any, where: str, what: str) -> bool | tuple[str, ...]:
    if isinstance(v, bool):
        return v
    if isinstance(v, list) and all(isinstance(x, str) for x in v):
        return tuple(v)
    raise GrammarError(f"{where}: {what} must be a boolean or a list of names")


def parse_change(doc: Mapping | None, where: str) -> ChangeSpec:
    if doc is None:
        return ChangeSpec()
    if not isinstance(doc, Mapping):
        raise GrammarError(f"{where}: change must be an object")
    unknown = set(doc) - {"data", "encode", "scale", "signal", "markType"}
    if unknown:
        raise GrammarError(f"{where}: unknown change entries {sorted(unknown)}")
    data: bool | DataChange = doc.get("data", True)
    if isinstance(data, Mapping):
        keys = data.get("keys")
        data = DataChange(tuple(keys) if keys is not None else None, bool(data.get("enter", True)),
                          bool(data.get("exit", True)), bool(data.get("update", True)),
                          bool(data.get("enterFromInitial", False)))
    elif not isinstance(data, bool):
        raise GrammarError(f"{where}: data must be a boolean or an object")
    encode = doc.get("encode", True)
    if isinstance(encode, Mapping):
        encode = {k: (dict(v) if isinstance(v, Mapping) else v) for k, v in encode.items()}
    else:
        encode = _flag_or_list(encode, where, "encode")
    scale = doc.get("scale", True)
    dim = None
    if isinstance(scale, Mapping):
        dim = scale.get("domainDimension")
        if dim not in (None, "same", "different"):
            raise GrammarError(f"{where}: domainDimension must be 'same' or 'different'")
        names = scale.get("names")
        scale = tuple(names) if names is not None else True
    else:
        scale = _flag_or_list(scale, where, "scale")
    signal = _flag_or_list(doc.get("signal", True), where, "signal")
    mark_type = doc.get("markType", True)
    if not isinstance(mark_type, bool):
        raise GrammarError(f"{where}: markType must be a boolean")
    return ChangeSpec(data, encode, scale, dim, signal, mark_type)


def parse_timing(doc: Mapping | None, where: str) -> TimingSpec:
    if not isinstance(doc, Mapping) or "duration" not in doc:
        raise GrammarError(f"{where}: timing with a duration is required")
    unknown = set(doc) - {"duration", "delay", "ease", "staggering"}
    if unknown:
        raise GrammarError(f"{where}: unknown timing entries {sorted(unknown)}")
    return TimingSpec(
        _time(doc["duration"], f"{where}.duration", positive=True),
        _time(doc.get("delay", 0), f"{where}.delay", positive=False),
        _ease(doc.get("ease", DEFAULT_EASE), where),
        doc.get("staggering"),
    )


def parse_enumerator(doc: Mapping | None, where: str) -> EnumeratorSpec | None:
    if doc is None:
        return None
    flt = doc.get("filter")
    if not isinstance(flt, Mapping) or "field" not in flt:
        raise GrammarError(f"{where}: enumerator needs filter.field")
    has_values, has_step = "values" in doc, "stepSize" in doc
    if has_values == has_step:
        raise GrammarError(f"{where}: enumerator needs exactly one of 'values' / 'stepSize'")
    op = flt.get("op")
    if op is not None:
        try:
            op = parse_comparator(op, where)
        except ChartError as exc:
            raise GrammarError(str(exc)) from None
    if has_values:
        values = doc["values"]
        if not isinstance(values, list):
            raise GrammarError(f"{where}: enumerator values must be a list")
        return EnumeratorSpec(flt["field"], op, tuple(values), None)
    step = doc["stepSize"]
    if isinstance(step, bool) or not isinstance(step, (int, float)) or step == 0:
        raise GrammarError(f"{where}: stepSize must be a non-zero number")
    return EnumeratorSpec(flt["field"], op, None, step)


def parse_component(doc: Any, where: str) -> ComponentRef:
    if doc == "pause":
        return ComponentRef("pause")
    if doc == "view":
        return ComponentRef("view", "view")
    if not isinstance(doc, Mapping) or len(doc) != 1:
        raise GrammarError(f"{where}: component must be 'pause', 'view' or {{kind: name}}")
    (kind, name), = doc.items()
    if kind not in STEP_KINDS or kind == "pause":
        raise GrammarError(f"{where}: unknown component kind {kind!r}")
    if not isinstance(name, str):
        raise GrammarError(f"{where}: component name must be a string")
    return ComponentRef(kind, name)


_BLOCK_KEYS = {"sync": {"sync", "at"}, "concat": {"concat", "enumerator", "autoScaleOrder"},
               "component": {"component", "change", "timing", "enumerator"}}


def parse_block(doc: Any, where: str = "timeline") -> Block:
    if not isinstance(doc, Mapping):
        raise GrammarError(f"{where}: a block must be an object")
    for kind, allowed in _BLOCK_KEYS.items():
        if kind in doc and set(doc) - allowed:
            raise GrammarError(f"{where}: unknown {kind} block entries {sorted(set(doc) - allowed)}")
    if "sync" in doc:
        blocks = doc["sync"]
        if not isinstance(blocks, list) or not blocks:
            raise GrammarError(f"{where}: sync needs a non-empty block list")
        at = doc.get("at", "start")
        if at not in ("start", "end"):
            raise GrammarError(f"{where}: sync 'at' must be 'start' or 'end'")
        return Sync(tuple(parse_block(b, f"{where}.sync[{i}]") for i, b in enumerate(blocks)), at)
    if "concat" in doc:
        blocks = doc["concat"]
        if not isinstance(blocks, list) or not blocks:
            raise GrammarError(f"{where}: concat needs a non-empty block list")
        aso = doc.get("autoScaleOrder")
        if isinstance(aso, str):
            aso = [aso]
        return Concat(tuple(parse_block(b, f"{where}.concat[{i}]") for i, b in enumerate(blocks)),
                      parse_enumerator(doc.get("enumerator"), where),
                      tuple(aso) if aso is not None else None)
    if "component" in doc:
        comp = parse_component(doc["component"], where)
        timing = parse_timing(doc.get("timing"), where)
        if comp.kind == "pause":
            if doc.get("change") is not None or doc.get("enumerator") is not None:
                raise GrammarError(f"{where}: pause steps carry no change or enumerator")
            return Step(comp, NO_CHANGE, timing, None)
        return Step(comp, parse_change(doc.get("change"), where), timing,
                    parse_enumerator(doc.get("enumerator"), where))
    raise GrammarError(f"{where}: block must contain 'sync', 'concat' or 'component'")


def parse_staggering(doc: Mapping) -> StaggeringSpec:
    name = doc.get("name")
    where = f"staggering {name!r}"
    if not isinstance(name, str):
        raise GrammarError("staggering needs a name")
    by = doc.get("by")
    if not isinstance(by, str):
        raise GrammarError(f"{where}: 'by' (data field) is required")
    order = doc.get("order", "ascending")
    if isinstance(order, list):
        order = tuple(order)
    elif order not in ("ascending", "descending"):
        raise GrammarError(f"{where}: order must be ascending, descending or a value list")
    overlap = doc.get("overlap", 0)
    if isinstance(overlap, bool) or not isinstance(overlap, (int, float)) or not 0 <= overlap <= 1:
        raise GrammarError(f"{where}: overlap must be in [0, 1], got {overlap!r}")
    return StaggeringSpec(name, by, order, float(overlap), _ease(doc.get("ease", "linear"), where),
                          doc.get("staggering"))


def iter_steps(block: Block, path: tuple[int, ...] = ()):
    """Yield ``(path, step)`` for every step in document order."""
    if isinstance(block, Step):
        yield path, block
    else:
        for i, b in enumerate(block.blocks):
            yield from iter_steps(b, path + (i,))


def iter_blocks(block: Block, path: tuple[int, ...] = ()):
    yield path, block
    if not isinstance(block, Step):
        for i, b in enumerate(block.blocks):
            yield from iter_blocks(b, path + (i,))


def _check_staggerings(spec: TransitionSpec) -> None:
    st = spec.staggerings
    for s in st.values():
        seen = [s.name]
        cur = s
        while cur.staggering is not None:
            if cur.staggering not in st:
                raise GrammarError(f"staggering {cur.name!r}: dangling nested reference {cur.staggering!r}")
            cur = st[cur.staggering]
            if cur.name in seen:
                raise GrammarError(f"staggering {s.name!r}: nested references form a cycle")
            seen.append(cur.name)
    for path, step in iter_steps(spec.timeline):
        ref = step.timing.staggering
        if ref is not None and ref not in st:
            raise GrammarError(f"step at {list(path)}: dangling staggering reference {ref!r}")


def transition_from_doc(doc: Mapping, path: str | None = None) -> TransitionSpec:
    docio.check_schema(doc, *TRANSITION_SCHEMA, path=path)
    if "timeline" not in doc:
        raise GrammarError("missing 'timeline'")
    total = doc.get("totalDuration")
    if total is not None:
        total = _num(total, "totalDuration")
        if total <= 0:
            raise GrammarError("totalDuration must be > 0")
    staggerings = {}
    for s in doc.get("staggerings", ()):
        sp = parse_staggering(s)
        if sp.name in staggerings:
            raise GrammarError(f"duplicate staggering name {sp.name!r}")
        staggerings[sp.name] = sp
    spec = TransitionSpec(parse_block(doc["timeline"]), total, staggerings)
    _check_staggerings(spec)
    return spec


def parse_transition(text: str | bytes, path: str | None = None) -> TransitionSpec:
    """Parse a transition document into a normalised TransitionSpec."""
    doc = docio.loads(text, path)
    try:
        return transition_from_doc(doc, path)
    except GrammarError as exc:
        if path:
            raise GrammarError(f"{path}: {exc}") from None
        raise
    except (TypeError, AttributeError) as exc:
        raise DocumentError(f"malformed transition document ({exc})", path=path) from None


def load_transition(path) -> TransitionSpec:
    return parse_transition(docio.read_text(path), str(path))


# --------------------------------------------------------------------------
# serialization

def _time_doc(t: TimeValue):
    if isinstance(t, Ratio):
        return {"ratio": float(t.value)}
    return int(t) if t.denominator == 1 else float(t)


def _flag_doc(v):
    return list(v) if isinstance(v, tuple) else v


def change_to_doc(c: ChangeSpec) -> dict:
    if isinstance(c.data, DataChange):
        data = {"enter": c.data.enter, "exit": c.data.exit, "update": c.data.update}
        if c.data.keys is not None:
            data["keys"] = list(c.data.keys)
        if c.data.enter_from_initial:
            data["enterFromInitial"] = True
    else:
        data = c.data
    encode = dict(c.encode) if isinstance(c.encode, Mapping) else _flag_doc(c.encode)
    if c.domain_dimension is not None:
        scale = {"domainDimension": c.domain_dimension}
        if isinstance(c.scale, tuple):
            scale["names"] = list(c.scale)
    else:
        scale = _flag_doc(c.scale)
    return {"data": data, "encode": encode, "scale": scale, "signal": _flag_doc(c.signal),
            "markType": c.mark_type}


def timing_to_doc(t: TimingSpec) -> dict:
    doc = {"duration": _time_doc(t.duration), "delay": _time_doc(t.delay), "ease": t.ease}
    if t.staggering is not None:
        doc["staggering"] = t.staggering
    return doc


def enumerator_to_doc(e: EnumeratorSpec) -> dict:
    flt = {"field": e.field}
    if e.op is not None:
        flt["op"] = e.op
    doc: dict[str, Any] = {"filter": flt}
    if e.values is not None:
        doc["values"] = list(e.values)
    else:
        doc["stepSize"] = e.step_size
    return doc


def block_to_doc(b: Block) -> dict:
    if isinstance(b, Sync):
        return {"sync": [block_to_doc(x) for x in b.blocks], "at": b.at}
    if isinstance(b, Concat):
        doc = {"concat": [block_to_doc(x) for x in b.blocks]}
        if b.enumerator is not None:
            doc["enumerator"] = enumerator_to_doc(b.enumerator)
        if b.auto_scale_order is not None:
            doc["autoScaleOrder"] = list(b.auto_scale_order)
        return doc
    if b.is_pause:
        return {"component": "pause", "timing": timing_to_doc(b.timing)}
    doc = {"component": {b.component.kind: b.component.name}, "change": change_to_doc(b.change),
           "timing": timing_to_doc(b.timing)}
    if b.enumerator is not None:
        doc["enumerator"] = enumerator_to_doc(b.enumerator)
    return doc


def staggering_to_doc(s: StaggeringSpec) -> dict:
    doc = {"name": s.name, "by": s.field, "order": list(s.order) if isinstance(s.order, tuple) else s.order,
           "overlap": s.overlap, "ease": s.ease}
    if s.staggering is not None:
        doc["staggering"] = s.staggering
    return doc


def transition_to_doc(spec: TransitionSpec) -> dict:
    doc = {"schema": docio.schema_tag(*TRANSITION_SCHEMA), "timeline": block_to_doc(spec.timeline),
           "staggerings": [staggering_to_doc(s) for s in spec.staggerings.values()]}
    if spec.total_duration is not None:
        doc["totalDuration"] = _time_doc(spec.total_duration)
    return doc


def serialize_transition(spec: TransitionSpec, *, pretty: bool = False) -> str:
    return docio.dumps(transition_to_doc(spec), pretty=pretty)


# --------------------------------------------------------------------------
# validation

def _uses_ratio(step: Step) -> bool:
    return isinstance(step.timing.duration, Ratio) or isinstance(step.timing.delay, Ratio)


def _dataset_fields(chart: ChartSpec, mark_name: str) -> set[str] | None:
    m = chart.mark(mark_name)
    if m is None:
        return None
    ds = chart.dataset(m.dataset)
    fields = set(ds.rows[0]) if ds.rows else set()
    return fields


def validate_transition(spec: TransitionSpec, start: ChartSpec, end: ChartSpec,
                        total_duration=None) -> list[Diagnostic]:
    """Diagnostics for ``spec`` against a chart pair; empty means compilable.

    Static checks run first. When they pass, the timeline is dry-run through
    the scheduler and state threading so that any resolution error surfaces
    here as a diagnostic instead of later.
    """
    diags: list[Diagnostic] = []
    total = total_duration if total_duration is not None else spec.total_duration

    def resolves(kind: str, name: str) -> bool:
        return start.component(kind, name) is not None or end.component(kind, name) is not None

    for path, step in iter_steps(spec.timeline):
        where = "timeline" + "".join(f"[{i}]" for i in path)
        comp = step.component
        if not step.is_pause and comp.kind != "view" and not resolves(comp.kind, comp.name):
            diags.append(Diagnostic("unknown-component",
                                    f"{comp} is in neither the start nor the end chart", where))
            continue
        if _uses_ratio(step) and total is None:
            diags.append(Diagnostic("missing-total",
                                    "ratio timing needs a root totalDuration", where))
        if step.enumerator is not None:
            if comp.kind != "mark":
                diags.append(Diagnostic("enumerator-target", "step enumerators apply to marks only", where))
            else:
                for side, chart in (("start", start), ("end", end)):
                    fields = _dataset_fields(chart, comp.name)
                    if fields is not None and step.enumerator.field not in fields:
                        diags.append(Diagnostic(
                            "enumerator-field",
                            f"field {step.enumerator.field!r} not in the {side} dataset of {comp}", where))
        ch = step.change
        if comp.kind in ("axis", "legend") and isinstance(ch.encode, tuple):
            bad = [t for t in ch.encode if t not in GUIDE_ENCODE_TARGETS]
            if bad:
                diags.append(Diagnostic("encode-target", f"unknown guide sub-elements {bad}", where))
        if comp.kind == "mark" and not isinstance(ch.encode, bool):
            names = ch.encode if isinstance(ch.encode, tuple) else tuple(ch.encode)
            bad = [t for t in names if t not in CHANNELS]
            if bad:
                diags.append(Diagnostic("encode-target", f"unknown channels {bad}", where))
        if isinstance(ch.scale, tuple):
            bad = [s for s in ch.scale if start.scale(s) is None and end.scale(s) is None]
            if bad:
                diags.append(Diagnostic("unknown-scale", f"scales {bad} are in neither chart", where))
    for path, block in iter_blocks(spec.timeline):
        where = "timeline" + "".join(f"[{i}]" for i in path)
        if isinstance(block, Concat):
            for name in block.auto_scale_order or ():
                if start.mark(name) is None and end.mark(name) is None:
                    diags.append(Diagnostic("auto-scale-order",
                                            f"autoScaleOrder names unknown mark {name!r}", where))
            if block.enumerator is not None:
                f = block.enumerator.field
                if not any(f in (set(d.rows[0]) if d.rows else set())
                           for c in (start, end) for d in c.datasets):
                    diags.append(Diagnostic("enumerator-field",
                                            f"concat enumerator field {f!r} is in no dataset", where))
    if diags:
        return diags
    # dry run: anything the scheduler, change fetcher or compiler rejects is a diagnostic
    from .errors import AnimtxError
    from .plan import compile_plan  # local import: plan depends on this module
    try:
        compile_plan(start, end, spec, total)
    except AnimtxError as exc:
        diags.append(Diagnostic("unresolvable", str(exc)))
    return diags
